"""Results tables, nodal field files (CSV and legacy VTK) and key=value configs."""

import csv
import math

import numpy as np

RESULT_COLUMNS = ("gamma", "min_ratio_pos", "min_ratio_neg", "eta", "min_violation",
                  "newton_iters", "threshold", "kappa", "verdict")


class MeshMismatchError(ValueError):
    pass


def fmt(x):
    """Fixed 8-digit scientific notation; infinities spelled inf/-inf."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.8e}"


def result_row(solution, cert):
    return [fmt(solution.gamma), fmt(cert.min_ratio_pos), fmt(cert.min_ratio_neg),
            fmt(cert.eta), fmt(solution.min_violation), str(solution.newton_iters),
            fmt(cert.threshold), fmt(cert.kappa), str(cert.verdict)]


def write_results(path_or_file, rows):
    """Write the results table; ``rows`` are lists of already formatted strings."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        w.writerows(rows)

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def read_results(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_field_csv(path, mesh, values):
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise MeshMismatchError(f"field has {values.size} values, mesh has {mesh.n_vertices} vertices")
    with open(path, "w", newline="") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(mesh.vertices, values):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def read_field_csv(path, mesh=None, tol=1e-12):
    """Read a field written by :func:`write_field_csv`.

    With ``mesh`` given, coordinates must match its vertices in order.
    Returns the values array.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected columns x,y,value")
    if mesh is not None:
        if data.shape[0] != mesh.n_vertices or \
                np.abs(data[:, :2] - mesh.vertices).max(initial=0.0) > tol:
            raise MeshMismatchError(f"{path}: coordinates do not match the mesh")
    return data[:, 2].copy()


def write_vtk(path, mesh, fields, title="obsctl field"):
    """Legacy ASCII VTK unstructured grid with one or more POINT_DATA scalars."""
    nv, nt = mesh.n_vertices, mesh.n_triangles
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"3 {i} {j} {k}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write("5\n" * nt)
        fh.write(f"POINT_DATA {nv}\n")
        for name, values in fields.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (nv,):
                raise MeshMismatchError(f"field {name!r} has wrong length {values.size}")
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in values:
                fh.write(f"{v:.17g}\n")


def read_config(path):
    """Flat ``key = value`` file; '#' starts a comment, blank lines ignored."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out
