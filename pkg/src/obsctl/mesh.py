"""Uniform triangulations of the unit square and the L-shaped domain."""

import enum
from dataclasses import dataclass

import numpy as np


class Domain(enum.Enum):
    UNIT_SQUARE = "square"
    L_SHAPE = "lshape"

    @property
    def area(self):
        return 1.0 if self is Domain.UNIT_SQUARE else 3.0

    @property
    def bbox(self):
        """(xmin, ymin, xmax, ymax) of the closure."""
        if self is Domain.UNIT_SQUARE:
            return (0.0, 0.0, 1.0, 1.0)
        return (-1.0, -1.0, 1.0, 1.0)

    def contains_cell(self, x, y):
        """Whether the grid cell with lower-left corner (x, y) lies inside."""
        if self is Domain.UNIT_SQUARE:
            return True
        # (-1,0)x(-1,1) union [0,1)x(0,1)
        return x < 0.0 or y >= 0.0

    def on_boundary(self, x, y, tol=1e-12):
        """Geometric boundary test, vectorized over coordinate arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xmin, ymin, xmax, ymax = self.bbox
        outer = ((np.abs(x - xmin) <= tol) | (np.abs(x - xmax) <= tol)
                 | (np.abs(y - ymin) <= tol) | (np.abs(y - ymax) <= tol))
        if self is Domain.UNIT_SQUARE:
            return outer
        # reentrant edges: {0} x [-1, 0] and [0, 1] x {0}
        inner = ((np.abs(x) <= tol) & (y <= tol)) | ((np.abs(y) <= tol) & (x >= -tol))
        return outer | inner

    @classmethod
    def parse(cls, name):
        key = name.strip().lower().replace("-", "").replace("_", "")
        aliases = {"square": cls.UNIT_SQUARE, "unitsquare": cls.UNIT_SQUARE,
                   "lshape": cls.L_SHAPE, "l": cls.L_SHAPE}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown domain {name!r}") from None


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with interior vertices numbered first.

    ``vertices[:n_interior]`` are the interior nodes x_1..x_n, the remaining
    ones lie on the boundary.  Triangles are counter-clockwise.
    """

    domain: Domain
    subdivisions: int
    vertices: np.ndarray
    triangles: np.ndarray
    n_interior: int
    h: float

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def interior_ids(self):
        return np.arange(self.n_interior)

    @property
    def boundary_ids(self):
        return np.arange(self.n_interior, self.n_vertices)

    def extend(self, interior_values):
        """Zero-extend an interior vector to all vertices."""
        out = np.zeros(self.n_vertices)
        out[:self.n_interior] = interior_values
        return out

    def areas(self):
        v = self.vertices
        t = self.triangles
        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def build_uniform_mesh(domain, N):
    """Split every grid cell of side 1/N along its lower-left to upper-right diagonal.

    Vertices are ordered interior first, then boundary; within each group
    lexicographically by (x2, x1).  A vertex is interior iff all four grid
    cells around it belong to the domain.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    xmin, ymin, xmax, ymax = domain.bbox
    nx = int(round((xmax - xmin) * N))
    ny = int(round((ymax - ymin) * N))

    inside = np.zeros((nx, ny), dtype=bool)
    for i in range(nx):
        for j in range(ny):
            inside[i, j] = domain.contains_cell(xmin + i / N, ymin + j / N)

    # cell (i, j) touches grid points (i..i+1, j..j+1)
    padded = np.zeros((nx + 2, ny + 2), dtype=bool)
    padded[1:-1, 1:-1] = inside
    touching = (padded[:-1, :-1].astype(int) + padded[1:, :-1] + padded[:-1, 1:] + padded[1:, 1:])
    used = touching > 0
    interior = touching == 4

    gi, gj = np.nonzero(used)
    # lexicographic by (x2, x1): sort on j then i
    order = np.lexsort((gi, gj))
    gi, gj = gi[order], gj[order]
    is_int = interior[gi, gj]
    gi = np.concatenate([gi[is_int], gi[~is_int]])
    gj = np.concatenate([gj[is_int], gj[~is_int]])

    index = -np.ones((nx + 1, ny + 1), dtype=np.int64)
    index[gi, gj] = np.arange(gi.size)
    vertices = np.column_stack([xmin + gi / N, ymin + gj / N])

    ci, cj = np.nonzero(inside)
    corder = np.lexsort((ci, cj))
    ci, cj = ci[corder], cj[corder]
    ll = index[ci, cj]
    lr = index[ci + 1, cj]
    ur = index[ci + 1, cj + 1]
    ul = index[ci, cj + 1]
    tris = np.empty((2 * ci.size, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([ll, lr, ur])
    tris[1::2] = np.column_stack([ll, ur, ul])

    return Mesh(domain=domain, subdivisions=N, vertices=vertices, triangles=tris,
                n_interior=int(is_int.sum()), h=np.sqrt(2.0) / N)


def locate_node(mesh, point, tol=1e-12):
    """Index of the vertex within ``tol`` of ``point``, or None."""
    d = np.abs(mesh.vertices - np.asarray(point, dtype=float)).max(axis=1)
    k = int(np.argmin(d))
    return k if d[k] <= tol else None


def write_mesh(mesh, nodes_path, elements_path):
    """Plain-text export: one "x y" line per vertex, one "i j k" line per triangle (0-based)."""
    with open(nodes_path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
    with open(elements_path, "w") as fh:
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh_vertices(nodes_path):
    return np.loadtxt(nodes_path, ndmin=2)
