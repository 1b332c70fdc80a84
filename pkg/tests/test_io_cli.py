import subprocess
import sys

import numpy as np
import pytest

from obsctl import io
from obsctl.cli import main
from obsctl.mesh import Domain, build_uniform_mesh

SMALL = ["-N", "8", "--gamma-max", "1e3"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


# --- io ------------------------------------------------------------------------

def test_fmt():
    assert io.fmt(-5.50686291e-04) == "-5.50686291e-04"
    assert io.fmt(float("inf")) == "inf" and io.fmt(-float("inf")) == "-inf"
    assert io.fmt(0) == "0.00000000e+00"


def test_field_csv_roundtrip(tmp_path):
    mesh = build_uniform_mesh(Domain.L_SHAPE, 3)
    v = np.random.default_rng(0).standard_normal(mesh.n_vertices)
    io.write_field_csv(tmp_path / "f.csv", mesh, v)
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == mesh.n_vertices + 1
    np.testing.assert_array_equal(io.read_field_csv(tmp_path / "f.csv", mesh), v)
    with pytest.raises(io.MeshMismatchError):
        io.read_field_csv(tmp_path / "f.csv", build_uniform_mesh(Domain.L_SHAPE, 4))
    with pytest.raises(io.MeshMismatchError):
        io.write_field_csv(tmp_path / "g.csv", mesh, v[:-1])


def test_vtk_layout(tmp_path):
    mesh = build_uniform_mesh(Domain.UNIT_SQUARE, 2)
    io.write_vtk(tmp_path / "z.vtk", mesh, {"y": np.zeros(mesh.n_vertices)})
    text = (tmp_path / "z.vtk").read_text().splitlines()
    assert text[0].startswith("# vtk DataFile") and "DATASET UNSTRUCTURED_GRID" in text
    assert f"POINTS {mesh.n_vertices} double" in text
    assert f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}" in text
    i = text.index(f"CELL_TYPES {mesh.n_triangles}")
    assert text[i + 1:i + 1 + mesh.n_triangles] == ["5"] * mesh.n_triangles
    j = text.index(f"POINT_DATA {mesh.n_vertices}")
    assert text[j + 1:j + 3] == ["SCALARS y double 1", "LOOKUP_TABLE default"]
    assert [float(t) for t in text[j + 3:]] == [0.0] * mesh.n_vertices


def test_read_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nalpha = 0.1\n\ngamma-max = 1e4  # trailing\nf = -0.1\n")
    assert io.read_config(p) == {"alpha": "0.1", "gamma_max": "1e4", "f": "-0.1"}
    p.write_text("alpha 0.1\n")
    with pytest.raises(ValueError):
        io.read_config(p)


# --- cli -----------------------------------------------------------------------

def test_solve_zero_problem(capsys):
    code, out, _ = run(["solve", "--alpha", "0.1", "--psi", "0", "--f", "0", "--y0", "0"] + SMALL,
                       capsys)
    assert code == 0
    rows = table(out)
    assert [float(r["gamma"]) for r in rows] == [1.0, 10.0, 100.0, 1000.0]
    assert all(float(r["eta"]) == 0.0 and r["verdict"] == "CertifiedUnique" for r in rows)
    assert list(rows[0]) == list(io.RESULT_COLUMNS)
    a, lam = 0.1, 2 * np.pi ** 2
    assert float(rows[0]["threshold"]) == pytest.approx(a * lam + np.sqrt(a * a * lam * lam + a),
                                                        rel=1e-8)


def test_solve_writes_file_and_fields(tmp_path, capsys):
    out = tmp_path / "res.csv"
    code, _, _ = run(["solve", "--example", "1", "-o", str(out), "--fields", str(tmp_path / "f")]
                     + SMALL, capsys)
    assert code == 0
    rows = io.read_results(out)
    assert len(rows) == 4 and all(r["verdict"] == "CertifiedUnique" for r in rows)
    assert {p.name for p in (tmp_path / "f").iterdir()} == {
        f"{n}.{e}" for n in ("u", "y", "p", "xi", "mu") for e in ("csv", "vtk")}


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0.1\nf = -0.1\ny0 = -(5*x1 + x2 - 1)\n"
                   "psi = -4*(x1*(x1-1) + x2*(x2-1)) - 1.5\nN = 8\ngamma_max = 1e2\n")
    code, out, _ = run(["solve", "--config", str(cfg)], capsys)
    assert code == 0 and len(table(out)) == 3
    code, out, _ = run(["solve", "--config", str(cfg), "--gamma-max", "1e4"], capsys)
    assert code == 0 and len(table(out)) == 5
    cfg.write_text("alhpa = 0.1\n")
    assert run(["solve", "--config", str(cfg)], capsys)[0] == 2


def test_bad_input_exit_codes(capsys):
    code, _, err = run(["solve", "--f", "sin(", "-N", "4", "--gamma-max", "1"], capsys)
    assert code == 2 and "obsctl" in err
    assert run(["solve", "-N", "1", "--gamma-max", "1"], capsys)[0] == 2
    assert run(["solve", "--alpha", "0", "-N", "4", "--gamma-max", "1"], capsys)[0] == 2
    assert run(["solve", "--gamma-start", "0.1", "-N", "4"], capsys)[0] == 2


def test_export_and_certify(tmp_path, capsys):
    d = tmp_path / "fields"
    code, _, _ = run(["export", "--example", "2", "-N", "8", "--gamma", "1e4", "--out", str(d)],
                     capsys)
    assert code == 0
    mesh = build_uniform_mesh(Domain.UNIT_SQUARE, 8)
    for name in ("u", "y", "p", "xi", "mu"):
        v = io.read_field_csv(d / f"{name}.csv", mesh)
        assert np.all(np.isfinite(v))
    assert np.all(io.read_field_csv(d / "xi.csv", mesh) >= 0)
    base = ["certify", "--example", "2", "-N", "8", "--y", str(d / "y.csv"), "--p", str(d / "p.csv")]
    code, out, _ = run(base, capsys)
    assert code == 0 and "CertifiedUnique" in out
    eta = float(out.split()[1])
    # the multiplier form of the test gives the same eta
    code, out2, _ = run(base + ["--xi", str(d / "xi.csv"), "--mu", str(d / "mu.csv")], capsys)
    assert code == 0 and float(out2.split()[1]) == pytest.approx(eta, rel=1e-12)
    # and agrees with the solve table at the same penalty
    code, out3, _ = run(["solve", "--example", "2", "-N", "8", "--gamma-max", "1e4"], capsys)
    assert float(table(out3)[-1]["eta"]) == pytest.approx(eta, rel=1e-7)


def test_certify_zero_and_violating_fields(tmp_path, capsys):
    mesh = build_uniform_mesh(Domain.UNIT_SQUARE, 4)
    zero = np.zeros(mesh.n_vertices)
    io.write_field_csv(tmp_path / "z.csv", mesh, zero)
    args = ["certify", "-N", "4", "--alpha", "0.1"]
    code, out, _ = run(args + ["--y", str(tmp_path / "z.csv"), "--p", str(tmp_path / "z.csv")],
                       capsys)
    assert code == 0 and "CertifiedUnique" in out
    y = zero.copy()
    y[:mesh.n_interior] = 1.0
    p = zero.copy()
    p[0] = -100.0
    io.write_field_csv(tmp_path / "y.csv", mesh, y)
    io.write_field_csv(tmp_path / "p.csv", mesh, p)
    code, out, _ = run(args + ["--y", str(tmp_path / "y.csv"), "--p", str(tmp_path / "p.csv")],
                       capsys)
    assert code == 1 and "NotCertified" in out
    code, _, err = run(["certify", "-N", "5", "--y", str(tmp_path / "y.csv"),
                        "--p", str(tmp_path / "p.csv")], capsys)
    assert code == 3 and "match" in err


def test_eig(capsys):
    code, out, _ = run(["eig", "--alpha", "0.1", "-N", "16"], capsys)
    assert code == 0
    lam = float(out.split()[1])
    assert 2 * np.pi ** 2 < lam < 2 * np.pi ** 2 * 1.02
    assert "threshold" in out


def test_mesh_info(tmp_path, capsys):
    code, out, _ = run(["mesh-info", "--domain", "lshape", "-N", "2", "--nodes",
                        str(tmp_path / "n.txt"), "--elements", str(tmp_path / "e.txt")], capsys)
    assert code == 0
    info = dict(line.split(None, 1) for line in out.strip().splitlines())
    assert info["vertices"].strip() == "21" and info["triangles"].strip() == "24"
    assert (tmp_path / "e.txt").exists()


def test_module_entry_point_is_deterministic(tmp_path):
    cmd = [sys.executable, "-m", "obsctl", "solve", "--example", "4", "-N", "8",
           "--gamma-max", "1e6"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"gamma,")
