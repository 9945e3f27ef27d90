import math

import numpy as np
import pytest

from meshftle.cli import RunConfig, main
from meshftle.kernel import read_field


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def mesh2d(tmp_path, capsys):
    c, f = tmp_path / "c.txt", tmp_path / "f.txt"
    code, _, _ = run(capsys, "generate-mesh", "--dim", "2", "--nx", "11", "--ny", "9",
                     "--out-coords", str(c), "--out-faces", str(f))
    assert code == 0
    return str(c), str(f)


def test_generate_mesh_counts_2d(capsys):
    code, out, _ = run(capsys, "generate-mesh", "--dim", "2", "--nx", "3162", "--ny", "3162",
                       "--xmin", "0", "--xmax", "2", "--ymin", "0", "--ymax", "1")
    assert code == 0
    assert out.split() == ["points", "9998244", "triangles", "19983842"]


def test_generate_mesh_counts_3d(capsys):
    code, out, _ = run(capsys, "generate-mesh", "--dim", "3", "--nx", "100", "--ny", "100", "--nz", "100")
    assert code == 0
    assert out.split() == ["points", "1000000", "tetrahedra", "5821794"]


def test_generate_mesh_rejects_single_column(capsys):
    code, _, err = run(capsys, "generate-mesh", "--dim", "2", "--nx", "1")
    assert code != 0 and "error" in err


def test_identity_flowmap_copies_coords(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    fm = tmp_path / "fm.txt"
    assert run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "identity", "--out", str(fm))[0] == 0
    assert fm.read_text() == open(c).read()


def test_double_gyre_flowmap_finite(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    fm = tmp_path / "fm.txt"
    code, _, _ = run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "double-gyre",
                     "--t0", "0", "--t1", "15", "--steps", "150", "--out", str(fm))
    assert code == 0
    body = np.loadtxt(fm, skiprows=1)
    assert body.shape == (99, 2) and np.isfinite(body).all()


def test_abc_on_2d_mesh_fails(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    code, _, err = run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "abc",
                       "--out", str(tmp_path / "fm.txt"))
    assert code != 0 and "3D" in err


def test_compute_identity_is_zero(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    fm, out = tmp_path / "fm.txt", tmp_path / "field.txt"
    run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "identity", "--out", str(fm))
    code, stdout, _ = run(capsys, "compute", "--coords", c, "--faces", f, "--flowmap", str(fm),
                          "--t-eval", "1", "--out-field", str(out))
    assert code == 0 and "degenerate 0" in stdout
    vals = read_field(out)
    assert vals.size == 99 and np.abs(vals).max() <= 1e-12


def test_compute_workers_byte_identical(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    fm = tmp_path / "fm.txt"
    run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "double-gyre",
        "--steps", "60", "--out", str(fm))
    outs = []
    for w in ("1", "4"):
        out = tmp_path / f"field{w}.txt"
        times = tmp_path / f"times{w}.csv"
        code, _, _ = run(capsys, "compute", "--coords", c, "--faces", f, "--flowmap", str(fm),
                         "--t-eval", "15", "--workers", w, "--out-field", str(out), "--out-times", str(times))
        assert code == 0
        assert times.read_text().splitlines()[0] == "stage,workers,run,seconds"
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_compute_affine_stretch(tmp_path, capsys):
    c, f, fm, out = (str(tmp_path / n) for n in ("c", "f", "fm", "out"))
    run(capsys, "generate-mesh", "--dim", "2", "--nx", "21", "--ny", "21", "--out-coords", c, "--out-faces", f)
    e = math.exp(1.0)
    run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "affine",
        "--matrix", f"{e!r},0,0,{1 / e!r}", "--out", fm)
    assert run(capsys, "compute", "--coords", c, "--faces", f, "--flowmap", fm, "--t-eval", "2", "--out-field", out)[0] == 0
    vals = read_field(out).reshape(21, 21)
    np.testing.assert_allclose(vals[1:-1, 1:-1], 0.5, atol=1e-9)


def test_compute_reports_bad_inputs(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    code, _, err = run(capsys, "compute", "--coords", c, "--faces", f, "--flowmap", str(tmp_path / "missing"),
                       "--t-eval", "1")
    assert code != 0 and err.startswith("error:")
    code, _, _ = run(capsys, "compute", "--coords", c, "--faces", f, "--flowmap", c, "--t-eval", "-1")
    assert code != 0


def test_bench_writes_means(tmp_path, capsys, mesh2d):
    c, f = mesh2d
    fm, times = tmp_path / "fm.txt", tmp_path / "t.csv"
    run(capsys, "generate-flowmap", "--coords", c, "--faces", f, "--flow", "identity", "--out", str(fm))
    code, out, _ = run(capsys, "bench", "--coords", c, "--faces", f, "--flowmap", str(fm), "--t-eval", "1",
                       "--workers", "1,2", "--repeats", "2", "--out-times", str(times))
    assert code == 0
    rows = times.read_text().splitlines()
    assert len(rows) == 1 + 2 * 2 * 2 + 4
    assert out.count("mean") == 4


@pytest.mark.parametrize("speeds,work,split,makespan", [
    ("4,4,1,1", 1000, 4, "250"),
    ("4,4", 1000, 2, "125"),
    ("1", 1000, 1, "1000"),
])
def test_simulate_makespan(capsys, speeds, work, split, makespan):
    code, out, _ = run(capsys, "simulate", "--speeds", speeds, "--work", str(work), "--split", str(split))
    assert code == 0
    assert out.splitlines()[-1] == f"makespan {makespan}"
    assert "dependencies 0" in out


def test_simulate_kernel_submissions(capsys, mesh2d):
    c, f = mesh2d
    code, out, _ = run(capsys, "simulate", "--speeds", "2,1", "--coords", c, "--faces", f)
    assert code == 0
    assert out.count(" preprocess region") == 2 and out.count(" ftle region") == 2


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("c", "f", "m", t_eval=0.0)
    with pytest.raises(ValueError):
        RunConfig("c", "f", "m", t_eval=1.0, repeats=0)
    with pytest.raises(ValueError):
        RunConfig("c", "f", "m", t_eval=1.0, used_workers=3, max_workers=2)
