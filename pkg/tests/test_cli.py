import math
import os
import subprocess
import sys

import numpy as np
import pytest

from kgzfem import __version__
from kgzfem.cli import main, snapshot_name


def body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_convergence_schema(tmp_path):
    out = tmp_path / "conv.csv"
    assert main(["convergence", "--problem", "mms2d", "--M", "4", "--M", "8", "--T", "0.25",
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith(f"# kgzfem {__version__}\n")
    header, r1, r2 = body(text)
    cols = header.split(",")
    assert cols[:4] == ["M", "h", "tau", "err_Ihu_H1"] and len(cols) == 15
    assert cols[4::2] == ["rate"] * 6
    c1, c2 = r1.split(","), r2.split(",")
    assert len(c1) == len(c2) == 15
    assert all(c == "" for c in c1[4::2])
    assert all(c != "" for c in c2)
    assert c1[0] == "4" and float(c1[1]) == 0.25
    # 12 significant digits, scientific
    assert all(len(c.split("e")[0].replace(".", "").lstrip("-")) == 12 for c in c2[1:])


def test_convergence_is_deterministic(tmp_path):
    args = ["convergence", "--problem", "mms2d", "--M", "4", "--M", "8", "--T", "0.25", "--out"]
    out = tmp_path / "a.csv"
    main(args + [str(out)])
    first = out.read_bytes()
    main(args + [str(out)])
    assert out.read_bytes() == first


def test_convergence_rejections(tmp_path, capsys):
    assert main(["convergence", "--problem", "waves2d", "--M", "8"]) == 2
    assert "exact solution" in capsys.readouterr().err
    assert main(["convergence", "--problem", "mms2d"]) == 2  # empty M list
    assert "mesh.M" in capsys.readouterr().err
    assert main(["convergence", "--problem", "mms2d", "--M", "5", "--M", "10"]) == 2
    assert "postprocessing unavailable" in capsys.readouterr().err


def test_usage_error_from_argparse():
    with pytest.raises(SystemExit) as info:
        main(["convergence", "--problem", "nope"])
    assert info.value.code == 2


def test_energy_log(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["energy", "--problem", "energy2d", "--M", "8", "--T", "0.05", "--out", str(out)]) == 0
    text = out.read_text()
    rows = body(text)
    assert rows[0].split(",") == ["n", "t", "grad_u", "l2_u", "l2_p", "half_l2_varphi", "half_grad_phi",
                                  "half_l4_u", "cross", "total", "drift"]
    assert len(rows) == 1 + 6
    assert "tau = 0.01" in text  # problem default
    summary = text.strip().splitlines()[-1]
    assert summary.startswith("# max_drift = ")
    rel = float(summary.split("max_relative_drift = ")[1])
    assert rel <= 1e-10
    totals = [float(r.split(",")[9]) for r in rows[1:]]
    assert max(totals) - min(totals) <= 1e-10 * abs(totals[0])


def test_energy_zero_steps_and_bad_tau(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["energy", "--problem", "energy2d", "--M", "8", "--T", "0", "--out", str(out)]) == 0
    assert len(body(out.read_text())) == 2
    assert main(["energy", "--problem", "energy2d", "--M", "8", "--tau", "0"]) == 2
    assert main(["energy", "--problem", "mms2d", "--M", "8"]) == 2


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


def test_config_minimal_defaults(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[problem]\nname = mms2d\n[mesh]\nM = 4, 8\n[time]\nT = 0.25\n")
    out = tmp_path / "o.csv"
    assert main(["convergence", "--config", cfg, "--out", str(out)]) == 0
    text = out.read_text()
    assert "# tau = h\n" in text and "# picard_tol = 1e-12\n" in text
    assert len(body(text)) == 3


def test_config_unknown_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.ini", "[problem]\nname = mms2d\n[mesh]\nM = 4\n[time]\ntua = h\n")
    assert main(["convergence", "--config", cfg]) == 2
    assert "time.tua" in capsys.readouterr().err
    cfg = write_cfg(tmp_path / "d.ini", "[problm]\nname = mms2d\n")
    assert main(["convergence", "--config", cfg]) == 2
    assert "[problm]" in capsys.readouterr().err


def test_config_missing_keys_listed_together(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.ini", "[time]\ntau = h\n")
    assert main(["convergence", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "problem.name" in err and "mesh.M" in err


def test_flag_overrides_config(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", "[problem]\nname = energy2d\n[mesh]\nM = 8\n"
                                        "[time]\ntau = 0.05\nT = 0.1\n[solver]\ncg_tol = 1e-11\n")
    out = tmp_path / "e.csv"
    assert main(["energy", "--config", cfg, "--tau", "0.025", "--out", str(out)]) == 0
    text = out.read_text()
    assert "# tau = 0.025\n" in text and "# cg_tol = 1e-11\n" in text
    assert len(body(text)) == 1 + 5


def test_solver_failure_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.ini", "[problem]\nname = energy2d\n[mesh]\nM = 8\n"
                                        "[time]\ntau = 0.1\nT = 0.2\n[solver]\nmax_picard_iters = 1\n")
    assert main(["energy", "--config", cfg, "--out", str(tmp_path / "e.csv")]) == 3
    assert "solver failure" in capsys.readouterr().err
    assert "aborted" in (tmp_path / "e.csv").read_text()


def read_vtk(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII" and lines[3] == "DATASET STRUCTURED_POINTS"
    dims = [int(v) for v in lines[4].split()[1:]]
    npts = int(lines[7].split()[1])
    fields, i = {}, 8
    while i < len(lines):
        name = lines[i].split()[1]
        fields[name] = np.array([float(v) for v in lines[i + 2:i + 2 + npts]])
        i += 2 + npts
    return dims, npts, fields


def test_simulate_snapshots(tmp_path):
    out = tmp_path / "snaps"
    assert main(["simulate", "--problem", "waves2d", "--M", "40", "--tau", "const:0.05", "--T", "0.2",
                 "--snapshots", "0:0.2:0.1", "--out", str(out)]) == 0
    files = sorted(p.name for p in out.glob("*.vtk"))
    expect = sorted(snapshot_name("waves2d", 40, t) for t in (0.0, 0.1, 0.2))
    assert files == expect
    dims, npts, fields = read_vtk(out / snapshot_name("waves2d", 40, 0.0))
    assert dims == [41, 41, 1] and npts == 41 * 41
    assert set(fields) == {"abs_u", "re_u", "im_u", "varphi"}
    peak = fields["abs_u"].max()
    # Ritz projection of the data, so close to (not exactly) |1 + i/2|
    assert abs(peak - math.sqrt(1.25)) < 0.05 * math.sqrt(1.25)
    meta = (out / "waves2d_M40_meta.txt").read_text()
    assert meta.startswith("# kgzfem") and "# status = ok" in meta


def test_simulate_no_snapshots_writes_metadata_only(tmp_path):
    out = tmp_path / "snaps"
    assert main(["simulate", "--problem", "energy2d", "--M", "8", "--T", "0.02", "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["energy2d_M8_meta.txt"]


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_simulate_unwritable(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    assert main(["simulate", "--problem", "energy2d", "--M", "8", "--T", "0.02", "--out", str(ro)]) == 2


def test_simulate_unwritable_file_target(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--problem", "energy2d", "--M", "8", "--T", "0.02",
                 "--out", str(blocker / "sub")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "kgzfem", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
