"""End-to-end checks of the command line interface.

Everything runs in-process through cli.main so the tests stay fast and
the exit codes and stderr text are observable directly.
"""

import contextlib
import hashlib
import io
import json
import math

import numpy as np
import pytest

from nesskit.cli import main
from nesskit.device import load_config
from nesskit.scattering import transmission

BARRIER_INI = """\
[device]
a = 0.0
b = 1.0
m_a = 1.0
v_a = 0.0
m_b = 1.0
v_b = 0.0
breakpoints = 0.0, 1.0
masses = 1.0
potentials = 1.5

[reservoir.left]
mu = 1.0
beta = 1.0

[reservoir.well]
mu = 0.5

[reservoir.right]
mu = 0.0

[spectral]
lambda_max = 15.0

[box]
x_min = -8.0
x_max = 9.0
h = 0.05

[schedule]
kind = exponential
alpha = 1.0
"""

STEP_INI = """\
[device]
a = 0.0
b = 1.0
m_a = 1.0
v_a = 1.0
m_b = 1.0
v_b = 0.0
breakpoints = 0.0, 1.0
masses = 1.0
potentials = 0.5
"""

WELL_INI = BARRIER_INI.replace("potentials = 1.5", "potentials = -10.0")


@pytest.fixture
def barrier_ini(tmp_path):
    path = tmp_path / "dev.ini"
    path.write_text(BARRIER_INI)
    return path


def _run(argv):
    # capture stderr directly so the tests survive pytest -s
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        rc = main(argv)
    return rc, err.getvalue()


def _read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    return header, np.atleast_2d(data)


def test_transmission_roundtrip(barrier_ini, tmp_path):
    out = tmp_path / "out"
    rc = main(["-c", str(barrier_ini), "--out", str(out), "transmission",
               "--lam-min", "0.1", "--lam-max", "5.0", "--n", "17"])
    assert rc == 0
    header, data = _read_csv(out / "transmission.csv")
    assert header == ["lambda", "T"]
    assert data.shape == (17, 2)
    cfg = load_config(str(barrier_ini))
    for lam, t_read in data:
        # 17 significant digits survive the text round trip bit-exactly
        assert t_read == transmission(cfg.device, lam)


def test_scatter_one_channel_rows(tmp_path):
    ini = tmp_path / "step.ini"
    ini.write_text(STEP_INI)
    out = tmp_path / "out"
    rc = main(["-c", str(ini), "--out", str(out), "scatter",
               "--lam-min", "0.4", "--lam-max", "2.0", "--n", "5"])
    assert rc == 0
    header, data = _read_csv(out / "scatter.csv")
    assert header == ["lambda", "S_aa_re", "S_aa_im", "S_ab_re", "S_ab_im",
                      "S_ba_re", "S_ba_im", "S_bb_re", "S_bb_im", "T"]
    below = data[data[:, 0] < 1.0]
    above = data[data[:, 0] > 1.0]
    assert below.size and above.size
    # only the b channel is open below the upper lead floor
    assert np.isnan(below[:, 1:7]).all()
    assert np.all(below[:, 9] == 0.0)
    assert abs(np.hypot(below[0, 7], below[0, 8]) - 1.0) < 1e-12
    assert not np.isnan(above).any()


def test_eigenfunction_columns(barrier_ini, tmp_path):
    out = tmp_path / "out"
    rc = main(["-c", str(barrier_ini), "--out", str(out), "eigenfunction",
               "--lam", "2.0", "--x-min", "-3", "--x-max", "4", "--n", "101"])
    assert rc == 0
    header, data = _read_csv(out / "eigenfunction.csv")
    assert header == ["x", "phi_b_re", "phi_b_im", "phi_a_re", "phi_a_im"]
    assert data.shape == (101, 5)
    assert not np.isnan(data).any()


def test_bound_json(tmp_path):
    ini = tmp_path / "well.ini"
    ini.write_text(WELL_INI)
    out = tmp_path / "out"
    assert main(["-c", str(ini), "--out", str(out), "bound"]) == 0
    states = json.loads((out / "bound.json").read_text())
    assert len(states) == 2
    lams = [s["lambda_j"] for s in states]
    assert lams == sorted(lams)
    for s in states:
        assert s["kappa_a"] > 0 and s["kappa_b"] > 0


def test_ness_and_current(barrier_ini, tmp_path):
    out = tmp_path / "out"
    assert main(["-c", str(barrier_ini), "--out", str(out), "ness",
                 "--x-min", "-2", "--x-max", "3", "--n", "41"]) == 0
    header, data = _read_csv(out / "ness.csv")
    assert header == ["x", "u_total", "u_bound", "u_continuum"]
    assert np.allclose(data[:, 1], data[:, 2] + data[:, 3], atol=1e-12)
    assert main(["-c", str(barrier_ini), "--out", str(out), "current"]) == 0
    cur = json.loads((out / "current.json").read_text())
    assert cur["spread_over_x"] < 1e-10 * abs(cur["I"])
    assert abs(cur["I"] - cur["I_landauer"]) < 1e-9 * abs(cur["I"])


def test_determinism_byte_identical(barrier_ini, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["-c", str(barrier_ini), "--out", str(out), "ness",
                     "--x-min", "-2", "--x-max", "3", "--n", "41"]) == 0
    assert (out1 / "ness.csv").read_bytes() == (out2 / "ness.csv").read_bytes()


def test_manifest_fields(barrier_ini, tmp_path):
    out = tmp_path / "out"
    assert main(["-c", str(barrier_ini), "--out", str(out), "transmission",
                 "--lam-min", "0.5", "--lam-max", "2.0", "--n", "3"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    digest = hashlib.sha256(barrier_ini.read_bytes()).hexdigest()
    assert manifest["subcommand"] == "transmission"
    assert manifest["config"] == "dev.ini"
    assert manifest["config_sha256"] == digest
    assert manifest["outputs"] == ["transmission.csv"]
    assert manifest["warnings"] == []
    assert manifest["wall_time_s"] >= 0.0


def test_missing_config_exits_2(tmp_path):
    rc, err = _run(["-c", str(tmp_path / "nope.ini"), "--out", str(tmp_path),
                    "transmission"])
    assert rc == 2
    assert "config error" in err


def test_unknown_key_exits_2(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text(BARRIER_INI.replace("[reservoir.left]",
                                       "typo_key = 1\n\n[reservoir.left]"))
    rc, err = _run(["-c", str(ini), "--out", str(tmp_path / "o"), "bound"])
    assert rc == 2
    assert "typo_key" in err


def test_unresolvable_grid_exits_3(tmp_path):
    ini = tmp_path / "coarse.ini"
    ini.write_text(BARRIER_INI.replace("h = 0.05", "h = 0.4"))
    rc, err = _run(["-c", str(ini), "--out", str(tmp_path / "o"), "evolve",
                    "--sudden", "--t-end", "0.5"])
    assert rc == 3
    assert "resolution error" in err


def test_evolve_output_and_manifest(barrier_ini, tmp_path):
    out = tmp_path / "out"
    rc = main(["-c", str(barrier_ini), "--out", str(out), "evolve",
               "--alpha", "2", "--t-end", "0.6", "--dt", "0.01"])
    assert rc == 0
    header, data = _read_csv(out / "evolve.csv")
    assert header == ["t", "observable", "running_mean"]
    pre = data[data[:, 0] < 0.0]
    post = data[data[:, 0] >= 0.0]
    assert np.isnan(pre[:, 2]).all()
    assert not np.isnan(post[:, 2]).any()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["t_end"] >= 0.6
    assert manifest["dropped_weight"] < 1e-6
    assert abs(manifest["snap_a"]) < 0.025 and abs(manifest["snap_b"]) < 0.025


def test_evolve_window_warning_strict(barrier_ini, tmp_path):
    args = ["-c", str(barrier_ini), "--out", str(tmp_path / "o"), "evolve",
            "--sudden", "--t-end", "50", "--dt", "0.01"]
    rc, _ = _run(args)
    assert rc == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert any("window truncated" in w for w in manifest["warnings"])
    rc, err = _run(["--strict"] + args)
    assert rc == 4
    assert "window error" in err


def test_evolve_observable_parsing(barrier_ini, tmp_path):
    out = tmp_path / "out"
    rc, _ = _run(["-c", str(barrier_ini), "--out", str(out), "evolve",
                  "--sudden", "--t-end", "0.3", "--dt", "0.01",
                  "--observable", "point:2.5"])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["observable"] == "point:2.5"
    rc, err = _run(["-c", str(barrier_ini), "--out", str(out), "evolve",
                    "--sudden", "--t-end", "0.3", "--observable", "ramp"])
    assert rc == 2
    assert "--observable" in err


def test_alpha_sweep_files(barrier_ini, tmp_path):
    out = tmp_path / "out"
    rc = main(["-c", str(barrier_ini), "--out", str(out), "alpha-sweep",
               "--alphas", "2,sudden", "--t-end", "0.5", "--dt", "0.01"])
    assert rc == 0
    assert (out / "alpha_sweep_alpha_2.csv").exists()
    assert (out / "alpha_sweep_sudden.csv").exists()
    summary = json.loads((out / "alpha_sweep.json").read_text())
    assert summary["labels"] == ["alpha=2", "sudden"]
    assert "alpha=2|sudden" in summary["pairwise_rel_diff"]
    assert set(summary["late_means"]) == {"alpha=2", "sudden"}
    assert summary["amplitude_monotone_in_alpha"] is None
    header, _ = _read_csv(out / "alpha_sweep_alpha_2.csv")
    assert header[:3] == ["t", "current", "running_mean"]


def test_moller_json(tmp_path):
    ini = tmp_path / "wide.ini"
    ini.write_text(BARRIER_INI.replace("x_min = -8.0", "x_min = -25.0")
                   .replace("x_max = 9.0", "x_max = 26.0"))
    out = tmp_path / "out"
    rc = main(["-c", str(ini), "--out", str(out), "moller",
               "--lam0", "3.0", "--channel", "b"])
    assert rc == 0
    res = json.loads((out / "moller.json").read_text())
    assert set(res) == {"lambda0", "channel", "overlap_re", "overlap_im",
                        "phase"}
    assert abs(res["phase"] - math.pi / 2) < 0.1


def test_moller_bad_packet_exits_2(barrier_ini, tmp_path):
    rc, err = _run(["-c", str(barrier_ini), "--out", str(tmp_path / "o"),
                    "moller", "--lam0", "1.2", "--channel", "b"])
    assert rc == 2
    assert "invalid request" in err


def test_plot_renders_figures(barrier_ini, tmp_path):
    out = tmp_path / "out"
    rc = main(["-c", str(barrier_ini), "--out", str(out), "--plot",
               "transmission", "--lam-min", "0.1", "--lam-max", "4",
               "--n", "50"])
    assert rc == 0
    png = out / "transmission.png"
    assert png.exists() and png.stat().st_size > 1000
    manifest = json.loads((out / "manifest.json").read_text())
    assert "transmission.png" in manifest["figures"]
