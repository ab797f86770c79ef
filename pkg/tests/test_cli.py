import json

import pytest

from specpair import cli


def run_cli(args):
    return cli.main(args)


def test_print_defaults_parses(capsys):
    assert run_cli(["--print-defaults"]) == 0
    out = capsys.readouterr().out
    d = json.loads(out)
    assert d["potential"]["t"] == 0.05
    assert d["grid"]["intervals"] == 4096
    assert len(d["h_list"]) == 12


def test_spectrum_harmonic(tmp_path):
    code = run_cli(["spectrum", "--t", "0", "--eps", "0",
                    "--grid-n", "2048", "--out", str(tmp_path)])
    assert code == 0
    rows = (tmp_path / "spectrum_eigenvalues.csv").read_text().strip().splitlines()
    assert rows[0] == "h,j,lambda,error_estimate"
    lams = [float(r.split(",")[2]) for r in rows[1:]]
    for j, lam in enumerate(lams, start=1):
        assert lam == pytest.approx(2 * j - 1, abs=1e-6)
    report = json.loads((tmp_path / "spectrum_report.json").read_text())
    assert report["passed"]
    names = [a["name"] for a in report["assertions"]]
    assert "eigensolve.ordering" in names


def test_spectrum_deterministic_output(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        assert run_cli(["spectrum", "--t", "0", "--eps", "0",
                        "--grid-n", "1024", "--out", str(out)]) == 0
    assert (a / "spectrum_eigenvalues.csv").read_bytes() == \
        (b / "spectrum_eigenvalues.csv").read_bytes()


def test_gap_sweep_mirror_pair_reports_floor(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "potential": {"t": 0.0, "eps": 0.05},
        "grid": {"intervals": 1024},
        "h_list": [0.5, 0.6, 0.7, 0.85, 1.0],
    }))
    code = run_cli(["gap-sweep", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "gap-sweep_report.json").read_text())
    names = [a["name"] for a in report["assertions"]]
    assert names == ["traces.below_floor"]
    assert report["passed"]
    csv = (tmp_path / "gap-sweep_distance.csv").read_text()
    assert csv.splitlines()[0] == "h,E,D,error_estimate,n_levels,usable"
    assert (tmp_path / "plot_gap_decay.py").exists()


def test_validate_passes(tmp_path):
    assert run_cli(["validate", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate_report.json").read_text())
    assert report["passed"]
    assert all("." in a["name"] for a in report["assertions"])


def test_invalid_config_is_an_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"h": -1.0}))
    assert run_cli(["validate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_failed_assertion_gives_exit_one(tmp_path):
    # a grid too coarse to certify the ground-level margin must fail loudly
    code = run_cli(["spectrum", "--grid-n", "512", "--out", str(tmp_path)])
    assert code == 1
    report = json.loads((tmp_path / "spectrum_report.json").read_text())
    assert not report["passed"]


def test_unknown_experiment_rejected():
    with pytest.raises(SystemExit):
        run_cli(["fourier-sweep"])


def test_config_round_trip_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"potential": {"t": 0.01}, "grid": {"intervals": 512}}))
    parsed = cli.ExperimentConfig.from_dict(json.loads(cfg.read_text()))
    assert parsed.potential.t == 0.01
    assert parsed.potential.eps == 0.05       # default preserved
    assert parsed.grid_intervals == 512
    assert parsed.grid_L == 8.0


def test_charpoly_helper_roots():
    import numpy as np
    rng = np.random.default_rng(3)
    diag = rng.uniform(1.0, 5.0, 6)
    offsq = 0.7 ** 2
    roots = cli.charpoly_roots(diag, offsq)
    # oracle: dense symmetric eigensolve
    M = np.diag(diag) + np.diag([-0.7] * 5, 1) + np.diag([-0.7] * 5, -1)
    np.testing.assert_allclose(roots, np.linalg.eigvalsh(M), atol=1e-12)
