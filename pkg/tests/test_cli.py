import json
import subprocess
import sys

import pytest

from wgoptomech.cli import main


def run(tmp_path, *args, config=None):
    argv = list(args)
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    return main(argv)


def test_thresholds_command(tmp_path):
    out = tmp_path / "t"
    assert run(tmp_path, "thresholds", "--out", str(out)) == 0
    lines = (out / "thresholds.csv").read_text().splitlines()
    assert lines[0] == "n,A_n,eta_n,E_n,approx_eta_n,approx_E_n"
    assert lines[1].startswith("0,0,0.5,4,")


def test_unknown_key_rejected_without_output(tmp_path):
    out = tmp_path / "bad"
    assert run(tmp_path, "spectrum", "--out", str(out), config={"etta": 2}) == 2
    assert not out.exists()


def test_coarse_grid_rejected(tmp_path, capsys):
    out = tmp_path / "coarse"
    assert run(tmp_path, "validate", "--n-points", "300", "--out", str(out)) == 2
    assert "GridTooCoarse" in capsys.readouterr().err or not out.exists()
    assert not out.exists()


def test_invalid_mode(tmp_path):
    assert run(tmp_path, "spectrum", "--mode", "odd", "--out", str(tmp_path / "m")) == 2


def test_solver_error_exit_code(tmp_path, capsys):
    cfg = {"x_max": 8.0, "n_points": 1601, "e_max": 20.0, "eta_stop": 2.0, "k": 45}
    assert run(tmp_path, "spectrum", "--out", str(tmp_path / "s"), config=cfg) == 3
    assert "spectrum" in capsys.readouterr().err


def test_spectrum_outputs(tmp_path):
    out = tmp_path / "spectrum_run"
    assert run(tmp_path, "spectrum", "--eta", "2", "--mode", "full", "--out", str(out),
               "--format", "csv,json,svg") == 0
    head = (out / "eigenvalues.csv").read_text().splitlines()
    assert head[0] == "index,re_E_over_omega,im_E_over_omega,centroid,pr,localized,pair_id,pt_broken"
    assert (out / "eigenvectors.csv").read_text().startswith("x,psi2_0,")
    assert (out / "potential.csv").read_text().startswith("x,re_V,im_V\n")
    assert (out / "spectrum.svg").read_text().startswith("<svg")
    assert json.loads((out / "spectrum.json").read_text())["eigenvalues"]
    first = head[1].split(",")
    assert len(first[1].replace("-", "").replace(".", "")) >= 16


def test_ladder_dataset(tmp_path):
    out = tmp_path / "ladder"
    assert run(tmp_path, "spectrum", "--eta", "0", "--out", str(out)) == 0
    rows = [r.split(",") for r in (out / "eigenvalues.csv").read_text().splitlines()[1:6]]
    assert [round(float(r[1]), 6) for r in rows] == [4, 5, 6, 7, 8]


def test_determinism_and_round_trip(tmp_path):
    cfg = {"eta_list": [1.4, 2.0], "k": 20}
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(tmp_path, "sweep", "--out", str(a), config=cfg) == 0
    assert run(tmp_path, "sweep", "--out", str(b), config=cfg) == 0
    for name in ("sweep.csv", "thresholds.csv", "tracks.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    meta = a / "run-metadata.json"
    assert main(["sweep", "--config", str(meta), "--out", str(c)]) == 0
    assert (a / "sweep.csv").read_bytes() == (c / "sweep.csv").read_bytes()
    assert (a / "sweep.csv").read_text().splitlines()[0] == \
        "eta,mode_index,re_E,im_E,centroid,pr,localized,pair_id"


def test_bare_sweep_flat(tmp_path):
    out = tmp_path / "flat"
    assert run(tmp_path, "sweep", "--gamma0", "0", "--out", str(out),
               config={"eta_list": [0.0, 3.0], "k": 5}) == 0
    rows = [r.split(",") for r in (out / "sweep.csv").read_text().splitlines()[1:]]
    by_eta = {}
    for r in rows:
        by_eta.setdefault(r[0], []).append(float(r[2]))
    a, b = by_eta.values()
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-9


def test_phasemap_command(tmp_path):
    out = tmp_path / "pm"
    cfg = {"n_eta": 12, "n_energy": 20, "formats": ["csv", "svg"]}
    assert run(tmp_path, "phasemap", "--out", str(out), config=cfg) == 0
    lines = (out / "phasemap.csv").read_text().splitlines()
    assert lines[0] == "eta,E,frac_n,masked" and len(lines) == 241
    assert (out / "ridges.csv").read_text().startswith("kind,eta,E,line\n")
    assert (out / "heatmap.svg").exists()


def test_bare_phasemap_horizontal(tmp_path):
    out = tmp_path / "pm0"
    cfg = {"n_eta": 4, "n_energy": 30, "gamma0": 0.0}
    assert run(tmp_path, "phasemap", "--out", str(out), config=cfg) == 0
    rows = [r.split(",") for r in (out / "phasemap.csv").read_text().splitlines()[1:]]
    cols = {}
    for eta, e, frac, _ in rows:
        cols.setdefault(eta, []).append(frac)
    first, *rest = cols.values()
    assert all(c == first for c in rest)


@pytest.mark.slow
def test_validate_default_passes(tmp_path):
    out = tmp_path / "v"
    assert run(tmp_path, "validate", "--out", str(out)) == 0
    report = json.loads((out / "validate.json").read_text())
    assert all(r["passed"] for r in report.values())


@pytest.mark.slow
def test_validate_small_fock_basis_fails(tmp_path):
    out = tmp_path / "v20"
    assert run(tmp_path, "validate", "--out", str(out), config={"fock_n_max": 20}) == 1
    report = json.loads((out / "validate.json").read_text())
    oracle = report["oracle_equivalence"]
    assert not oracle["passed"]
    bad = [c for c in oracle["cases"] if c["eta"] == 3.0 and not c["passed"]]
    assert bad and all("truncation" in c["diagnosis"].lower() for c in bad)


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "wgoptomech", "thresholds", "--out",
                          str(tmp_path / "m")], capture_output=True, text=True)
    assert res.returncode == 0
