from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sphardy.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, RunConfig, load_config, main
from sphardy.errors import InvalidArgument
from sphardy.grid import build_grid, write_grid_field
from sphardy.hardy import VectorFieldCoeffs, synthesize
from sphardy.harmonics import ncoeffs

SMALL = ["--n-trial", "12", "--n-test", "8", "--modes", "1:0,2:1"]


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("SPHARDY_OUT", str(tmp_path / "out"))
    return tmp_path / "out"


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nn_trial = 10\nnoise=1e-4\n")
    cfg = load_config(str(cfg_file), {"noise": "1e-2", "seed": None})
    assert cfg.n_trial == 10 and cfg.noise == 1e-2 and cfg.test_degree == 6


@pytest.mark.parametrize("text", ["bogus=1\n", "n_trial\n", "n_trial=abc\n"])
def test_config_file_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(InvalidArgument):
        load_config(str(p), {})


@pytest.mark.parametrize(
    "kw", [{"n_trial": 0}, {"theta_c": 4.0}, {"eps": 2.0}, {"modes": "1:5"}, {"c_h_grid": "1,-1"}, {"n_test": 30}]
)
def test_run_config_validation(kw):
    with pytest.raises(InvalidArgument):
        RunConfig(**kw)


def test_validate_ok(out, capsys):
    assert main(["validate", "--nmax", "8"]) == EXIT_OK
    rows = _rows(out / "validate.csv")
    assert all(r["pass"] == "1" for r in rows)
    assert "identity_residual" in capsys.readouterr().out


def test_validate_degree_zero(out):
    assert main(["validate", "--nmax", "0"]) == EXIT_OK


def test_validate_detects_fault(out):
    assert main(["validate", "--nmax", "8", "--inject-fault", "S:3:1.01"]) == EXIT_INVARIANT
    failed = {r["check"] for r in _rows(out / "validate.csv") if r["pass"] == "0"}
    assert {"identity_residual", "oracle_agreement_S"} <= failed


@pytest.mark.parametrize("fault", ["S:3", "Q:1:2", "S:99:1.1"])
def test_validate_bad_fault(out, fault):
    assert main(["validate", "--nmax", "8", "--inject-fault", fault]) == EXIT_CONFIG


def test_decompose(out, tmp_path, capsys):
    N = 6
    g = build_grid(N + 2, 2 * N + 2)
    rng = np.random.default_rng(1)
    phi, chi = rng.standard_normal((2, ncoeffs(N)))
    phi[0] = chi[0] = 0.0
    c = VectorFieldCoeffs(N, phi, rng.standard_normal(ncoeffs(N)), chi)
    write_grid_field(tmp_path / "f.csv", g, synthesize(c, g))
    assert main(["decompose", str(tmp_path / "f.csv")]) == EXIT_OK
    d = VectorFieldCoeffs.from_json((out / "decomposed.json").read_text())
    assert np.allclose(d.phi, phi, atol=1e-10) and np.allclose(d.chi, chi, atol=1e-10)


def test_decompose_scalar_file_rejected(out, tmp_path):
    g = build_grid(4, 8)
    write_grid_field(tmp_path / "s.csv", g, np.zeros(g.size))
    assert main(["decompose", str(tmp_path / "s.csv")]) == EXIT_CONFIG


def test_missing_file(out, tmp_path):
    assert main(["decompose", str(tmp_path / "nope.csv")]) == EXIT_CONFIG


def test_pairgen_then_continue(out, capsys):
    assert main(["pairgen", *SMALL]) == EXIT_OK
    pair = json.loads((out / "pair.json").read_text())
    assert main(["continue", str(out / "phi.json"), *SMALL]) == EXIT_OK
    psi = json.loads((out / "psi.json").read_text())["values"]
    assert np.allclose(psi, pair["psi"], atol=1e-8)


def test_continue_not_in_domain(out, tmp_path):
    v = np.random.default_rng(0).standard_normal(ncoeffs(12))
    v[0] = 0.0
    (tmp_path / "phi.json").write_text(json.dumps({"nmax": 12, "values": v.tolist()}))
    assert main(["continue", str(tmp_path / "phi.json"), *SMALL]) == EXIT_INVARIANT


def test_continue_degree_mismatch(out, tmp_path):
    (tmp_path / "phi.json").write_text(json.dumps({"nmax": 3, "values": [0.0] * 16}))
    assert main(["continue", str(tmp_path / "phi.json"), *SMALL]) == EXIT_CONFIG


def test_infeasible_context(out, capsys):
    assert main(["pairgen", "--n-trial", "6", "--n-test", "6"]) == EXIT_CONFIG
    assert "n_test" in capsys.readouterr().err


def test_bep_commands(out):
    assert main(["bep1", *SMALL]) == EXIT_OK
    assert main(["bep2", *SMALL, "--c-h-grid", "1,10"]) == EXIT_OK
    assert len(_rows(out / "bep2.csv")) == 4
    assert main(["estimate-mode", *SMALL]) == EXIT_OK
    assert all(r["within_bound"] == "1" for r in _rows(out / "estimate.csv"))
    assert main(["svd-report", *SMALL]) == EXIT_OK
    assert {r["operator"] for r in _rows(out / "svd.csv")} >= {"A"}


def test_demo_deterministic_and_exact_csv(tmp_path, monkeypatch):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        monkeypatch.setenv("SPHARDY_OUT", str(d))
        assert main(["demo", *SMALL, "--seed", "3"]) == EXIT_OK
        outs.append(d)
    for name in ("demo_modes.csv", "bep_report.csv", "svd.csv", "pair.json", "run_config.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    pair = json.loads((outs[0] / "pair.json").read_text())
    rows = _rows(outs[0] / "demo_modes.csv")
    from sphardy.harmonics import index

    # 17 significant digits round-trip exactly
    assert float(rows[0]["truth"]) == pair["psi"][index(1, 0)]
    assert "seed=3" in (outs[0] / "run_config.txt").read_text()


def test_console_script_module_entry(tmp_path):
    env = {"SPHARDY_OUT": str(tmp_path), "PATH": "/usr/bin:/bin"}
    r = subprocess.run([sys.executable, "-m", "sphardy.cli", "validate", "--nmax", "2"], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert r.stdout.splitlines()[0] == "check,value,tolerance,pass"
