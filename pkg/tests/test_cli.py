from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from coupled_logistic import ConfigError
from coupled_logistic.cli import eval_expr, main, parse_config, run
from coupled_logistic.grid import load_field
from coupled_logistic.output import read_branch_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """
[domain]
extent = pi
n = 199

[params]
lambda1 = 5
lambda2 = 6
p = 4
"""


def cfg(extra: str = "", params: str = "") -> str:
    return BASE + params + "\n" + extra


# -- config grammar ---------------------------------------------------------------------------


def test_expressions():
    names = {"pi": np.pi, "mu1": 1.0}
    assert eval_expr("2 * mu1 + 0.5", names) == 2.5
    assert eval_expr("-(pi ** 2) / 2", names) == pytest.approx(-np.pi**2 / 2)
    for bad in ("__import__('os')", "mu9", "1 +", "abs(1)", "'x'"):
        with pytest.raises(ConfigError):
            eval_expr(bad, names)


def test_parse_resolves_eigenvalue_names_and_defaults():
    c = parse_config(cfg(params="lambda = 2 * mu1\nbetas = -5, 0, 0.5\n"), "sync")
    assert c.get("params", "lambda") == pytest.approx(2 * 0.9999794384932766, rel=1e-12)
    assert c.betas() == [-5.0, 0.0, 0.5]
    assert c.get("tolerances", "newton_tol") == 1e-10
    assert c.get("seed", "n_path") == 41
    assert c.prefix == "sync"
    assert c.dim == 1 and c.n == (199,)


@pytest.mark.parametrize(
    "text",
    [
        cfg("[bogus]\nx = 1\n"),
        cfg(params="gamma = 3\n"),
        cfg("[domain2]\n"),
        "[domain]\ndim = 3\n",
        "[domain]\nn = ten\n",
        cfg(params="beta = 1 +\n"),
        cfg("[seed]\nwarm_start = maybe\n"),
        "not an ini file",
    ],
)
def test_bad_configs_are_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text, "ground")


def test_unknown_command():
    with pytest.raises(ConfigError):
        parse_config(BASE, "launch")


# -- commands and exit codes ---------------------------------------------------------------------


def test_eig_prints_principal_value(tmp_path, capsys):
    assert run("eig", cfg(), str(tmp_path)) == 0
    out = capsys.readouterr().out
    first = out.splitlines()[0]
    assert first.startswith("lambda_1: 0.99997943849")
    assert "holds" in out
    assert (tmp_path / "eig.txt").read_text().startswith("# tool: coupled-logistic")


def test_ground_at_zero_reports_sum_of_levels(tmp_path, capsys):
    assert run("ground", cfg(params="beta = 0\n"), str(tmp_path)) == 0
    out = capsys.readouterr().out
    energy = float(out.split("energy=")[1].split()[0])
    total = float(out.split("c1+c2=")[1].split()[0])
    assert energy == pytest.approx(total, rel=1e-8)
    g, u = load_field(tmp_path / "ground_u.dat")
    assert g.n == (199,) and np.all(u >= 0)


def test_sync_passes_at_equal_lambdas(tmp_path, capsys):
    text = BASE.replace("lambda1 = 5\nlambda2 = 6", "lambda = 2 * mu1") + "betas = 0.5\n"
    assert run("sync", text, str(tmp_path)) == 0
    assert "residual <= tol: PASS" in capsys.readouterr().out


def test_linking_reports_a_sign_changing_component(tmp_path, capsys):
    text = (CONFIGS / "linking.ini").read_text()
    assert run("linking", text, str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "sign_changing" in out
    frame = (tmp_path / "linking_frame.txt").read_text()
    assert "kappa: 2" in frame


@pytest.mark.parametrize(
    "command,text,code",
    [
        ("ground", cfg(params="beta = 0\n").replace("lambda1 = 5", "lambda1 = 0.5"), 2),
        ("ground", cfg(params="beta = 1.5\n"), 2),
        ("mpass", cfg(params="beta = 0.5\n"), 2),
        ("linking", cfg(params="beta = 0.5\n"), 2),
        ("ground", cfg(params="beta = 0\n").replace("lambda2 = 6", "lambda2 = 4"), 2),
        ("ground", cfg(params="bet = 0\n"), 1),
        ("ground", cfg(), 1),
    ],
)
def test_exit_codes(tmp_path, command, text, code, capsys):
    assert run(command, text, str(tmp_path)) == code
    assert capsys.readouterr().err


def test_anomaly_maps_to_exit_three(tmp_path, monkeypatch):
    from coupled_logistic import PositiveSolutionAnomaly, cli

    def boom(*a, **k):
        raise PositiveSolutionAnomaly("positive")

    monkeypatch.setattr(cli, "linking_search", boom)
    assert run("linking", (CONFIGS / "linking.ini").read_text(), str(tmp_path)) == 3


def test_missing_config_file(tmp_path):
    assert main(["eig", str(tmp_path / "nope.ini")]) == 1


def test_sweep_csv_is_deterministic(tmp_path):
    text = cfg(params="betas = 0, 0.3, 0.6\n")
    assert run("sweep", text, str(tmp_path / "a")) == 0
    assert run("sweep", text, str(tmp_path / "b")) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    rows = read_branch_csv(a.decode())
    assert [float(r["beta"]) for r in rows] == [0.0, 0.3, 0.6]
    assert all(float(x["energy"]) > float(y["energy"]) for x, y in zip(rows, rows[1:]))


@pytest.mark.parametrize("name", sorted(p.stem for p in CONFIGS.glob("*.ini")))
def test_shipped_configs_parse(name):
    command = name.split("_")[0]
    parse_config((CONFIGS / f"{name}.ini").read_text(), command)


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "coupled_logistic", "betastar", str(CONFIGS / "betastar.ini"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("b_hat: 1.25998")
