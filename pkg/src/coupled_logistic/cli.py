"""Command-line entry point: ``coupled-logistic COMMAND CONFIG``.

The config is an INI file (see README for the grammar). Unknown sections
or keys are errors. Numeric values may be arithmetic expressions in ``pi``
and ``mu1, mu2, ...``, the discrete Dirichlet eigenvalues of the grid.

Exit codes: 0 success, 1 solver or parse failure, 2 hypothesis violation,
3 anomaly.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import logging
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import continuation as cont
from . import output
from .errors import (
    BetaOutOfRange,
    ConfigError,
    CoupledLogisticError,
    HypothesisViolation,
    LambdaBelowPrincipal,
    NotInLMinus,
    PositiveSolutionAnomaly,
)
from .functional import Params
from .grid import Grid, build_grid
from .linking import build_frame, frame_report
from .scalar import NEWTON_TOL, PART_TOL, solve_positive_scalar
from .solvers import CRIT_TOL, classify, ground_state, linking_search, mountain_pass
from .spectral import EIG_TOL, laplacian_eigenvalues_1d, smallest_eigenpairs

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_HYPOTHESIS, EXIT_ANOMALY = 0, 1, 2, 3

COMMANDS = ("eig", "ground", "mpass", "linking", "sweep", "segregation", "sync", "betastar")

# section -> key -> (kind, default); kind is one of int, expr, exprs, ints, bool, str
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "domain": {"dim": ("int", 1), "extent": ("exprs", "pi"), "n": ("ints", "199")},
    "params": {
        "lambda1": ("expr", None),
        "lambda2": ("expr", None),
        "lambda": ("expr", None),
        "p": ("expr", 4.0),
        "beta": ("expr", None),
        "betas": ("exprs", None),
        "j": ("int", 1),
        "modes": ("int", 5),
    },
    "tolerances": {
        "newton_tol": ("expr", NEWTON_TOL),
        "crit_tol": ("expr", CRIT_TOL),
        "part_tol": ("expr", PART_TOL),
        "eig_tol": ("expr", EIG_TOL),
        "bisection_tol": ("expr", cont.BISECTION_TOL),
        "string_tols": ("exprs", "0.1, 0.01, 0.001"),
    },
    "output": {"directory": ("str", "out"), "prefix": ("str", None)},
    "seed": {
        "n_path": ("int", 41),
        "n_samples": ("int", 256),
        "asymmetry": ("expr", 0.25),
        "exploratory": ("bool", False),
        "warm_start": ("bool", True),
    },
}

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def eval_expr(text: str, names: dict[str, float]) -> float:
    """Evaluate a restricted arithmetic expression (numbers, + - * / **, named constants)."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"unknown name {node.id!r} in {text!r}")
            return float(names[node.id])
        raise ConfigError(f"unsupported expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc.msg}") from exc
    return ev(tree)


class _Names(dict):
    """Lazily resolved constants: pi and the discrete eigenvalues mu1, mu2, ..."""

    def __init__(self, grid_factory):
        super().__init__(pi=math.pi)
        self._grid_factory = grid_factory

    def __contains__(self, key):
        return super().__contains__(key) or self._mu_index(key) is not None

    def __getitem__(self, key):
        if not super().__contains__(key):
            k = self._mu_index(key)
            if k is None:
                raise KeyError(key)
            g = self._grid_factory()
            self[key] = smallest_eigenpairs(g, None, k)[k - 1].value
        return super().__getitem__(key)

    @staticmethod
    def _mu_index(key):
        if key.startswith("mu") and key[2:].isdigit() and int(key[2:]) >= 1:
            return int(key[2:])
        return None


@dataclass
class RunConfig:
    command: str
    text: str
    dim: int
    extent: tuple
    n: tuple
    values: dict = field(default_factory=dict)  # "section.key" -> parsed value
    outdir: Path = Path("out")

    def get(self, section: str, key: str):
        return self.values[f"{section}.{key}"]

    def grid(self) -> Grid:
        return build_grid(self.dim, self.extent, self.n)

    def params(self, beta: float | None = None, *, need_beta: bool = True) -> Params:
        l1, l2 = self.get("params", "lambda1"), self.get("params", "lambda2")
        if l1 is None or l2 is None:
            lam = self.get("params", "lambda")
            if lam is None:
                raise ConfigError("[params] needs lambda1 and lambda2 (or lambda)")
            l1 = lam if l1 is None else l1
            l2 = lam if l2 is None else l2
        b = self.get("params", "beta") if beta is None else beta
        if b is None:
            if need_beta:
                raise ConfigError("[params] beta is required for this command")
            b = 0.0
        return Params(l1, l2, self.get("params", "p"), b)

    def betas(self) -> list[float]:
        bs = self.get("params", "betas")
        if bs is None:
            b = self.get("params", "beta")
            if b is None:
                raise ConfigError("[params] needs betas (or beta)")
            return [b]
        return list(bs)

    @property
    def prefix(self) -> str:
        return self.get("output", "prefix") or self.command


def parse_config(text: str, command: str, outdir: str | None = None) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")

    def raw(sec, key):
        default = SCHEMA[sec][key][1]
        if cp.has_option(sec, key):
            return cp.get(sec, key)
        return default

    try:
        dim = int(raw("domain", "dim"))
        if dim not in (1, 2):
            raise ConfigError(f"[domain] dim must be 1 or 2, got {dim}")
        n = tuple(int(x) for x in str(raw("domain", "n")).replace(",", " ").split())
        ext_names = {"pi": math.pi}
        extent = tuple(eval_expr(x, ext_names) for x in str(raw("domain", "extent")).split(","))
    except ValueError as exc:
        raise ConfigError(f"[domain]: {exc}") from exc
    if len(n) == 1:
        n = n * dim
    if len(extent) == 1:
        extent = extent * dim
    cfg = RunConfig(command, text, dim, extent, n)
    names = _Names(cfg.grid)
    for sec, keys in SCHEMA.items():
        for key, (kind, _) in keys.items():
            v = raw(sec, key)
            if v is not None and not isinstance(v, str):
                cfg.values[f"{sec}.{key}"] = v
                continue
            try:
                cfg.values[f"{sec}.{key}"] = None if v is None else _convert(kind, v, names)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from exc
    cfg.outdir = Path(outdir) if outdir else Path(cfg.get("output", "directory"))
    return cfg


def _convert(kind: str, v: str, names) -> object:
    v = v.strip()
    if kind == "int":
        return int(v)
    if kind == "ints":
        return tuple(int(x) for x in v.replace(",", " ").split())
    if kind == "expr":
        return eval_expr(v, names)
    if kind == "exprs":
        return tuple(eval_expr(x, names) for x in v.split(",") if x.strip())
    if kind == "bool":
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {v!r}")
    return v


# -- commands ---------------------------------------------------------------------------------


def _reclassify(cfg: RunConfig, g: Grid, rec):
    rec.flags = classify(g, rec.state, cfg.get("tolerances", "part_tol"))
    return rec


def cmd_eig(cfg: RunConfig) -> int:
    g = cfg.grid()
    k = cfg.get("params", "modes")
    pairs = smallest_eigenpairs(g, None, k, eig_tol=cfg.get("tolerances", "eig_tol"))
    closed = laplacian_eigenvalues_1d(g, k) if g.dim == 1 else None
    lines = []
    for i, e in enumerate(pairs, start=1):
        extra = f" closed_form={float(closed[i - 1])!r}" if closed is not None else ""
        lines.append(f"lambda_{i}: {e.value!r}{extra}")
    body = "\n".join(lines) + "\n"
    print(body, end="")
    has_lambda = any(cfg.get("params", key) is not None for key in ("lambda1", "lambda2", "lambda"))
    if has_lambda:
        pr = cfg.params(need_beta=False)
        pr.check(g)
        msg = f"hypothesis lambda2 >= lambda1 > lambda_1(Omega) = {pairs[0].value!r}: holds"
        print(msg)
        body += msg + "\n"
    output.write_text(cfg.outdir, f"{cfg.prefix}.txt", body, cfg.text)
    return EXIT_OK


def _solve_and_write(cfg: RunConfig, solve) -> int:
    g = cfg.grid()
    rec = _reclassify(cfg, g, solve(g))
    output.write_record(cfg.outdir, cfg.prefix, g, rec, cfg.text)
    print(output.summary_line(rec))
    return EXIT_OK


def cmd_ground(cfg: RunConfig) -> int:
    pr = cfg.params()
    g = cfg.grid()
    rec = _reclassify(cfg, g, ground_state(pr, g, crit_tol=cfg.get("tolerances", "crit_tol")))
    output.write_record(cfg.outdir, cfg.prefix, g, rec, cfg.text)
    print(output.summary_line(rec))
    c1, c2 = rec.info.get("c1"), rec.info.get("c2")
    if c1 is not None and c2 is not None:
        print(f"levels: c1={c1!r} c2={c2!r} c1+c2={c1 + c2!r}")
    return EXIT_OK


def cmd_mpass(cfg: RunConfig) -> int:
    pr = cfg.params()
    return _solve_and_write(
        cfg,
        lambda g: mountain_pass(
            pr,
            g,
            cfg.get("seed", "n_path"),
            crit_tol=cfg.get("tolerances", "crit_tol"),
            string_tols=cfg.get("tolerances", "string_tols"),
            asymmetry=cfg.get("seed", "asymmetry"),
        ),
    )


def cmd_linking(cfg: RunConfig) -> int:
    pr = cfg.params()
    g = cfg.grid()
    pr.check(g)
    j = cfg.get("params", "j")
    frame = build_frame(pr, g, j, n_samples=cfg.get("seed", "n_samples"))
    output.write_text(cfg.outdir, f"{cfg.prefix}_frame.txt", frame_report(frame, pr), cfg.text)
    rec = linking_search(
        pr,
        g,
        j,
        crit_tol=cfg.get("tolerances", "crit_tol"),
        n_samples=cfg.get("seed", "n_samples"),
        exploratory=cfg.get("seed", "exploratory"),
        check=False,
        frame=frame,
    )
    rec = _reclassify(cfg, g, rec)
    output.write_record(cfg.outdir, cfg.prefix, g, rec, cfg.text)
    print(output.summary_line(rec))
    return EXIT_OK


def _write_branch(cfg: RunConfig, br: cont.Branch) -> None:
    path = cfg.outdir / f"{cfg.prefix}.csv"
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    path.write_text(output.branch_to_csv(br, cfg.text))


def cmd_sweep(cfg: RunConfig) -> int:
    g = cfg.grid()
    br = cont.sweep_ground(g, cfg.params(need_beta=False), cfg.betas(), crit_tol=cfg.get("tolerances", "crit_tol"),
                           warm=cfg.get("seed", "warm_start"))
    _write_branch(cfg, br)
    ok = cont.is_nonincreasing(br.energies[np.isfinite(br.energies)], 10 * cfg.get("tolerances", "crit_tol"))
    print(f"sweep: {len(br.beta_values)} betas, holes={len(br.holes)}, non-increasing={'yes' if ok else 'no'}")
    return EXIT_OK


def cmd_segregation(cfg: RunConfig) -> int:
    g = cfg.grid()
    br = cont.segregation_study(g, cfg.params(need_beta=False), cfg.betas(), n_path=cfg.get("seed", "n_path"),
                                crit_tol=cfg.get("tolerances", "crit_tol"), warm=cfg.get("seed", "warm_start"))
    _write_branch(cfg, br)
    dh = br.info.get("delta_hat")
    print(f"segregation: {len(br.beta_values)} betas, holes={len(br.holes)}, delta_hat={'-' if dh is None else repr(dh)}")
    return EXIT_OK


def cmd_sync(cfg: RunConfig) -> int:
    g = cfg.grid()
    pr = cfg.params(need_beta=False)
    if pr.lambda1 != pr.lambda2:
        raise HypothesisViolation("synchronized solutions need lambda1 == lambda2")
    pr.check(g)
    tol = cfg.get("tolerances", "newton_tol")
    scalar = solve_positive_scalar(g, pr.lambda1, pr.p, newton_tol=tol)
    lines, ok = [], True
    for b in cfg.betas():
        res = cont.synchronized_check(g, pr.lambda1, pr.p, b, newton_tol=tol, scalar=scalar)
        ok &= res.passed
        lines.append(
            f"beta={b!r} amplitude={res.amplitude!r} norm={res.norm!r} residual={res.residual!r} "
            f"tol={res.tolerance!r} residual <= tol: {'PASS' if res.passed else 'FAIL'}"
        )
    body = "\n".join(lines) + "\n"
    print(body, end="")
    output.write_text(cfg.outdir, f"{cfg.prefix}.txt", body, cfg.text)
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_betastar(cfg: RunConfig) -> int:
    g = cfg.grid()
    pr = cfg.params(need_beta=False)
    pr.check(g)
    w1 = solve_positive_scalar(g, pr.lambda1, pr.p, newton_tol=cfg.get("tolerances", "newton_tol")).w
    bs = cont.beta_star_threshold(g, pr.lambda2, w1, bisection_tol=cfg.get("tolerances", "bisection_tol"))
    lines = [
        f"b_hat: {bs.b_hat!r}",
        f"count_at_zero: {bs.count_at_zero}",
        f"bracket_counts: {bs.bracket[0]} {bs.bracket[1]}",
    ]
    lines += [f"probe: b={b!r} count={c}" for b, c in bs.probes]
    body = "\n".join(lines) + "\n"
    print(body, end="")
    output.write_text(cfg.outdir, f"{cfg.prefix}.txt", body, cfg.text)
    return EXIT_OK


HANDLERS = {
    "eig": cmd_eig,
    "ground": cmd_ground,
    "mpass": cmd_mpass,
    "linking": cmd_linking,
    "sweep": cmd_sweep,
    "segregation": cmd_segregation,
    "sync": cmd_sync,
    "betastar": cmd_betastar,
}


def run(command: str, config_text: str, outdir: str | None = None) -> int:
    """Parse, dispatch and map errors to exit codes; diagnostics go to stderr."""
    try:
        cfg = parse_config(config_text, command, outdir)
        return HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except PositiveSolutionAnomaly as exc:
        print(f"anomaly: {exc}", file=sys.stderr)
        return EXIT_ANOMALY
    except (HypothesisViolation, LambdaBelowPrincipal, BetaOutOfRange, NotInLMinus) as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except CoupledLogisticError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="coupled-logistic", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", help="INI config file")
    ap.add_argument("--out", help="output directory (overrides [output] directory)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return run(args.command, text, args.out)


if __name__ == "__main__":
    sys.exit(main())
