"""Sweeps in beta with warm starts, and the branch diagnostics built on them."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import functional as fn
from .errors import BetaOutOfRange, CoupledLogisticError, NotInLMinus
from .functional import Params, State
from .grid import Grid
from .scalar import NEWTON_TOL, ScalarSolution, solve_positive_scalar, solve_sign_changing_limit
from .solvers import CRIT_TOL, SolutionRecord, ground_state, mountain_pass
from .spectral import count_nonpositive

log = logging.getLogger(__name__)

BISECTION_TOL = 1e-6
CSV_COLUMNS = ("beta", "energy", "grad_norm", "overlap", "dist_to_limit", "n0_count", "flags")


@dataclass
class Branch:
    """One record (or a hole) per beta, in sweep order."""

    kind: str
    params: Params  # beta is a placeholder; see beta_values
    beta_values: list = field(default_factory=list)
    records: list = field(default_factory=list)  # SolutionRecord or None
    diagnostics: list = field(default_factory=list)  # dicts: m_hat, overlap, dist_to_limit, n0_count
    errors: dict = field(default_factory=dict)  # beta -> message for holes
    info: dict = field(default_factory=dict)

    def append(self, beta: float, rec: SolutionRecord | None, diag: dict, error: str | None = None) -> None:
        if self.beta_values:
            step = beta - self.beta_values[-1]
            if step == 0 or (len(self.beta_values) > 1 and np.sign(step) != np.sign(self.beta_values[-1] - self.beta_values[-2])):
                raise ValueError("beta values must be strictly monotone")
        self.beta_values.append(float(beta))
        self.records.append(rec)
        self.diagnostics.append(diag)
        if error is not None:
            self.errors[float(beta)] = error

    @property
    def holes(self) -> list[float]:
        return [b for b, r in zip(self.beta_values, self.records) if r is None]

    def column(self, name: str) -> np.ndarray:
        return np.array([d.get(name, np.nan) for d in self.diagnostics], dtype=float)

    @property
    def energies(self) -> np.ndarray:
        return np.array([np.nan if r is None else r.energy for r in self.records])

    def rows(self) -> list[dict]:
        """Rows keyed by :data:`CSV_COLUMNS`; holes carry empty numeric fields and the flag ``failed``."""
        out = []
        for b, r, d in zip(self.beta_values, self.records, self.diagnostics):
            n0 = d.get("n0_count")
            out.append(
                {
                    "beta": b,
                    "energy": None if r is None else r.energy,
                    "grad_norm": None if r is None else r.grad_norm,
                    "overlap": d.get("overlap"),
                    "dist_to_limit": d.get("dist_to_limit"),
                    "n0_count": n0,
                    "flags": "failed" if r is None else "|".join(r.flags.names()),
                }
            )
        return out


def _check_monotone(betas) -> list[float]:
    betas = [float(b) for b in betas]
    if not betas:
        raise ValueError("empty beta list")
    d = np.diff(betas)
    if len(d) and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("beta values must be strictly monotone")
    return betas


def semi_trivial_n0(g: Grid, pr: Params, w1: np.ndarray) -> int | None:
    """n(0) of the v-linearization at (w1, 0), i.e. of -Lap - beta w1^2 - lambda2 (p = 4 only)."""
    if pr.p != 4:
        return None
    return count_nonpositive(g, -pr.beta * w1**2 - pr.lambda2)


# -- ground-state sweeps ---------------------------------------------------------------


def sweep_ground(g: Grid, pr_base: Params, betas, *, crit_tol: float = CRIT_TOL, warm: bool = True) -> Branch:
    """Ground states along ``betas`` (all < 1), each seeded by the previous solution.

    The warm seed is the previous state projected onto the Nehari set of
    the new beta. Failures leave holes and do not stop the sweep.
    """
    betas = _check_monotone(betas)
    if any(b >= 1 for b in betas):
        raise BetaOutOfRange("ground-state sweeps need every beta < 1")
    pr_base.check(g)
    w1 = solve_positive_scalar(g, pr_base.lambda1, pr_base.p).w
    br = Branch("ground", pr_base)
    prev: State | None = None
    for b in betas:
        pr = pr_base.with_beta(b)
        seed = None
        if warm and prev is not None:
            try:
                seed = fn.nehari_project(pr, g, prev)[1]
            except NotInLMinus:
                seed = None
        try:
            rec = ground_state(pr, g, seed, crit_tol=crit_tol, check=False)
        except CoupledLogisticError as exc:
            log.warning("ground state failed at beta=%g: %s", b, exc)
            br.append(b, None, {"n0_count": semi_trivial_n0(g, pr, w1)}, str(exc))
            continue
        prev = rec.state
        diag = {
            "m_hat": rec.energy,
            "overlap": fn.overlap(pr, g, rec.state),
            "dist_to_limit": None,
            "n0_count": semi_trivial_n0(g, pr, w1),
        }
        br.append(b, rec, diag)
    return br


def is_nonincreasing(values, slack: float) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= slack))


# -- segregation ------------------------------------------------------------------------


def _symmetry_images(g: Grid, a: np.ndarray, b: np.ndarray, swap: bool):
    """(a, b) under every axis reflection of the box, plus the swapped pair when allowed."""
    pairs = [(a, b)] + ([(b, a)] if swap else [])
    out = []
    for x, y in pairs:
        for r in range(g.dim + 1):
            for axes in itertools.combinations(range(g.dim), r):
                xx, yy = x, y
                for ax in axes:
                    xx, yy = g.reflect(xx, ax), g.reflect(yy, ax)
                out.append((xx, yy))
    return out


def distance_to_limit(g: Grid, s: State, limit: ScalarSolution, *, lambdas_equal: bool) -> float:
    """Discrete L2 distance from ``s`` to (w+, w-), minimized over the box symmetries.

    The limit problem is invariant under reflections of the box (and under
    w -> -w when lambda1 == lambda2), so the solver may land on any image.
    """
    best = np.inf
    for a, b in _symmetry_images(g, limit.plus, limit.minus, lambdas_equal):
        best = min(best, fn.l2_norm(g, State(s.u - a, s.v - b)))
    return float(best)


def segregation_study(
    g: Grid,
    pr_base: Params,
    betas,
    *,
    n_path: int = 41,
    crit_tol: float = CRIT_TOL,
    warm: bool = True,
) -> Branch:
    """Mountain-pass solutions along decreasing negative betas.

    Each solve resumes the previous string. Diagnostics are the overlap
    integral of |u|^{p/2}|v|^{p/2}, the distance to the sign-changing limit
    profile, and the energy margin delta_hat from :func:`energy_margin`.
    """
    betas = _check_monotone(betas)
    if any(b >= 0 for b in betas):
        raise BetaOutOfRange("segregation needs every beta < 0")
    if len(betas) > 1 and betas[1] > betas[0]:
        raise ValueError("segregation betas must decrease")
    pr_base.check(g)
    w1 = solve_positive_scalar(g, pr_base.lambda1, pr_base.p).w
    try:
        limit = solve_sign_changing_limit(g, pr_base.lambda1, pr_base.lambda2, pr_base.p)
    except CoupledLogisticError as exc:
        log.warning("limit problem failed: %s", exc)
        limit = None
    br = Branch("segregation", pr_base)
    br.info["limit_energy"] = None if limit is None else limit.energy
    path = None
    c1 = None
    for b in betas:
        pr = pr_base.with_beta(b)
        try:
            rec = mountain_pass(pr, g, n_path, crit_tol=crit_tol, path=path if warm else None, check=False)
        except CoupledLogisticError as exc:
            log.warning("mountain pass failed at beta=%g: %s", b, exc)
            br.append(b, None, {"n0_count": semi_trivial_n0(g, pr, w1)}, str(exc))
            continue
        path = rec.info["path"]
        c1 = rec.info["c1"]
        diag = {
            "m_hat": rec.energy,
            "overlap": fn.overlap(pr, g, rec.state),
            "dist_to_limit": None
            if limit is None
            else distance_to_limit(g, rec.state, limit, lambdas_equal=pr.lambda1 == pr.lambda2),
            "n0_count": semi_trivial_n0(g, pr, w1),
        }
        br.append(b, rec, diag)
    E = br.energies[np.isfinite(br.energies)]
    br.info["c1"] = c1
    br.info["delta_hat"] = energy_margin(E, c1) if len(E) and c1 is not None else None
    return br


def energy_margin(energies, c1: float) -> float:
    """Half the smallest gap of the energies to the band ends c1 and 0.

    Every energy then satisfies ``c1 + delta < E < -delta`` strictly, and the
    result is positive exactly when all energies lie inside (c1, 0).
    """
    E = np.asarray(energies, dtype=float)
    return 0.5 * float(min(np.min(-E), np.min(E - c1)))


# -- beta_star ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaStar:
    b_hat: float
    count_at_zero: int
    probes: tuple  # (b, count) pairs above b_hat
    bracket: tuple  # (count(b_hat - 2 tol), count(b_hat + 2 tol))

    def __float__(self) -> float:
        return self.b_hat


def beta_star_threshold(g: Grid, lambda2: float, w1: np.ndarray, *, bisection_tol: float = BISECTION_TOL) -> BetaStar:
    """Smallest b with -Lap + b w1^2 - lambda2 positive definite, by bisection on n(0)."""
    w1 = np.asarray(w1, dtype=float)

    def count(b):
        return count_nonpositive(g, b * w1**2 - lambda2)

    c0 = count(0.0)
    if c0 == 0:
        return BetaStar(0.0, 0, (), (0, 0))
    hi = 1.0
    while count(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("no finite threshold: w1 vanishes where -Lap - lambda2 is negative")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while hi - lo > bisection_tol:
        mid = 0.5 * (lo + hi)
        if count(mid) > 0:
            lo = mid
        else:
            hi = mid
    probes = tuple((b, count(b)) for b in (hi + 2 * bisection_tol, 2.0 * hi, 10.0 * hi))
    return BetaStar(hi, c0, probes, (count(hi - 2 * bisection_tol), count(hi + 2 * bisection_tol)))


# -- synchronized solutions ------------------------------------------------------------------


@dataclass(frozen=True)
class SyncCheck:
    residual: float
    tolerance: float
    amplitude: float  # (1 - beta)^{-1/(p-2)}
    state: State
    norm: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def synchronized_check(g: Grid, lam: float, p: float, beta: float, *, newton_tol: float = NEWTON_TOL,
                       scalar: ScalarSolution | None = None) -> SyncCheck:
    """Residual of (s w, s w) with s = (1 - beta)^{-1/(p-2)} and w the positive scalar solution.

    The tolerance is ``10 * newton_tol * max(1, ||(s w, s w)||)``, matching
    the relative convention of the scalar solver.
    """
    if not beta < 1:
        raise BetaOutOfRange(f"synchronized solutions need beta < 1, got {beta}")
    if scalar is None:
        scalar = solve_positive_scalar(g, lam, p, newton_tol=newton_tol)
    s_amp = (1.0 - beta) ** (-1.0 / (p - 2.0))
    st = State(s_amp * scalar.w, s_amp * scalar.w)
    pr = Params(lam, lam, p, beta)
    res = fn.grad_norm(pr, g, st)
    nrm = fn.norm(g, st)
    return SyncCheck(res, 10.0 * newton_tol * max(1.0, nrm), s_amp, st, nrm)
