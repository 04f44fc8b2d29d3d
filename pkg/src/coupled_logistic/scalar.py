"""Scalar logistic problems.

* ``-Lap w = lambda w - w^{p-1}``, ``w > 0``: the semi-trivial profiles w1, w2
  and their energies c1, c2.
* ``-Lap w = lambda1 w^+ - lambda2 w^- - |w|^{p-2} w``: the sign-changing
  limit of strongly competing pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateSign, LambdaBelowPrincipal, NoConvergence
from .grid import Grid, dirichlet, lp_norm, neg_laplacian
from .newton import damped_newton
from .spectral import smallest_eigenpairs

NEWTON_TOL = 1e-10
PART_TOL = 1e-8


@dataclass(frozen=True)
class ScalarSolution:
    w: np.ndarray
    lambda_: float
    p: float
    energy: float
    residual_norm: float
    iterations: int = 0
    lambda_neg: float | None = None  # second coefficient for the limit problem

    @property
    def plus(self) -> np.ndarray:
        return np.maximum(self.w, 0.0)

    @property
    def minus(self) -> np.ndarray:
        return np.maximum(-self.w, 0.0)


def scalar_energy(g: Grid, w: np.ndarray, lam: float, p: float) -> float:
    """J_i(w) = 1/2 int |grad w|^2 - lam w^2 + 1/p int |w|^p."""
    return 0.5 * (dirichlet(g, w) - lam * lp_norm(g, w, 2) ** 2) + lp_norm(g, w, p) ** p / p


def _galerkin_amplitude(g: Grid, phi: np.ndarray, lam: float, mu: float, p: float) -> float:
    return (abs(lam - mu) * lp_norm(g, phi, 2) ** 2 / lp_norm(g, phi, p) ** p) ** (1.0 / (p - 2.0))


def _tol(g: Grid, tol: float):
    return lambda w: tol * max(1.0, np.sqrt(max(dirichlet(g, w), 0.0)))


def solve_positive_scalar(
    g: Grid,
    lam: float,
    p: float,
    *,
    newton_tol: float = NEWTON_TOL,
    max_iter: int = 100,
    seed: np.ndarray | None = None,
) -> ScalarSolution:
    """Unique positive solution of ``-Lap w = lam w - w^{p-1}`` on the grid."""
    eig = smallest_eigenpairs(g, None, 1)[0]
    if lam <= eig.value:
        raise LambdaBelowPrincipal(
            f"lambda={lam} <= lambda_1(Omega)={eig.value:.6g}: only the zero solution exists"
        )
    A = g.laplacian_matrix()
    I = sp.identity(g.size, format="csc")
    own_seed = seed is None
    if own_seed:
        seed = _galerkin_amplitude(g, eig.vector, lam, eig.value, p) * eig.vector

    def F(w):
        return neg_laplacian(g, w) - lam * w + np.abs(w) ** (p - 2.0) * w

    def J(w):
        return (A - lam * I + sp.diags((p - 1.0) * np.abs(w) ** (p - 2.0))).tocsc()

    def run(x0):
        return damped_newton(
            F,
            J,
            x0,
            norm=lambda r: lp_norm(g, r, 2),
            tol=_tol(g, newton_tol),
            max_iter=max_iter,
            admissible=lambda w: bool(np.all(w > 0)),
        )

    try:
        w, res, its = run(seed)
    except NoConvergence:
        if not own_seed:
            raise
        # far above lambda_1(Omega) the phi_1 seed is a poor guess; walk up in lambda
        w = None
        excess = lam - eig.value
        for frac in (0.0625, 0.125, 0.25, 0.5):
            sub = solve_positive_scalar(g, eig.value + frac * excess, p, newton_tol=newton_tol, max_iter=max_iter,
                                        seed=None if w is None else w)
            w = sub.w
        w, res, its = run(w)
    return ScalarSolution(w, lam, p, scalar_energy(g, w, lam, p), res, its)


def limit_residual(g: Grid, w: np.ndarray, lambda1: float, lambda2: float, p: float) -> np.ndarray:
    return neg_laplacian(g, w) - lambda1 * np.maximum(w, 0.0) + lambda2 * np.maximum(-w, 0.0) + np.abs(w) ** (p - 2.0) * w


def limit_energy(g: Grid, w: np.ndarray, lambda1: float, lambda2: float, p: float) -> float:
    """J_1(w^+) + J_2(w^-)."""
    wp, wm = np.maximum(w, 0.0), np.maximum(-w, 0.0)
    return scalar_energy(g, wp, lambda1, p) + scalar_energy(g, wm, lambda2, p)


def solve_sign_changing_limit(
    g: Grid,
    lambda1: float,
    lambda2: float,
    p: float,
    *,
    newton_tol: float = NEWTON_TOL,
    part_tol: float = PART_TOL,
    max_iter: int = 100,
    seed: np.ndarray | None = None,
) -> ScalarSolution:
    """Sign-changing solution of ``-Lap w = lambda1 w^+ - lambda2 w^- - |w|^{p-2} w``.

    The default seed is the Galerkin multiple of the second Dirichlet mode.
    """
    A = g.laplacian_matrix()
    if seed is None:
        pair = smallest_eigenpairs(g, None, 2)[1]
        lam_bar = 0.5 * (lambda1 + lambda2)
        seed = _galerkin_amplitude(g, pair.vector, lam_bar, pair.value, p) * pair.vector

    def J(w):
        d = -lambda1 * (w > 0) - lambda2 * (w < 0) + (p - 1.0) * np.abs(w) ** (p - 2.0)
        return (A + sp.diags(d)).tocsc()

    w, res, its = damped_newton(
        lambda w: limit_residual(g, w, lambda1, lambda2, p),
        J,
        seed,
        norm=lambda r: lp_norm(g, r, 2),
        tol=_tol(g, newton_tol),
        max_iter=max_iter,
    )
    total = lp_norm(g, w, 2) ** 2
    mp = lp_norm(g, np.maximum(w, 0.0), 2) ** 2
    mm = lp_norm(g, np.maximum(-w, 0.0), 2) ** 2
    if total == 0 or min(mp, mm) < part_tol * total:
        raise DegenerateSign(
            f"converged root has signed parts with L2 mass {mp:.3e} / {mm:.3e}", residual=res
        )
    return ScalarSolution(w, lambda1, p, limit_energy(g, w, lambda1, lambda2, p), res, its, lambda_neg=lambda2)
