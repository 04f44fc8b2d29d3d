"""Damped Newton iteration shared by the scalar and system solvers."""

from __future__ import annotations

import logging
import warnings
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .errors import NoConvergence, SingularJacobian

log = logging.getLogger(__name__)


def sparse_solve(J, rhs: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(J, rhs)
        except (spla.MatrixRankWarning, RuntimeError) as exc:
            raise SingularJacobian(f"Jacobian factorization failed: {exc}", sigma_min=smallest_singular(J)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("Jacobian solve produced non-finite values", sigma_min=smallest_singular(J))
    return x


def smallest_singular(J) -> float:
    """Cheap estimate of the smallest singular value (dense for small systems)."""
    n = J.shape[0]
    try:
        if n <= 2000:
            return float(np.linalg.svd(J.toarray(), compute_uv=False)[-1])
        s = spla.svds(J, k=1, which="SM", return_singular_vectors=False)
        return float(s[0])
    except Exception:  # noqa: BLE001
        return float("nan")


def damped_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], object],
    x0: np.ndarray,
    *,
    norm: Callable[[np.ndarray], float],
    tol: Callable[[np.ndarray], float],
    max_iter: int = 100,
    admissible: Callable[[np.ndarray], bool] | None = None,
    scale_step: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    max_halvings: int = 30,
) -> tuple[np.ndarray, float, int]:
    """Newton with step halving on residual increase.

    ``admissible`` rejects trial points (e.g. leaving the positive cone);
    ``scale_step`` may rewrite the Newton step (deflation). Returns
    ``(x, residual_norm, iterations)``; raises :class:`NoConvergence`.
    """
    x = np.array(x0, dtype=float)
    F = residual(x)
    r = norm(F)
    for it in range(max_iter + 1):
        if r <= tol(x):
            return x, r, it
        if it == max_iter:
            break
        dx = sparse_solve(jacobian(x), -F)
        if scale_step is not None:
            dx = scale_step(x, dx)
        step = 1.0
        for _ in range(max_halvings):
            xt = x + step * dx
            if admissible is None or admissible(xt):
                Ft = residual(xt)
                rt = norm(Ft)
                if np.isfinite(rt) and rt < r:
                    break
            step *= 0.5
        else:
            raise NoConvergence(f"line search failed at iteration {it}, residual {r:.3e}", residual=r)
        x, F, r = xt, Ft, rt
        log.debug("newton it=%d residual=%.3e step=%.3g", it, r, step)
    raise NoConvergence(f"Newton did not converge in {max_iter} iterations, residual {r:.3e}", residual=r)
