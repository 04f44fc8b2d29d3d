"""Eigenpairs of the discrete Dirichlet -Laplacian and of Schrodinger
operators -Laplacian + V, plus exact counting of non-positive eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import GridError, NoConvergence
from .grid import Grid, lp_norm

EIG_TOL = 1e-10
DENSE_MAX = 400


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def operator_matrix(g: Grid, V=None) -> sp.csc_matrix:
    A = g.laplacian_matrix()
    if V is None:
        return A
    V = _potential(g, V)
    return (A + sp.diags(V)).tocsc()


def _potential(g: Grid, V) -> np.ndarray:
    if np.isscalar(V):
        V = np.full(g.size, float(V))
    V = np.asarray(V, dtype=float)
    if V.shape != (g.size,):
        raise GridError(f"potential has shape {V.shape}, grid has {g.size} nodes")
    if not np.all(np.isfinite(V)):
        raise GridError("potential has non-finite entries")
    return V


def _normalize(g: Grid, x: np.ndarray) -> np.ndarray:
    x = x / lp_norm(g, x, 2)
    big = np.abs(x) > 1e-10 * np.abs(x).max()
    first = int(np.argmax(big))
    if x[first] < 0:
        x = -x
    return x


def smallest_eigenpairs(g: Grid, V=None, k: int = 1, *, eig_tol: float = EIG_TOL, dense: bool | None = None) -> list[EigenPair]:
    """The ``k`` smallest eigenpairs of -Laplacian + V, ascending.

    Vectors are normalized to unit discrete L2 norm with their first
    non-negligible entry positive.
    """
    N = g.size
    if not 1 <= k <= N:
        raise GridError(f"k must lie in [1, {N}], got {k}")
    M = operator_matrix(g, V)
    if dense is None:
        dense = N <= DENSE_MAX
    if dense:
        w, X = la.eigh(M.toarray(), subset_by_index=(0, k - 1))
    else:
        Vmin = 0.0 if V is None else float(np.min(_potential(g, V)))
        sigma = Vmin - 1.0
        # shift-invert about a point strictly below the spectrum
        w, X = spla.eigsh(M, k=k, sigma=sigma, which="LM", tol=0.0)
        order = np.argsort(w)
        w, X = w[order], X[:, order]

    pairs = []
    for j in range(k):
        x = _normalize(g, X[:, j])
        lam = float(w[j])
        res = lp_norm(g, M @ x - lam * x, 2)
        if res > eig_tol * max(1.0, abs(lam)):
            raise NoConvergence(f"eigenpair {j} residual {res:.3e} above tolerance", residual=res)
        pairs.append(EigenPair(lam, x))
    return pairs


def principal(g: Grid) -> EigenPair:
    """Discrete (lambda_1(Omega), phi_1)."""
    return smallest_eigenpairs(g, None, 1)[0]


def laplacian_eigenvalues_1d(g: Grid, k: int) -> np.ndarray:
    """Closed-form discrete eigenvalues (4/h^2) sin^2(j h pi / (2 L)) on an interval."""
    if g.dim != 1:
        raise GridError("closed form implemented for intervals only")
    L, h = g.extent[0], g.h[0]
    j = np.arange(1, k + 1)
    return 4.0 / h**2 * np.sin(j * np.pi * h / (2 * L)) ** 2


def count_nonpositive(g: Grid, V=None) -> int:
    """Exact number of eigenvalues <= 0 of -Laplacian + V, by inertia."""
    Vv = np.zeros(g.size) if V is None else _potential(g, V)
    if g.dim == 1:
        h2 = g.h[0] ** 2
        diag = np.ascontiguousarray(2.0 / h2 + Vv)
        off = np.full(max(g.size - 1, 1), -1.0 / h2)
        return int(kernels.sturm_count(diag, off, 0.0))
    M = operator_matrix(g, Vv)
    if g.size <= DENSE_MAX:
        return int(np.sum(la.eigvalsh(M.toarray()) <= 0.0))
    return _lu_inertia(M)


def _lu_inertia(M: sp.csc_matrix) -> int:
    # symmetric banded operator: unpivoted LU is LDL^T, so sign(diag U) is the inertia
    lu = spla.splu(
        M,
        permc_spec="NATURAL",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    d = lu.U.diagonal()
    if not np.all(lu.perm_r == np.arange(M.shape[0])):
        return int(np.sum(np.linalg.eigvalsh(M.toarray()) <= 0.0))
    return int(np.sum(d <= 0.0))
