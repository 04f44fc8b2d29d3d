"""Independent reference computations used by the tests.

Nothing here imports the package: each oracle rebuilds what it needs from
numpy/scipy/sympy so agreement is a genuine cross-check.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, root


# -- dense stencil ---------------------------------------------------------------------------


def dense_neg_laplacian(n, h) -> np.ndarray:
    """Dense -Laplacian on interior nodes, assembled entry by entry."""
    if np.isscalar(n):
        n, h = (n,), (h,)
    N = int(np.prod(n))
    A = np.zeros((N, N))
    idx = np.arange(N).reshape(n)
    for pos in np.ndindex(*n):
        i = idx[pos]
        for ax, (na, ha) in enumerate(zip(n, h)):
            A[i, i] += 2.0 / ha**2
            for step in (-1, 1):
                q = list(pos)
                q[ax] += step
                if 0 <= q[ax] < na:
                    A[i, idx[tuple(q)]] -= 1.0 / ha**2
    return A


def dense_eigenvalues(n, h, V=None) -> np.ndarray:
    A = dense_neg_laplacian(n, h)
    if V is not None:
        A = A + np.diag(V)
    return la.eigvalsh(A)


# -- shooting for -w'' = f(w) on (0, L), w(0) = w(L) = 0 -------------------------------------


def _first_zero(rhs, slope, t_max):
    def hit(t, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (0.0, t_max), [0.0, slope], events=hit, rtol=1e-12, atol=1e-14, dense_output=True,
                    first_step=1e-6)
    if sol.t_events[0].size == 0:
        return np.inf, sol
    return float(sol.t_events[0][0]), sol


def shoot_positive(lam: float, p: float, L: float):
    """Positive solution of -w'' = lam w - w^{p-1}, w(0) = w(L) = 0, by shooting on w'(0).

    The first-zero time grows monotonically from pi/sqrt(lam) to infinity
    as w'(0) climbs to the heteroclinic slope, so bisection is safe.
    Returns (slope, dense solution object).
    """

    def rhs(t, y):
        w, dw = y
        return [dw, -lam * w + np.abs(w) ** (p - 2.0) * w]

    peak = lam ** (1.0 / (p - 2.0))
    a_max = np.sqrt(2.0 * (0.5 * lam * peak**2 - peak**p / p))
    if not np.pi / np.sqrt(lam) < L:
        raise ValueError("lam must exceed (pi/L)^2")

    def miss(a):
        return _first_zero(rhs, a, 4.0 * L)[0] - L

    a = brentq(miss, 1e-6 * a_max, a_max * (1.0 - 1e-12), xtol=1e-15, rtol=1e-15)
    return a, _first_zero(rhs, a, 2.0 * L)[1]


def positive_profile(lam: float, p: float, L: float, x: np.ndarray) -> np.ndarray:
    _, sol = shoot_positive(lam, p, L)
    return sol.sol(x)[0]


def odd_profile(lam: float, p: float, L: float, x: np.ndarray) -> np.ndarray:
    """Sign-changing solution with one interior zero at L/2, positive first.

    It is the positive solution on (0, L/2) continued by odd reflection.
    """
    _, sol = shoot_positive(lam, p, L / 2.0)
    x = np.asarray(x, dtype=float)
    left = x <= L / 2.0
    out = np.empty_like(x)
    out[left] = sol.sol(x[left])[0]
    out[~left] = -sol.sol(L - x[~left])[0]
    return out


def continuum_energy(lam: float, p: float, L: float) -> float:
    """J(w) = int 1/2 w'^2 - lam/2 w^2 + 1/p w^p for the shooting profile."""
    _, sol = shoot_positive(lam, p, L)
    x = np.linspace(0.0, L, 20001)
    w, dw = sol.sol(x)
    f = 0.5 * dw**2 - 0.5 * lam * w**2 + np.abs(w) ** p / p
    return float(np.trapezoid(f, x))


# -- the one-interior-node grid --------------------------------------------------------------


def single_node_poly(lambda1, lambda2, p, beta, h=np.pi / 2):
    """Energy of the 1-node grid as a sympy expression in (u, v), plus its symbols.

    With a single interior node the stencil is 2/h^2 and the quadrature
    weight is h, so everything is a polynomial in |u|, |v|.
    """
    import sympy as sy

    u, v = sy.symbols("u v", real=True)
    k = sy.Rational(2) / sy.nsimplify(h) ** 2 if isinstance(h, sy.Basic) else 2.0 / h**2
    P = sy.nsimplify(p)
    expr = h * (
        sy.Rational(1, 2) * ((k - lambda1) * u**2 + (k - lambda2) * v**2)
        + (sy.Abs(u) ** P + sy.Abs(v) ** P) / P
        - 2 * beta / P * sy.Abs(u) ** (P / 2) * sy.Abs(v) ** (P / 2)
    )
    return expr, u, v


def single_node_energy(lambda1, lambda2, p, beta, h=np.pi / 2):
    """Vectorized numpy version of :func:`single_node_poly`."""
    k = 2.0 / h**2

    def E(u, v):
        au, av = np.abs(u), np.abs(v)
        return h * (
            0.5 * ((k - lambda1) * u**2 + (k - lambda2) * v**2)
            + (au**p + av**p) / p
            - 2.0 * beta / p * au ** (p / 2) * av ** (p / 2)
        )

    return E


def brute_force_min(E, A: float, n: int = 2001, zooms: int = 1):
    """Global minimum over [-A, A]^2 on an n x n lattice, then ``zooms`` refinements
    on a window of +-4 lattice cells around the best node."""
    cu, cv, half = 0.0, 0.0, A
    best = None
    for _ in range(zooms + 1):
        xs = np.linspace(cu - half, cu + half, n)
        ys = np.linspace(cv - half, cv + half, n)
        U, Vv = np.meshgrid(xs, ys, indexing="ij")
        Z = E(U, Vv)
        i = np.unravel_index(np.argmin(Z), Z.shape)
        best = (float(Z[i]), float(U[i]), float(Vv[i]))
        cu, cv = best[1], best[2]
        half = 4.0 * (xs[1] - xs[0])
    return best


def critical_points(lambda1, lambda2, p, beta, h=np.pi / 2, A: float = 5.0, n: int = 2001):
    """All critical points of the single-node energy, located by a lattice scan of
    the gradient norm and polished by a root solve on the exact gradient."""
    import sympy as sy

    expr, u, v = single_node_poly(lambda1, lambda2, p, beta, h)
    grad = [sy.diff(expr, s) for s in (u, v)]
    gf = sy.lambdify((u, v), grad, "numpy")

    xs = np.linspace(-A, A, n)
    U, Vv = np.meshgrid(xs, xs, indexing="ij")
    G = np.asarray(gf(U, Vv), dtype=float)
    gn = np.hypot(G[0], G[1])
    # local minima of |grad| on the lattice
    inner = gn[1:-1, 1:-1]
    mask = np.ones_like(inner, dtype=bool)
    for du in (-1, 0, 1):
        for dv in (-1, 0, 1):
            if du or dv:
                mask &= inner <= gn[1 + du : n - 1 + du, 1 + dv : n - 1 + dv]
    pts = []
    for i, j in np.argwhere(mask) + 1:
        sol = root(lambda x: np.asarray(gf(*x), dtype=float), [U[i, j], Vv[i, j]], method="hybr", tol=1e-15)
        x = sol.x
        if np.linalg.norm(np.asarray(gf(*x), dtype=float)) < 1e-10 and np.all(np.abs(x) <= A):
            if not any(np.linalg.norm(x - q) < 1e-6 for q in pts):
                pts.append(x)
    return pts, sy.lambdify((u, v), expr, "numpy")
