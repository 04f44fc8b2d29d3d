"""The coupled logistic energy J_beta on a grid and everything derived from it.

All integrals use the nodal rule of :mod:`grid`, and Dirichlet integrals are
evaluated as ``integral(u * (-Lap u))`` so the discrete energy is an exact
function of the nodal values. Gradients are Riesz representatives in the
discrete L2 inner product, i.e. ``dJ(s)[d] == inner(gradient(s), d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import BetaOutOfRange, HypothesisViolation, NotInLMinus
from .grid import Grid, _check, neg_laplacian


@dataclass(frozen=True)
class Params:
    lambda1: float
    lambda2: float
    p: float
    beta: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "p", "beta"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.p <= 2:
            raise ValueError(f"p must exceed 2, got {self.p}")

    def with_beta(self, beta: float) -> "Params":
        return replace(self, beta=float(beta))

    def check(self, g: Grid, *, require_order: bool = True) -> float:
        """Verify lambda2 >= lambda1 > lambda_1(Omega) on ``g``.

        Returns the discrete principal eigenvalue used for the check.
        """
        from .spectral import principal

        mu1 = principal(g).value
        if self.lambda1 <= mu1 or self.lambda2 <= mu1:
            raise HypothesisViolation(
                f"need lambda_i > lambda_1(Omega) = {mu1:.6g}; got lambda1={self.lambda1}, lambda2={self.lambda2}"
            )
        if require_order and self.lambda2 < self.lambda1:
            raise HypothesisViolation(f"need lambda2 >= lambda1; got {self.lambda2} < {self.lambda1}")
        return mu1


@dataclass(frozen=True)
class State:
    u: np.ndarray
    v: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64).reshape(-1)
        v = np.zeros_like(u) if self.v is None else np.array(self.v, dtype=np.float64).reshape(-1)
        if u.shape != v.shape:
            raise ValueError(f"components differ in size: {u.shape} vs {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("state has non-finite entries")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, g: Grid) -> "State":
        return cls(g.zeros(), g.zeros())

    @classmethod
    def from_flat(cls, z: np.ndarray) -> "State":
        n = z.shape[0] // 2
        return cls(z[:n], z[n:])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    def __add__(self, other: "State") -> "State":
        return State(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "State") -> "State":
        return State(self.u - other.u, self.v - other.v)

    def __mul__(self, c: float) -> "State":
        return State(c * self.u, c * self.v)

    __rmul__ = __mul__

    def __neg__(self) -> "State":
        return State(-self.u, -self.v)

    def abs(self) -> "State":
        return State(np.abs(self.u), np.abs(self.v))

    def swap(self) -> "State":
        return State(self.v, self.u)


# -- building blocks -----------------------------------------------------------


def _dir(g: Grid, f: np.ndarray) -> float:
    return float(np.dot(f, neg_laplacian(g, f))) * g.cell_volume


def _sq(g: Grid, f: np.ndarray) -> float:
    return float(np.dot(f, f)) * g.cell_volume


def norm(g: Grid, s: State) -> float:
    """The product Dirichlet norm ||(u, v)||."""
    return float(np.sqrt(max(_dir(g, s.u) + _dir(g, s.v), 0.0)))


def l2_norm(g: Grid, s: State) -> float:
    return float(np.sqrt(_sq(g, s.u) + _sq(g, s.v)))


def scale(g: Grid, s: State) -> float:
    """Energy scale max(1, ||s||^2) used to make residual tolerances relative."""
    return max(1.0, norm(g, s) ** 2)


def power_integrals(pr: Params, g: Grid, s: State) -> tuple[float, float, float]:
    """(integral |u|^p, integral |v|^p, integral |u|^{p/2} |v|^{p/2})."""
    _check(g, s.u)
    su, sv, suv = kernels.power_sums(s.u, s.v, pr.p)
    w = g.cell_volume
    return su * w, sv * w, suv * w


def q_form(pr: Params, g: Grid, s: State) -> float:
    return _dir(g, s.u) - pr.lambda1 * _sq(g, s.u) + _dir(g, s.v) - pr.lambda2 * _sq(g, s.v)


def denominator(pr: Params, g: Grid, s: State) -> float:
    su, sv, suv = power_integrals(pr, g, s)
    return su + sv - 2.0 * pr.beta * suv


def overlap(pr: Params, g: Grid, s: State) -> float:
    return power_integrals(pr, g, s)[2]


# -- energy and gradient ---------------------------------------------------------


def energy(pr: Params, g: Grid, s: State) -> float:
    su, sv, suv = power_integrals(pr, g, s)
    return 0.5 * q_form(pr, g, s) + (su + sv) / pr.p - 2.0 * pr.beta / pr.p * suv


def energy_plus(pr: Params, g: Grid, s: State) -> float:
    up = np.maximum(s.u, 0.0)
    vp = np.maximum(s.v, 0.0)
    quad = _dir(g, s.u) - pr.lambda1 * _sq(g, up) + _dir(g, s.v) - pr.lambda2 * _sq(g, vp)
    su, sv, suv = power_integrals(pr, g, s)
    return 0.5 * quad + (su + sv) / pr.p - 2.0 * pr.beta / pr.p * suv


def gradient(pr: Params, g: Grid, s: State) -> State:
    gu, gv = kernels.nonlinear_grad(s.u, s.v, pr.p, pr.beta)
    gu += neg_laplacian(g, s.u) - pr.lambda1 * s.u
    gv += neg_laplacian(g, s.v) - pr.lambda2 * s.v
    return State(gu, gv)


def gradient_plus(pr: Params, g: Grid, s: State) -> State:
    gu, gv = kernels.nonlinear_grad(s.u, s.v, pr.p, pr.beta)
    gu += neg_laplacian(g, s.u) - pr.lambda1 * np.maximum(s.u, 0.0)
    gv += neg_laplacian(g, s.v) - pr.lambda2 * np.maximum(s.v, 0.0)
    return State(gu, gv)


def grad_norm(pr: Params, g: Grid, s: State, *, plus: bool = False) -> float:
    return l2_norm(g, (gradient_plus if plus else gradient)(pr, g, s))


def hessian(pr: Params, g: Grid, s: State, *, plus: bool = False, floor: float = 1e-12) -> sp.csc_matrix:
    """Sparse Jacobian of :func:`gradient` (or :func:`gradient_plus`) in flat (u, v) ordering.

    For p < 4 the coupling second derivatives are singular where a
    component vanishes; there ``|u|`` is replaced by ``max(|u|, floor)``.
    """
    p, b = pr.p, pr.beta
    u, v = s.u, s.v
    au, av = np.abs(u), np.abs(v)
    a = 0.5 * p - 1.0
    hb = 0.5 * p
    if a < 1.0:
        au_c = np.maximum(au, floor)
        av_c = np.maximum(av, floor)
    else:
        au_c, av_c = au, av
    d_uu = (p - 1.0) * au ** (p - 2.0) - b * a * au_c ** (a - 1.0) * av**hb
    d_vv = (p - 1.0) * av ** (p - 2.0) - b * a * av_c ** (a - 1.0) * au**hb
    d_uv = -b * hb * np.sign(u) * np.sign(v) * au**a * av ** (hb - 1.0)
    if plus:
        d_uu = d_uu - pr.lambda1 * (u > 0)
        d_vv = d_vv - pr.lambda2 * (v > 0)
    else:
        d_uu = d_uu - pr.lambda1
        d_vv = d_vv - pr.lambda2
    A = g.laplacian_matrix()
    D = sp.diags(d_uv)
    return sp.bmat([[A + sp.diags(d_uu), D], [D, A + sp.diags(d_vv)]], format="csc")


# -- Nehari machinery --------------------------------------------------------------


def nehari_residual(pr: Params, g: Grid, s: State) -> float:
    if not (np.any(s.u) or np.any(s.v)):
        raise ValueError("Nehari residual undefined at the zero state")
    return q_form(pr, g, s) + denominator(pr, g, s)


def _lminus_parts(pr: Params, g: Grid, s: State) -> tuple[float, float]:
    if pr.beta >= 1:
        raise BetaOutOfRange(f"Nehari projection needs beta < 1, got {pr.beta}")
    Q = q_form(pr, g, s)
    if not Q < 0:
        raise NotInLMinus(f"quadratic form is {Q:.6g} >= 0")
    D = denominator(pr, g, s)
    return -Q, D


def nehari_project(pr: Params, g: Grid, s: State) -> tuple[float, State]:
    """Scale ``s`` onto the Nehari set: returns (t_hat, t_hat * s)."""
    negQ, D = _lminus_parts(pr, g, s)
    t = (negQ / D) ** (1.0 / (pr.p - 2.0))
    return t, t * s


def quotient_energy(pr: Params, g: Grid, s: State) -> float:
    """Energy of the Nehari projection of ``s`` in closed form (scale invariant)."""
    negQ, D = _lminus_parts(pr, g, s)
    p = pr.p
    k = (p - 2.0) / (2.0 * p)
    # logs keep the quotient finite when -Q and D are tiny or huge
    return -k * np.exp(p / (p - 2.0) * np.log(negQ) - 2.0 / (p - 2.0) * np.log(D))


def quotient_gradient(pr: Params, g: Grid, s: State) -> State:
    """L2 gradient of :func:`quotient_energy`; equals t_hat * gradient(t_hat * s)."""
    t, shat = nehari_project(pr, g, s)
    return t * gradient(pr, g, shat)
