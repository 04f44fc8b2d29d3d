"""Linking geometry for beta >= 1.

The quadratic form Q is diagonal in the Dirichlet eigenbasis, so the state
space splits into the modes where Q is negative, zero (within ``tie_tol``)
or positive. ``kappa`` counts the first two. Above the split sit two
sampled estimates: the radius beyond which J is negative on the diagonal
subspace V_j = {(u, u) : u in span(phi_1..phi_{kappa+j})}, and the positive
floor of J on small spheres of the positive part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from . import functional as fn
from .errors import BetaOutOfRange
from .functional import Params, State
from .grid import Grid
from .spectral import count_nonpositive, smallest_eigenpairs

TIE_TOL = 1e-9
SAMPLE_SEED = 20240611


@dataclass(frozen=True)
class Mode:
    index: int  # 1-based Dirichlet mode number
    component: str  # "u" or "v"
    mu: float
    q: float  # Q at the Dirichlet-normalized state
    kind: str  # "minus", "zero" or "plus"


@dataclass(frozen=True)
class SpectralSplit:
    minus_basis: list
    zero_basis: list
    kappa: int
    modes: list  # classification of every computed mode, minus/zero/plus
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # rows, unit discrete L2 norm
    tie_tol: float = TIE_TOL
    plus_projector: Callable[[State], State] = field(default=None, repr=False)  # type: ignore[assignment]

    def plus_modes(self, component: str) -> list:
        return [m for m in self.modes if m.kind == "plus" and m.component == component]


def _mode_state(g: Grid, phi: np.ndarray, component: str) -> State:
    zero = np.zeros_like(phi)
    s = State(phi, zero) if component == "u" else State(zero, phi)
    return s * (1.0 / fn.norm(g, s))


def build_split(g: Grid, pr: Params, *, tie_tol: float = TIE_TOL, extra: int = 8) -> SpectralSplit:
    """Classify (phi_k, 0) and (0, phi_k) by the sign of Q.

    Modes are computed up to ``extra`` beyond the last non-positive one so
    that the lowest positive modes are also available for sampling.
    """
    lam_max = max(pr.lambda1, pr.lambda2)
    n_low = count_nonpositive(g, -(lam_max + tie_tol))
    k = min(g.size, n_low + extra)
    pairs = smallest_eigenpairs(g, None, k)
    vals = np.array([e.value for e in pairs])
    vecs = np.array([e.vector for e in pairs])
    minus, zero, modes = [], [], []
    for comp, lam in (("u", pr.lambda1), ("v", pr.lambda2)):
        for idx, (mu, phi) in enumerate(zip(vals, vecs), start=1):
            s = _mode_state(g, phi, comp)
            q = fn.q_form(pr, g, s)
            if abs(mu - lam) <= tie_tol:
                kind = "zero"
                zero.append(s)
            elif mu < lam:
                kind = "minus"
                minus.append(s)
            else:
                kind = "plus"
            modes.append(Mode(idx, comp, float(mu), float(q), kind))
    kernel = minus + zero
    flat = [e.flat() for e in kernel]
    A = g.laplacian_matrix()
    h = g.cell_volume

    def project(s: State) -> State:
        # Dirichlet-orthogonal projection onto the complement of H- + H0
        x = s.flat()
        for e in flat:
            eu, ev = e[: g.size], e[g.size :]
            c = h * (float(s.u @ (A @ eu)) + float(s.v @ (A @ ev)))
            x = x - c * e
        return State.from_flat(x)

    return SpectralSplit(minus, zero, len(kernel), modes, vals, vecs, tie_tol, project)


# -- sampling helpers ------------------------------------------------------------------


def _sphere_directions(dim: int, n: int, seed: int = SAMPLE_SEED) -> np.ndarray:
    """Deterministic near-uniform unit vectors in R^dim (scrambled Sobol mapped through the normal quantile)."""
    m = int(np.ceil(np.log2(max(n, 2))))
    pts = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:n]
    x = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    x /= np.linalg.norm(x, axis=1)[:, None]
    coords = np.vstack([np.eye(dim), -np.eye(dim)])
    return np.vstack([coords, x])


def diagonal_basis(split: SpectralSplit, j: int) -> tuple[np.ndarray, np.ndarray]:
    """phi_1..phi_{kappa+j} (rows) and their eigenvalues."""
    k = split.kappa + j
    if k > len(split.eigenvalues):
        raise ValueError(f"need {k} modes, split holds {len(split.eigenvalues)}")
    return split.eigenvectors[:k], split.eigenvalues[:k]


def _diagonal_rays(pr: Params, g: Grid, basis: np.ndarray, mus: np.ndarray, dirs: np.ndarray):
    """Q and D of the unit-norm diagonal states (u, u) along each coefficient direction."""
    Qs, Ds = [], []
    for c in dirs:
        u = basis.T @ c
        s = State(u, u)
        s = s * (1.0 / fn.norm(g, s))
        Qs.append(fn.q_form(pr, g, s))
        Ds.append(fn.denominator(pr, g, s))
    return np.array(Qs), np.array(Ds)


def _ray_energy(Q: np.ndarray, D: np.ndarray, t: float, p: float) -> np.ndarray:
    return 0.5 * t**2 * Q + t**p / p * D


@dataclass(frozen=True)
class RadiusEstimate:
    radius: float
    sample_max: float  # max of J on the sampled sphere at ``radius``
    n_samples: int


def estimate_Rj(g: Grid, pr: Params, j: int, *, n_dirs: int = 256, split: SpectralSplit | None = None,
                rel_tol: float = 1e-10) -> RadiusEstimate:
    """Smallest radius with J < 0 at every sampled point of the sphere in V_j.

    Doubling from radius 1 brackets the sign change of the sampled maximum,
    bisection then narrows it to ``rel_tol``; the returned radius is the
    upper end of the final bracket.
    """
    if not pr.beta > 1:
        raise BetaOutOfRange(f"radius estimate needs beta > 1, got {pr.beta}")
    if split is None:
        split = build_split(g, pr)
    basis, mus = diagonal_basis(split, j)
    dirs = _sphere_directions(len(mus), n_dirs)
    Q, D = _diagonal_rays(pr, g, basis, mus, dirs)

    def smax(t):
        return float(np.max(_ray_energy(Q, D, t, pr.p)))

    hi = 1.0
    while smax(hi) >= 0:
        hi *= 2.0
    # J(0) = 0, so zero is always a valid lower end
    lo = hi / 2.0 if smax(hi / 2.0) >= 0 else 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if smax(mid) < 0:
            hi = mid
        else:
            lo = mid
    return RadiusEstimate(hi, smax(hi), len(dirs))


def ray_root(Q: float, D: float, p: float) -> float:
    """Positive zero of t -> t^2 Q / 2 + t^p D / p (inf when D >= 0, 0 when Q <= 0)."""
    if Q <= 0:
        return 0.0
    if D >= 0:
        return float("inf")
    # log form: a tiny |D| saturates to inf instead of overflowing
    e = (np.log(p * Q / 2.0) - np.log(-D)) / (p - 2.0)
    return float("inf") if e > 709.0 else float(np.exp(e))


@dataclass(frozen=True)
class AlphaEstimate:
    alpha: float  # min of J on the sampled radius-r sphere of the positive part
    r: float
    r_max_positive: float  # largest radius at which every sampled value is positive
    n_samples: int


def _plus_directions(g: Grid, split: SpectralSplit, n_dirs: int, n_modes: int) -> list[State]:
    """Unit-norm states in the positive part: pure modes, diagonal pairs and sampled combinations."""
    pu = split.plus_modes("u")[:n_modes]
    pv = split.plus_modes("v")[:n_modes]
    vec = split.eigenvectors
    basis = [_mode_state(g, vec[m.index - 1], "u") for m in pu] + [_mode_state(g, vec[m.index - 1], "v") for m in pv]
    out = list(basis)
    # (phi_k, +-phi_k) pairs are where the coupling term is strongest
    for mu_ in pu:
        for mv_ in pv:
            if mu_.index == mv_.index:
                su = _mode_state(g, vec[mu_.index - 1], "u")
                sv = _mode_state(g, vec[mv_.index - 1], "v")
                for sgn in (1.0, -1.0):
                    s = su + sgn * sv
                    out.append(s * (1.0 / fn.norm(g, s)))
    if basis:
        dirs = _sphere_directions(len(basis), n_dirs)[2 * len(basis):]
        B = np.array([b.flat() for b in basis])
        for c in dirs:
            s = State.from_flat(c @ B)
            out.append(s * (1.0 / fn.norm(g, s)))
    return out


def estimate_alpha(g: Grid, pr: Params, r: float, *, n_dirs: int = 256, n_modes: int = 6,
                   split: SpectralSplit | None = None) -> AlphaEstimate:
    """Sampled floor of J on the radius-r sphere of the positive part.

    A non-positive value is a legitimate answer meaning ``r`` is too large.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if split is None:
        split = build_split(g, pr)
    states = _plus_directions(g, split, n_dirs, n_modes)
    Q = np.array([fn.q_form(pr, g, s) for s in states])
    D = np.array([fn.denominator(pr, g, s) for s in states])
    vals = _ray_energy(Q, D, r, pr.p)
    roots = [ray_root(q, d, pr.p) for q, d in zip(Q, D)]
    return AlphaEstimate(float(vals.min()), float(r), float(min(roots)), len(states))


@dataclass(frozen=True)
class LinkingFrame:
    kappa: int
    basis_minus: list
    basis_Vj: np.ndarray  # rows phi_1..phi_{kappa+j}, unit discrete L2 norm
    mode_values: np.ndarray
    r: float
    alpha_est: float
    Rj_est: float
    j: int
    split: SpectralSplit = field(repr=False)
    radius: RadiusEstimate | None = None
    alpha: AlphaEstimate | None = None


def build_frame(pr: Params, g: Grid, j: int = 1, *, n_samples: int = 256, r: float | None = None) -> LinkingFrame:
    """Split, V_j basis, R_j (beta > 1 only) and the floor alpha at radius ``r``.

    By default ``r`` is half the largest sampled radius with a positive floor,
    capped below R_j.
    """
    split = build_split(g, pr)
    basis, mus = diagonal_basis(split, j)
    rad = estimate_Rj(g, pr, j, n_dirs=n_samples, split=split) if pr.beta > 1 else None
    Rj = rad.radius if rad is not None else float("inf")
    if r is None:
        probe = estimate_alpha(g, pr, 1.0, n_dirs=n_samples, split=split)
        r = 0.5 * min(probe.r_max_positive, Rj, 1e3)
    alpha = estimate_alpha(g, pr, r, n_dirs=n_samples, split=split)
    return LinkingFrame(
        kappa=split.kappa,
        basis_minus=split.minus_basis,
        basis_Vj=basis,
        mode_values=mus,
        r=float(r),
        alpha_est=alpha.alpha,
        Rj_est=Rj,
        j=j,
        split=split,
        radius=rad,
        alpha=alpha,
    )


def frame_report(frame: LinkingFrame, pr: Params) -> str:
    """Audit text: kappa, per-mode Q signs, R_j and the alpha estimate."""
    lines = [
        f"lambda1: {pr.lambda1!r}",
        f"lambda2: {pr.lambda2!r}",
        f"p: {pr.p!r}",
        f"beta: {pr.beta!r}",
        f"kappa: {frame.kappa}",
        f"j: {frame.j}",
        f"tie_tol: {frame.split.tie_tol!r}",
    ]
    shown = frame.kappa + frame.j + 1
    for m in frame.split.modes:
        if m.index <= shown:
            sign = "-" if m.kind == "minus" else ("0" if m.kind == "zero" else "+")
            lines.append(f"mode {m.component}{m.index}: mu={m.mu!r} q={m.q!r} sign={sign}")
    if frame.radius is not None:
        lines.append(f"Rj: {frame.radius.radius!r}")
        lines.append(f"Rj_sample_max: {frame.radius.sample_max!r}")
        lines.append(f"Rj_samples: {frame.radius.n_samples}")
    else:
        lines.append("Rj: inf")
    if frame.alpha is not None:
        lines.append(f"r: {frame.alpha.r!r}")
        lines.append(f"alpha: {frame.alpha.alpha!r}")
        lines.append(f"alpha_over_r2: {frame.alpha.alpha / frame.alpha.r**2!r}")
        lines.append(f"r_max_positive: {frame.alpha.r_max_positive!r}")
        lines.append(f"alpha_samples: {frame.alpha.n_samples}")
    return "\n".join(lines) + "\n"
