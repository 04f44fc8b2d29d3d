"""Critical-point finders for J_beta.

ground_state
    Minimizes the Nehari quotient over L^- (beta < 1) by Sobolev-preconditioned
    gradient descent, then Newton-refines.
mountain_pass
    Climbing-image string method on J_beta^+ between the semi-trivial wells
    (w1, 0) and (0, w2) (beta < 0), then Newton-refines.
linking_search
    Seeds from the maximum of J_beta on a diagonal eigen-subspace and runs a
    Newton saddle search, accepting only positive-energy roots (beta >= 1).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as la
import scipy.optimize as so
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import functional as fn
from .errors import (
    BetaOutOfRange,
    EndpointCollapse,
    NoConvergence,
    NotInLMinus,
    NoVectorialSolution,
    PositiveSolutionAnomaly,
    SeedNotInLMinus,
    SingularJacobian,
)
from .functional import Params, State
from .grid import Grid
from .newton import sparse_solve
from .scalar import PART_TOL, solve_positive_scalar
from .spectral import smallest_eigenpairs

log = logging.getLogger(__name__)

CRIT_TOL = 1e-8


@dataclass(frozen=True)
class Flags:
    u_nontrivial: bool
    v_nontrivial: bool
    u_sign_changing: bool
    v_sign_changing: bool
    componentwise_nonneg: bool

    @property
    def vectorial(self) -> bool:
        return self.u_nontrivial and self.v_nontrivial

    @property
    def semi_trivial(self) -> bool:
        return self.u_nontrivial != self.v_nontrivial

    def names(self) -> list[str]:
        return [k for k, v in self.__dict__.items() if v]


@dataclass
class SolutionRecord:
    state: State
    energy: float
    grad_norm: float
    kind: str
    flags: Flags
    params_used: Params
    iterations: int
    info: dict = field(default_factory=dict)


def classify(g: Grid, s: State, part_tol: float = PART_TOL) -> Flags:
    """Nontriviality, sign change and non-negativity from L2 masses of signed parts."""
    w = g.cell_volume

    def masses(f):
        pos = float(np.sum(np.maximum(f, 0.0) ** 2)) * w
        neg = float(np.sum(np.maximum(-f, 0.0) ** 2)) * w
        return pos, neg

    up, un = masses(s.u)
    vp, vn = masses(s.v)
    mu, mv = up + un, vp + vn
    total = mu + mv
    if total == 0.0:
        return Flags(False, False, False, False, True)
    u_nt = mu >= part_tol * total
    v_nt = mv >= part_tol * total
    amp = max(np.abs(s.u).max(), np.abs(s.v).max())
    return Flags(
        u_nontrivial=bool(u_nt),
        v_nontrivial=bool(v_nt),
        u_sign_changing=bool(u_nt and min(up, un) >= part_tol * mu),
        v_sign_changing=bool(v_nt and min(vp, vn) >= part_tol * mv),
        componentwise_nonneg=bool(min(s.u.min(), s.v.min()) >= -part_tol * amp),
    )


def crit_threshold(g: Grid, s: State, crit_tol: float = CRIT_TOL) -> float:
    return crit_tol * max(1.0, fn.norm(g, s))


def make_record(pr: Params, g: Grid, s: State, kind: str, iterations: int, *, plus: bool = False, **info) -> SolutionRecord:
    e = fn.energy_plus(pr, g, s) if plus else fn.energy(pr, g, s)
    return SolutionRecord(
        state=s,
        energy=e,
        grad_norm=fn.grad_norm(pr, g, s, plus=plus),
        kind=kind,
        flags=classify(g, s),
        params_used=pr,
        iterations=iterations,
        info=dict(info),
    )


# -- Newton refinement with optional deflation ---------------------------------------


def newton_refine(
    pr: Params,
    g: Grid,
    s: State,
    deflate: list[State] | tuple = (),
    *,
    plus: bool = False,
    crit_tol: float = CRIT_TOL,
    max_iter: int = 100,
    deflation_shift: float = 1.0,
    anchor_tol: float = 1e-6,
    kind: str = "refined",
) -> SolutionRecord:
    """Newton on the full gradient with step halving.

    Each anchor in ``deflate`` multiplies the residual by
    ``1/||s - anchor||^2 + deflation_shift`` so the iteration is repelled
    from solutions already found. For p < 4 and beta < 0 a step that would
    push a nodal value across zero stops at zero, which lets dead cores
    (exact zeros of one component where the other lives) settle.
    """
    grad = fn.gradient_plus if plus else fn.gradient
    w = g.cell_volume
    anchors = [a.flat() for a in deflate]
    x = s.flat()
    clamp = pr.p < 4.0 and pr.beta < 0.0

    def F(x):
        return grad(pr, g, State.from_flat(x)).flat()

    def defl(x):
        m, dlog = 1.0, np.zeros_like(x)
        for a in anchors:
            d = x - a
            rho = w * float(d @ d)
            mk = 1.0 / rho + deflation_shift
            m *= mk
            dlog += (-2.0 * w * d / rho**2) / mk
        return m, dlog

    def merit(x, Fx):
        r = np.sqrt(w * float(Fx @ Fx))
        return defl(x)[0] * r if anchors else r, r

    Fx = F(x)
    M, r = merit(x, Fx)
    it = 0
    while True:
        if r <= crit_threshold(g, State.from_flat(x), crit_tol):
            break
        if it >= max_iter:
            raise NoConvergence(f"Newton refinement did not converge in {max_iter} iterations, residual {r:.3e}", residual=r)
        H = fn.hessian(pr, g, State.from_flat(x), plus=plus)
        dx = sparse_solve(H, -Fx)
        if clamp:
            # Newton overshoots the |u|^{p/2-1} singularity and flips sign; land on zero instead
            flip = (x != 0.0) & (np.sign(x + dx) != np.sign(x))
            dx[flip] = -x[flip]
        if anchors:
            _, dlog = defl(x)
            denom = 1.0 - float(dlog @ dx)
            if denom != 0.0:
                dx = dx / denom
        step = 1.0
        for _ in range(40):
            xt = x + step * dx
            Ft = F(xt)
            Mt, rt = merit(xt, Ft)
            if np.isfinite(Mt) and Mt < M:
                break
            step *= 0.5
        else:
            raise NoConvergence(f"Newton line search failed at iteration {it}, residual {r:.3e}", residual=r)
        x, Fx, M, r = xt, Ft, Mt, rt
        it += 1
    out = State.from_flat(x)
    for a in deflate:
        if fn.l2_norm(g, out - a) <= anchor_tol:
            raise NoConvergence("deflated Newton returned to a deflation anchor", residual=r)
    return make_record(pr, g, out, kind, it, plus=plus)


# -- ground state ------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _laplacian_lu(g: Grid):
    return spla.splu(g.laplacian_matrix())


def sobolev(g: Grid, gs: State) -> State:
    """Riesz representative in the Dirichlet inner product: (-Lap)^{-1} applied per component."""
    lu = _laplacian_lu(g)
    return State(lu.solve(gs.u), lu.solve(gs.v))


def semi_trivial_profiles(pr: Params, g: Grid):
    """Positive scalar solutions (w1, w2) for lambda1, lambda2 (shared when equal)."""
    s1 = solve_positive_scalar(g, pr.lambda1, pr.p)
    s2 = s1 if pr.lambda2 == pr.lambda1 else solve_positive_scalar(g, pr.lambda2, pr.p)
    return s1, s2


def snap_trivial(g: Grid, s: State, rel: float = 1e-12) -> State:
    """Zero a component whose L2 mass is negligible next to the other's."""
    mu = float(s.u @ s.u)
    mv = float(s.v @ s.v)
    total = mu + mv
    if total == 0.0:
        return s
    if mu < rel * total:
        return State(np.zeros_like(s.u), s.v)
    if mv < rel * total:
        return State(s.u, np.zeros_like(s.v))
    return s


def quotient_descent(
    pr: Params,
    g: Grid,
    seed: State,
    *,
    tol: float = 1e-7,
    max_iter: int = 5000,
) -> tuple[State, int]:
    """Minimize the Nehari quotient by preconditioned descent with Armijo backtracking.

    Iterates are kept on the Nehari set. Stops when the Dirichlet-dual norm of
    the gradient drops below ``tol * scale`` or progress stalls.
    """
    _, x = fn.nehari_project(pr, g, seed)
    e = fn.energy(pr, g, x)
    alpha = 1.0
    it = 0
    prev = None
    for it in range(1, max_iter + 1):
        gr = fn.gradient(pr, g, x)
        d = -1.0 * sobolev(g, gr)
        slope = g.cell_volume * float(gr.flat() @ d.flat())  # = -||gr||_{H^-1}^2
        if np.sqrt(-slope) <= tol * fn.scale(g, x):
            break
        if prev is not None:
            # Barzilai-Borwein step in the Dirichlet metric
            sx = (x - prev[0]).flat()
            sg = (gr - prev[1]).flat()
            den = float(sx @ sg)
            if den > 0:
                alpha = float(np.clip(float(sx @ _dir_apply(g, sx)) / den, 1e-6, 1e6))
        prev = (x, gr)
        accepted = False
        for _ in range(60):
            trial = x + alpha * d
            try:
                et = fn.quotient_energy(pr, g, trial)
            except NotInLMinus:
                alpha *= 0.5
                continue
            if et <= e + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        _, x = fn.nehari_project(pr, g, snap_trivial(g, trial))
        stalled = abs(e - et) <= 1e-15 * max(1.0, abs(e))
        e = fn.energy(pr, g, x)
        if stalled:
            break
    return x, it


def _dir_apply(g: Grid, z: np.ndarray) -> np.ndarray:
    s = State.from_flat(z)
    A = g.laplacian_matrix()
    return np.concatenate([A @ s.u, A @ s.v])


def ground_state(
    pr: Params,
    g: Grid,
    seed: State | None = None,
    *,
    crit_tol: float = CRIT_TOL,
    descent_tols: tuple[float, ...] = (1e-3, 1e-5, 1e-7, 1e-9),
    check: bool = True,
) -> SolutionRecord:
    """Nehari ground state for beta < 1.

    Default seed is (w1, w2). The minimizer is replaced by (|u|, |v|) before
    the Newton refinement, so the result is componentwise non-negative.
    """
    if pr.beta >= 1:
        raise BetaOutOfRange(f"ground state needs beta < 1, got {pr.beta}")
    if check:
        pr.check(g)
    info: dict = {}
    if seed is None:
        s1, s2 = semi_trivial_profiles(pr, g)
        seed = State(s1.w, s2.w)
        info["c1"], info["c2"] = s1.energy, s2.energy
    if not fn.q_form(pr, g, seed) < 0:
        raise SeedNotInLMinus("ground-state seed has non-negative quadratic form")
    seed_level = fn.quotient_energy(pr, g, seed)
    x = seed
    its = 0
    rec = None
    last_err: Exception | None = None
    for tol in descent_tols:
        x, k = quotient_descent(pr, g, x, tol=tol)
        its += k
        _, x = fn.nehari_project(pr, g, snap_trivial(g, x.abs()))
        level = fn.energy(pr, g, x)
        try:
            cand = newton_refine(pr, g, x, crit_tol=crit_tol, kind="ground")
        except NoConvergence as exc:
            last_err = exc
            continue
        # Newton must stay at the minimum the descent approached, not jump to a higher critical point
        slack = 1e-8 * max(1.0, abs(level))
        if cand.energy <= level + slack and cand.energy <= seed_level + slack:
            rec = cand
            break
        last_err = NoConvergence(
            f"refinement left the descent basin: energy {cand.energy:.10g} > descent level {level:.10g}",
            residual=cand.grad_norm,
        )
    if rec is None:
        assert last_err is not None
        raise last_err
    rec.iterations += its
    rec.info.update(info, seed_level=seed_level, descent_iterations=its)
    return rec


# -- mountain pass -------------------------------------------------------------------------


def _reparametrize(Z: np.ndarray, norms) -> np.ndarray:
    """Redistribute path nodes to equal Dirichlet arclength (endpoints fixed)."""
    seg = np.array([norms(Z[k + 1] - Z[k]) for k in range(len(Z) - 1)])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return Z
    s /= s[-1]
    target = np.linspace(0.0, 1.0, len(Z))
    out = np.empty_like(Z)
    idx = np.clip(np.searchsorted(s, target, side="right") - 1, 0, len(Z) - 2)
    for i, (t, k) in enumerate(zip(target, idx)):
        ds = s[k + 1] - s[k]
        a = 0.0 if ds == 0 else (t - s[k]) / ds
        out[i] = (1 - a) * Z[k] + a * Z[k + 1]
    out[0], out[-1] = Z[0], Z[-1]
    return out


def initial_path(
    pr: Params, g: Grid, w1: np.ndarray, w2: np.ndarray, n_path: int, asymmetry: float = 0.25
) -> list[State]:
    """Nehari projections of ((1-s) w1, s w2), s in [0, 1], with an optional
    opposite-signed phi_2 bump on the interior images.

    The straight path keeps every reflection symmetry of w1 and w2, and the
    string flow preserves it, so without the bump the method can only reach
    symmetric saddles. The bump vanishes at both endpoints.
    """
    bump = smallest_eigenpairs(g, None, 2)[1].vector if asymmetry else g.zeros()
    amp = asymmetry * max(float(w1.max()), float(w2.max())) / max(float(np.abs(bump).max()), 1e-300)
    path = []
    for s in np.linspace(0.0, 1.0, n_path):
        c = 4.0 * s * (1.0 - s) * amp
        st = State((1.0 - s) * w1 + c * bump, s * w2 - c * bump)
        try:
            path.append(fn.nehari_project(pr, g, st)[1])
        except NotInLMinus:
            path.append(fn.nehari_project(pr, g, State((1.0 - s) * w1, s * w2))[1])
    return path


def mountain_pass(
    pr: Params,
    g: Grid,
    n_path: int = 41,
    *,
    crit_tol: float = CRIT_TOL,
    string_tols: tuple[float, ...] = (1e-1, 1e-2, 1e-3),
    asymmetry: float = 0.25,
    max_iter: int = 20000,
    path: list[State] | None = None,
    check: bool = True,
) -> SolutionRecord:
    """Vectorial mountain-pass critical point of J_beta^+ for beta < 0.

    The string is relaxed to each tolerance in ``string_tols`` in turn and
    Newton is attempted from the climbing image after every stage; the first
    refined point that is vectorial with energy in (c1, 0) is returned.
    ``path`` warm-starts the string (images are re-projected onto the Nehari
    set of ``pr``); ``info["path"]`` holds the final string.
    """
    if pr.beta >= 0:
        raise BetaOutOfRange(f"mountain pass needs beta < 0, got {pr.beta}")
    if check:
        pr.check(g)
    s1, s2 = semi_trivial_profiles(pr, g)
    c1, c2 = s1.energy, s2.energy
    end_a, end_b = State(s1.w, g.zeros()), State(g.zeros(), s2.w)
    if path is None:
        path = initial_path(pr, g, s1.w, s2.w, n_path, asymmetry)
    else:
        path = [end_a] + [fn.nehari_project(pr, g, z)[1] for z in path[1:-1]] + [end_b]
    init_max = max(fn.energy_plus(pr, g, z) for z in path[1:-1])
    scale = fn.norm(g, end_a) + fn.norm(g, end_b)
    total = 0
    last: Exception | None = None
    for tol in string_tols:
        saddle, its, path = climbing_string(pr, g, path, tol=tol, max_iter=max_iter - total)
        total += its
        try:
            rec = newton_refine(pr, g, saddle, plus=True, crit_tol=crit_tol, kind="mountain_pass")
        except (NoConvergence, SingularJacobian) as exc:
            last = exc
            continue
        collapsed = [name for name, end in (("(w1, 0)", end_a), ("(0, w2)", end_b))
                     if fn.norm(g, rec.state - end) <= 1e-6 * scale]
        if collapsed:
            last = EndpointCollapse(f"mountain-pass iteration collapsed onto {collapsed[0]}",
                                    endpoint=collapsed[0], residual=rec.grad_norm)
            continue
        if not rec.flags.vectorial or not (c1 < rec.energy < 0):
            last = NoVectorialSolution(
                f"refined point is not a vectorial solution in (c1, 0): energy {rec.energy:.6g}, "
                f"c1 {c1:.6g}, flags {rec.flags.names()}",
                residual=rec.grad_norm,
            )
            continue
        rec.iterations += total
        rec.info.update(c1=c1, c2=c2, initial_path_max=init_max, string_iterations=total, path=path)
        return rec
    assert last is not None
    raise last


class _Preconditioner:
    """(-Lap + D) per component, D the positive diagonal part of the Hessian (capped).

    Dropping the indefinite coupling block keeps the operator positive
    definite while absorbing the stiff |beta| terms.
    """

    def __init__(self, pr: Params, g: Grid, s: State, cap: float):
        p, b = pr.p, pr.beta
        a, hb = 0.5 * p - 1.0, 0.5 * p
        au, av = np.abs(s.u), np.abs(s.v)
        tiny = 1e-300
        Du = (p - 1.0) * au ** (p - 2.0) + max(-b, 0.0) * a * np.maximum(au, tiny) ** (a - 1.0) * av**hb
        Dv = (p - 1.0) * av ** (p - 2.0) + max(-b, 0.0) * a * np.maximum(av, tiny) ** (a - 1.0) * au**hb
        self.D = np.concatenate([np.minimum(Du, cap), np.minimum(Dv, cap)])
        self.g = g
        self.A = g.laplacian_matrix()
        n = g.size
        if g.dim == 1:
            h2 = g.h[0] ** 2
            self._bands = []
            for d in (self.D[:n], self.D[n:]):
                ab = np.empty((3, n))
                ab[0, :] = -1.0 / h2
                ab[1, :] = 2.0 / h2 + d
                ab[2, :] = -1.0 / h2
                self._bands.append(ab)
            self._lu = None
        else:
            self._lu = [spla.splu((self.A + sp.diags(d)).tocsc()) for d in (self.D[:n], self.D[n:])]

    def solve(self, z: np.ndarray) -> np.ndarray:
        n = self.g.size
        if self._lu is None:
            parts = [la.solve_banded((1, 1), ab, r) for ab, r in zip(self._bands, (z[:n], z[n:]))]
        else:
            parts = [lu.solve(r) for lu, r in zip(self._lu, (z[:n], z[n:]))]
        return np.concatenate(parts)

    def matrix(self) -> sp.csr_matrix:
        return (sp.block_diag([self.A, self.A]) + sp.diags(self.D)).tocsr()

    def apply(self, z: np.ndarray) -> np.ndarray:
        n = self.g.size
        return np.concatenate([self.A @ z[:n], self.A @ z[n:]]) + self.D * z


def climbing_string(
    pr: Params,
    g: Grid,
    path: list[State],
    *,
    tol: float = 1e-3,
    max_iter: int = 20000,
    stall: int = 200,
    stall_tol: float = 0.1,
) -> tuple[State, int, list[State]]:
    """Climbing-image string method on J_beta^+ with fixed endpoints.

    Interior images take preconditioned steepest-descent steps (Armijo) and are
    redistributed by Dirichlet arclength. The highest image instead descends in
    the complement of the path tangent and maximizes along the tangent
    (secant steps on the directional derivative). Returns the climbing image
    once its gradient norm falls below ``tol * max(1, ||z||)``, or the best
    climbing image seen if the norm has not improved for ``stall`` iterations
    while below ``stall_tol * max(1, ||z||)``. The relaxed path is returned
    alongside so a caller can resume it.
    """
    w = g.cell_volume
    A = g.laplacian_matrix()
    Z = np.array([s.flat() for s in path])
    M = len(Z) - 1
    if M < 2:
        raise ValueError("path needs at least one interior node")
    cap = 1e3 * float(A.diagonal().max())

    def hnorm(z):
        s = State.from_flat(z)
        return float(np.sqrt(max(w * (s.u @ (A @ s.u) + s.v @ (A @ s.v)), 0.0)))

    def E(z):
        return fn.energy_plus(pr, g, State.from_flat(z))

    def G(z):
        return fn.gradient_plus(pr, g, State.from_flat(z)).flat()

    def armijo(z, e0, gflat, d, step):
        slope = w * float(gflat @ d)
        if slope >= 0:
            return z, e0, step
        step = min(step * 2.0, 1.0)
        for _ in range(40):
            zt = z + step * d
            et = E(zt)
            if et <= e0 + 1e-4 * step * slope:
                return zt, et, step
            step *= 0.5
        return z, e0, step

    def min_mode(z, P, start):
        """Lowest eigenvector of the Hessian in the metric of P (warm-started)."""
        H = fn.hessian(pr, g, State.from_flat(z), plus=True)
        n2 = z.shape[0]
        Bop = P.matrix()
        Mop = spla.LinearOperator(
            (n2, n2), matvec=P.solve, matmat=lambda X: np.column_stack([P.solve(c) for c in X.T]), dtype=float
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mu, X = spla.lobpcg(H, start[:, None], B=Bop, M=Mop, largest=False, maxiter=40, tol=1e-4)
        v = X[:, 0]
        if float(v @ start) < 0:
            v = -v
        return float(mu[0]), v

    def climb(k, step):
        nonlocal mode
        z = Z[k]
        gflat = G(z)
        P = _Preconditioner(pr, g, State.from_flat(z), cap)
        d = -P.solve(gflat)
        tau = Z[k + 1] - Z[k - 1]
        if mode is not None and mode[0] == k:
            start = mode[1]
        else:
            start = tau
        _, v = min_mode(z, P, start)
        mode = (k, v)
        Pv = P.apply(v)
        vn = float(v @ Pv)
        if not vn > 0:
            return armijo(z, energies[k], gflat, d, step)
        v = v / np.sqrt(vn)
        Pv = Pv / np.sqrt(vn)
        # descend in the P-orthogonal complement of the unstable mode
        d_perp = d - float(d @ Pv) * v
        z, e, step = armijo(z, energies[k], gflat, d_perp, step)
        # maximize along the mode by secant steps on the directional derivative
        delta = 1e-3 * max(1.0, hnorm(z)) / max(hnorm(v), 1e-300)
        f0 = w * float(G(z) @ v)
        t = 0.0
        for _ in range(3):
            f1 = w * float(G(z + (t + delta) * v) @ v)
            curv = (f1 - f0) / delta
            if curv < 0:
                dt = -f0 / curv
            else:
                dt = np.sign(f0) * 10.0 * delta
            dt = float(np.clip(dt, -50.0 * delta, 50.0 * delta))
            et = E(z + (t + dt) * v)
            if et < e and abs(dt) > delta:
                dt *= 0.5
                et = E(z + (t + dt) * v)
            if not et >= e - 1e-14 * max(1.0, abs(e)):
                break
            t += dt
            e = et
            f0 = w * float(G(z + t * v) @ v)
            if abs(dt) <= delta:
                break
        return z + t * v, e, step

    mode = None

    def as_path():
        return [State.from_flat(z) for z in Z]
    steps = np.full(M + 1, 0.5)
    energies = np.array([E(z) for z in Z])
    gn = np.inf
    best = (np.inf, None, 0)
    it = 0
    for it in range(1, max_iter + 1):
        k_star = 1 + int(np.argmax(energies[1:-1]))
        for k in range(1, M):
            if k == k_star:
                gn = float(np.sqrt(w * float(G(Z[k]) @ G(Z[k]))))
                if gn <= tol * max(1.0, hnorm(Z[k])):
                    return State.from_flat(Z[k]), it, as_path()
                if gn < 0.99 * best[0]:
                    best = (gn, Z[k].copy(), it)
                elif it - best[2] > stall and best[0] <= stall_tol * max(1.0, hnorm(best[1])):
                    # climbing stalled near the saddle; Newton takes over from here
                    log.debug("string stalled at |g|=%.3e after %d iterations", best[0], it)
                    return State.from_flat(best[1]), it, as_path()
                Z[k], energies[k], steps[k] = climb(k, steps[k])
                continue
            gflat = G(Z[k])
            d = -_Preconditioner(pr, g, State.from_flat(Z[k]), cap).solve(gflat)
            Z[k], energies[k], steps[k] = armijo(Z[k], energies[k], gflat, d, steps[k])
        # reparametrize on each side of the climbing image separately
        left = _reparametrize(Z[: k_star + 1], hnorm)
        right = _reparametrize(Z[k_star:], hnorm)
        Z = np.vstack([left[:-1], right])
        energies = np.array([E(z) for z in Z])
        if it % 50 == 0:
            log.debug("string it=%d k*=%d Emax=%.10g |g|=%.3e step=%.3g", it, k_star, energies[k_star], gn, steps[k_star])
    raise NoConvergence(f"string method did not converge in {max_iter} iterations", residual=gn)


# -- linking search -------------------------------------------------------------------------


def _diagonal_energy_factory(pr: Params, g: Grid, basis: np.ndarray):
    """J_beta(u, u) and its coefficient gradient for u = basis.T @ c."""

    def f(c):
        u = basis.T @ c
        s = State(u, u)
        e = fn.energy(pr, g, s)
        gr = fn.gradient(pr, g, s)
        gc = g.cell_volume * (basis @ (gr.u + gr.v))
        return e, gc

    return f


def _gradient_least_squares(pr: Params, g: Grid, seed: State, floor: float, barrier: float = 1e3) -> State:
    """Minimize ||gradient||^2 plus a penalty on energies below ``floor`` (trust-region least squares)."""
    sw = np.sqrt(g.cell_volume)
    sb = np.sqrt(barrier)

    def res(x):
        s = State.from_flat(x)
        gap = max(floor - fn.energy(pr, g, s), 0.0)
        return np.append(sw * fn.gradient(pr, g, s).flat(), sb * gap)

    def jac(x):
        s = State.from_flat(x)
        H = sw * fn.hessian(pr, g, s)
        row = np.zeros((1, x.size))
        if fn.energy(pr, g, s) < floor:
            row[0] = -sb * g.cell_volume * fn.gradient(pr, g, s).flat()
        return sp.vstack([H, sp.csr_matrix(row)]).tocsr()

    out = so.least_squares(res, seed.flat(), jac=jac, method="trf", tr_solver="lsmr", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                           max_nfev=500)
    return State.from_flat(out.x)


def linking_search(
    pr: Params,
    g: Grid,
    j: int = 1,
    *,
    crit_tol: float = CRIT_TOL,
    n_samples: int = 256,
    exploratory: bool = False,
    check: bool = True,
    frame=None,
) -> SolutionRecord:
    """Positive-energy critical point seeded from the linking geometry (beta >= 1).

    The seed maximizes J on spheres of the diagonal space V_j (sampling, then
    BFGS). Newton refines it; if Newton fails, a least-squares minimization of
    the gradient norm with a barrier below ``alpha_est / 2`` runs first.

    At beta < 1 the search runs only with ``exploratory=True`` and the record
    is marked as such.
    """
    from .linking import build_frame

    if pr.beta < 1 and not exploratory:
        raise BetaOutOfRange(f"linking search needs beta >= 1, got {pr.beta} (pass exploratory=True to override)")
    if j < 1:
        raise ValueError("j must be >= 1")
    if check:
        pr.check(g)
    if frame is None:
        frame = build_frame(pr, g, j, n_samples=n_samples)
    basis = np.array(frame.basis_Vj)  # rows: phi_1..phi_{kappa+j}
    f = _diagonal_energy_factory(pr, g, basis)

    # sampled maximization on spheres between r and R_j, then local ascent in V_j
    mu = np.array(frame.mode_values)
    rng = np.random.default_rng(12345)
    dirs = rng.standard_normal((n_samples, len(basis)))
    dirs /= np.sqrt(2.0 * (dirs**2 * mu).sum(axis=1))[:, None]  # (u, u) has unit norm
    r_lo = frame.r
    r_hi = frame.Rj_est if np.isfinite(frame.Rj_est) else 10.0 * max(frame.r, 1.0)
    best, best_c = -np.inf, None
    for rad in np.linspace(r_lo, r_hi, 12):
        for d in dirs:
            e, _ = f(rad * d)
            if e > best:
                best, best_c = e, rad * d
    res = so.minimize(lambda c: tuple(-x for x in f(c)), best_c, jac=True, method="BFGS", options={"gtol": 1e-10, "maxiter": 2000})
    c = res.x
    seed = State(basis.T @ c, basis.T @ c)
    floor = 0.5 * frame.alpha_est if frame.alpha_est > 0 else 0.0
    try:
        rec = newton_refine(pr, g, seed, crit_tol=crit_tol, kind="linking")
    except (NoConvergence, SingularJacobian):
        seed = _gradient_least_squares(pr, g, seed, floor)
        rec = newton_refine(pr, g, seed, crit_tol=crit_tol, kind="linking")
    rec.info.update(
        kappa=frame.kappa,
        seed_energy=float(-res.fun),
        alpha_est=frame.alpha_est,
        Rj_est=frame.Rj_est,
        r=frame.r,
        exploratory=bool(pr.beta < 1),
    )
    if not rec.energy > max(floor, 0.0):
        raise NoConvergence(
            f"saddle search converged to energy {rec.energy:.6g} <= acceptance floor {floor:.3g}", residual=rec.grad_norm
        )
    fl = rec.flags
    if pr.beta >= 1 and not (fl.u_sign_changing or fl.v_sign_changing):
        raise PositiveSolutionAnomaly(
            f"positive-energy critical point at beta={pr.beta} has no sign-changing component (flags {fl.names()})",
            residual=rec.grad_norm,
        )
    return rec
