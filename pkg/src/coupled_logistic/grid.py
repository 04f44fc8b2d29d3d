"""Uniform finite-difference grids on intervals and rectangles.

Fields are flat float64 arrays of interior nodal values (row-major in 2D).
Boundary values are zero and never stored.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import GridError


@dataclass(frozen=True)
class Grid:
    dim: int
    extent: tuple[float, ...]
    n: tuple[int, ...]
    h: tuple[float, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def cell_volume(self) -> float:
        """Quadrature weight of a single interior node."""
        return float(np.prod(self.h))

    def coords(self) -> list[np.ndarray]:
        """Interior node coordinates along each axis."""
        return [h * np.arange(1, n + 1) for h, n in zip(self.h, self.n)]

    def mesh(self) -> list[np.ndarray]:
        """Per-node coordinates flattened in the field ordering."""
        if self.dim == 1:
            return [self.coords()[0]]
        X, Y = np.meshgrid(*self.coords(), indexing="ij")
        return [X.ravel(), Y.ravel()]

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(*coords)`` at the interior nodes."""
        return np.asarray(fn(*self.mesh()), dtype=float).reshape(-1)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def reflect(self, f: np.ndarray, axis: int = 0) -> np.ndarray:
        """Mirror image of a field across the midplane of ``axis``."""
        return np.flip(np.asarray(f).reshape(self.n), axis=axis).reshape(-1).copy()

    def laplacian_matrix(self) -> sp.csc_matrix:
        """Sparse matrix of the discrete -Laplacian (cached per grid)."""
        return _laplacian_matrix(self)


def build_grid(dim: int, extent, n) -> Grid:
    """Uniform grid with ``n`` interior nodes per axis and ``h = extent/(n+1)``."""
    if dim not in (1, 2):
        raise GridError(f"dim must be 1 or 2, got {dim}")
    ext = _as_tuple(extent, dim, float)
    counts = _as_tuple(n, dim, int)
    if any(not np.isfinite(e) or e <= 0 for e in ext):
        raise GridError(f"extent must be positive, got {ext}")
    if any(c < 1 for c in counts):
        raise GridError(f"need at least one interior node per axis, got {counts}")
    h = tuple(e / (c + 1) for e, c in zip(ext, counts))
    return Grid(dim=dim, extent=ext, n=counts, h=h)


def _as_tuple(x, dim: int, kind) -> tuple:
    if np.isscalar(x):
        vals = (x,) * dim
    else:
        vals = tuple(x)
        if len(vals) == 1 and dim == 2:
            vals = vals * 2
    if len(vals) != dim:
        raise GridError(f"expected {dim} values, got {vals}")
    out = []
    for v in vals:
        if kind is int and float(v) != int(v):
            raise GridError(f"node counts must be integers, got {v}")
        out.append(kind(v))
    return tuple(out)


def _check(g: Grid, f) -> np.ndarray:
    f = np.ascontiguousarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != g.size:
        raise GridError(f"field of shape {f.shape} does not live on a grid with {g.size} nodes")
    return f


def neg_laplacian(g: Grid, f) -> np.ndarray:
    """Apply the 3-point (1D) / 5-point (2D) stencil of -Laplacian."""
    f = _check(g, f)
    if g.dim == 1:
        return kernels.neg_lap_1d(f, g.h[0])
    return kernels.neg_lap_2d(f, g.n[0], g.n[1], g.h[0], g.h[1])


def integrate(g: Grid, f) -> float:
    f = _check(g, f)
    return float(f.sum() * g.cell_volume)


def inner(g: Grid, a, b) -> float:
    """Discrete L2 inner product."""
    return float(np.dot(_check(g, a), _check(g, b)) * g.cell_volume)


def dirichlet(g: Grid, f) -> float:
    """Discrete Dirichlet energy integral of |grad f|^2, via summation by parts."""
    f = _check(g, f)
    return inner(g, f, neg_laplacian(g, f))


def lp_norm(g: Grid, f, q: float) -> float:
    if q < 1:
        raise GridError(f"Lp norm needs q >= 1, got {q}")
    f = _check(g, f)
    a = np.abs(f)
    if q == 2:
        s = float(np.dot(a, a))
    else:
        s = float(np.sum(a**q))
    return (s * g.cell_volume) ** (1.0 / q)


@functools.lru_cache(maxsize=32)
def _laplacian_matrix(g: Grid) -> sp.csc_matrix:
    def lap1(n, h):
        e = np.ones(n)
        return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="csc") / (h * h)

    if g.dim == 1:
        return lap1(g.n[0], g.h[0]).tocsc()
    n1, n2 = g.n
    L1 = lap1(n1, g.h[0])
    L2 = lap1(n2, g.h[1])
    return (sp.kron(L1, sp.identity(n2)) + sp.kron(sp.identity(n1), L2)).tocsc()


# -- grid dump format ---------------------------------------------------------


def dumps_field(g: Grid, f, comments: Sequence[str] = ()) -> str:
    """Header ``dim n1 [n2] h1 [h2]`` then one nodal value per line.

    ``comments`` are written first as ``#`` lines, which the loader skips.
    """
    f = _check(g, f)
    header = " ".join([str(g.dim), *map(str, g.n), *(repr(h) for h in g.h)])
    body = "\n".join(repr(float(x)) for x in f)
    lead = "".join(f"# {c}\n" for c in comments)
    return lead + header + "\n" + body + "\n"


def loads_field(text: str) -> tuple[Grid, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise GridError("empty grid dump")
    head = lines[0].split()
    try:
        dim = int(head[0])
        if len(head) != 1 + 2 * dim:
            raise ValueError
        n = tuple(int(x) for x in head[1 : 1 + dim])
        h = tuple(float(x) for x in head[1 + dim :])
        values = np.array([float(x) for x in lines[1:]])
    except (ValueError, IndexError) as exc:
        raise GridError(f"malformed grid dump header {lines[0]!r}") from exc
    g = build_grid(dim, tuple(hh * (nn + 1) for hh, nn in zip(h, n)), n)
    g = Grid(dim=g.dim, extent=g.extent, n=g.n, h=h)
    return g, _check(g, values)


def dump_field(path, g: Grid, f, comments: Sequence[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_field(g, f, comments))


def load_field(path) -> tuple[Grid, np.ndarray]:
    with open(path) as fh:
        return loads_field(fh.read())


def as_field(g: Grid, values: Sequence[float] | np.ndarray) -> np.ndarray:
    return _check(g, values).copy()
