from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from coupled_logistic import GridError, build_grid
from coupled_logistic.grid import (
    as_field,
    dirichlet,
    dump_field,
    dumps_field,
    inner,
    integrate,
    load_field,
    loads_field,
    lp_norm,
    neg_laplacian,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def grids():
    one = st.builds(lambda n, L: build_grid(1, L, n), st.integers(1, 40), st.floats(0.1, 10.0))
    two = st.builds(
        lambda n1, n2, a, b: build_grid(2, (a, b), (n1, n2)),
        st.integers(1, 9),
        st.integers(1, 9),
        st.floats(0.1, 10.0),
        st.floats(0.1, 10.0),
    )
    return st.one_of(one, two)


@st.composite
def grid_and_fields(draw, k=1):
    g = draw(grids())
    fs = [draw(arrays(np.float64, g.size, elements=finite)) for _ in range(k)]
    return (g, *fs)


# -- construction -----------------------------------------------------------------------------


def test_spacing_counts_interior_nodes():
    g = build_grid(2, (1.0, 2.0), (3, 4))
    assert g.h == (0.25, 0.4)
    assert g.size == 12
    assert g.cell_volume == pytest.approx(0.1)
    assert np.allclose(g.coords()[0], [0.25, 0.5, 0.75])


def test_scalar_extent_is_broadcast_in_2d():
    g = build_grid(2, np.pi, 7)
    assert g.n == (7, 7) and g.extent == (np.pi, np.pi)


@pytest.mark.parametrize(
    "args",
    [(3, 1.0, 4), (1, -1.0, 4), (1, 1.0, 0), (1, 1.0, 2.5), (2, (1.0, 2.0, 3.0), 4), (1, float("inf"), 3)],
)
def test_invalid_grids_raise(args):
    with pytest.raises(GridError):
        build_grid(*args)


def test_field_shape_is_checked():
    g = build_grid(1, 1.0, 5)
    with pytest.raises(GridError):
        neg_laplacian(g, np.zeros(4))
    with pytest.raises(GridError):
        lp_norm(g, np.zeros(5), 0.5)
    assert as_field(g, [1, 2, 3, 4, 5]).dtype == np.float64


# -- stencil ---------------------------------------------------------------------------------


@pytest.mark.parametrize("shape", [(7,), (4, 6), (5, 5)])
def test_stencil_matches_dense_assembly(shape, rng):
    ext = tuple(1.0 + 0.5 * i for i in range(len(shape)))
    g = build_grid(len(shape), ext, shape)
    A = oracles.dense_neg_laplacian(g.n, g.h)
    f = rng.standard_normal(g.size)
    assert np.allclose(neg_laplacian(g, f), A @ f, rtol=1e-13, atol=1e-10)
    assert np.allclose(g.laplacian_matrix().toarray(), A)


@pytest.mark.parametrize("k", [1, 2, 5, 17])
def test_sine_samples_are_discrete_eigenvectors(k):
    g = build_grid(1, np.pi, 199)
    f = g.sample(lambda x: np.sin(k * x))
    h = g.h[0]
    mu = 4.0 / h**2 * np.sin(k * h / 2) ** 2
    assert np.max(np.abs(neg_laplacian(g, f) - mu * f)) <= 1e-9 * mu


def test_tensor_product_eigenvector_in_2d():
    g = build_grid(2, (1.0, 1.0), (15, 21))
    f = g.sample(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    mu = sum(4.0 / h**2 * np.sin(np.pi * h / 2) ** 2 for h in g.h)
    assert np.max(np.abs(neg_laplacian(g, f) - mu * f)) <= 1e-10 * mu


# -- quadrature ------------------------------------------------------------------------------


def test_integral_of_sine_converges_at_second_order():
    errs = []
    for n in (99, 199, 399):
        g = build_grid(1, np.pi, n)
        errs.append(abs(integrate(g, g.sample(np.sin)) - 2.0))
    assert errs[1] <= 1e-3
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.allclose(ratios, 4.0, rtol=0.01)


def test_l4_norm_of_sine():
    g = build_grid(1, np.pi, 199)
    assert abs(lp_norm(g, g.sample(np.sin), 4) - (3 * np.pi / 8) ** 0.25) <= 1e-3


def test_dirichlet_integral_of_sine_is_discrete_eigenvalue_times_mass():
    g = build_grid(1, np.pi, 199)
    f = g.sample(np.sin)
    mu = 4.0 / g.h[0] ** 2 * np.sin(g.h[0] / 2) ** 2
    assert dirichlet(g, f) == pytest.approx(mu * inner(g, f, f), rel=1e-12)


@given(grid_and_fields(2))
def test_stencil_is_symmetric(data):
    g, a, b = data
    lhs, rhs = inner(g, neg_laplacian(g, a), b), inner(g, a, neg_laplacian(g, b))
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (1 + abs(lhs)))


@given(grid_and_fields(1))
def test_dirichlet_integral_is_nonnegative(data):
    g, f = data
    assert dirichlet(g, f) >= -1e-12 * (1 + inner(g, f, f) / min(g.h) ** 2)


@given(grid_and_fields(1), st.floats(1.0, 8.0))
def test_lp_norm_is_absolutely_homogeneous(data, q):
    g, f = data
    assert lp_norm(g, -3.0 * f, q) == pytest.approx(3.0 * lp_norm(g, f, q), rel=1e-10, abs=1e-300)


@given(grid_and_fields(1))
def test_reflection_is_an_involution_preserving_integrals(data):
    g, f = data
    r = g.reflect(f, axis=g.dim - 1)
    assert np.array_equal(g.reflect(r, axis=g.dim - 1), f)
    assert integrate(g, r) == pytest.approx(integrate(g, f), rel=1e-9, abs=1e-9)


# -- dump format -----------------------------------------------------------------------------


@given(grid_and_fields(1))
def test_dump_round_trips_exactly(data):
    g, f = data
    g2, f2 = loads_field(dumps_field(g, f, comments=["tool: x", "note"]))
    # the header stores n and h; the extent is rebuilt as h (n + 1), exact up to rounding
    assert (g2.dim, g2.n, g2.h) == (g.dim, g.n, g.h)
    assert np.allclose(g2.extent, g.extent, rtol=1e-15)
    assert np.array_equal(f2, f)


def test_dump_file_round_trip(tmp_path):
    g = build_grid(2, (1.0, 3.0), (3, 2))
    f = np.arange(6.0)
    path = tmp_path / "f.dat"
    dump_field(path, g, f, comments=["hello"])
    text = path.read_text()
    assert text.startswith("# hello\n2 3 2 ")
    g2, f2 = load_field(path)
    assert g2.h == g.h and g2.n == g.n and np.array_equal(f2, f)


@pytest.mark.parametrize("text", ["", "# only comments\n", "x 3 0.1\n1\n2\n3\n", "1 3 0.25\n1\n2\n", "1 2\n1\n2\n"])
def test_malformed_dumps_raise(text):
    with pytest.raises(GridError):
        loads_field(text)
