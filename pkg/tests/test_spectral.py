from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from coupled_logistic import GridError, build_grid
from coupled_logistic.grid import lp_norm
from coupled_logistic.scalar import solve_positive_scalar
from coupled_logistic.spectral import (
    count_nonpositive,
    laplacian_eigenvalues_1d,
    operator_matrix,
    principal,
    smallest_eigenpairs,
)


def test_three_smallest_match_dense_eigensolve(g199):
    pairs = smallest_eigenpairs(g199, None, 3)
    dense = oracles.dense_eigenvalues(199, g199.h[0])[:3]
    assert np.allclose([e.value for e in pairs], dense, rtol=0, atol=1e-10)
    h = g199.h[0]
    assert np.allclose(dense, 4 / h**2 * np.sin(np.arange(1, 4) * h / 2) ** 2, atol=1e-10)
    for e in pairs:
        assert lp_norm(g199, e.vector, 2) == pytest.approx(1.0, abs=1e-12)
        assert e.vector[np.argmax(np.abs(e.vector) > 1e-10)] > 0


def test_closed_form_helper(g199):
    ref = [e.value for e in smallest_eigenpairs(g199, None, 6)]
    assert np.allclose(laplacian_eigenvalues_1d(g199, 6), ref, atol=1e-10)
    with pytest.raises(GridError):
        laplacian_eigenvalues_1d(build_grid(2, 1.0, 3), 1)


def test_sparse_and_dense_paths_agree(rng):
    g = build_grid(1, 2.0, 150)
    V = rng.uniform(-5, 5, g.size)
    a = smallest_eigenpairs(g, V, 4, dense=True)
    b = smallest_eigenpairs(g, V, 4, dense=False)
    assert np.allclose([e.value for e in a], [e.value for e in b], atol=1e-9)
    for x, y in zip(a, b):
        assert min(np.abs(x.vector - y.vector).max(), np.abs(x.vector + y.vector).max()) < 1e-6


def test_principal_vector_is_positive(g199):
    e = principal(g199)
    assert np.all(e.vector > 0)


def test_unit_square_converges_to_two_pi_squared():
    errs = []
    for n in (15, 31, 63):
        g = build_grid(2, (1.0, 1.0), (n, n))
        errs.append(abs(principal(g).value - 2 * np.pi**2))
    assert errs[0] > errs[1] > errs[2]
    assert np.allclose(np.array(errs[:-1]) / errs[1:], 4.0, rtol=0.02)


def test_potential_validation():
    g = build_grid(1, 1.0, 5)
    with pytest.raises(GridError):
        operator_matrix(g, np.zeros(4))
    with pytest.raises(GridError):
        operator_matrix(g, np.full(5, np.nan))
    with pytest.raises(GridError):
        smallest_eigenpairs(g, None, 6)


@given(
    st.integers(1, 60).flatmap(
        lambda n: st.tuples(st.just(n), arrays(np.float64, n, elements=st.floats(-3000, 3000)))
    )
)
def test_count_matches_dense_spectrum_1d(data):
    n, V = data
    g = build_grid(1, 1.0, n)
    vals = oracles.dense_eigenvalues(n, g.h[0], V)
    # skip draws with an eigenvalue numerically on the fence
    if np.min(np.abs(vals)) < 1e-8 * max(1.0, np.abs(vals).max()):
        return
    assert count_nonpositive(g, V) == int(np.sum(vals <= 0))


@pytest.mark.parametrize("n", [(6, 9), (21, 21)])
def test_count_matches_dense_spectrum_2d(n, rng):
    # (21, 21) exceeds the dense threshold and goes through the LU inertia path
    g = build_grid(2, (np.pi, 2.0), n)
    for shift in (0.0, 30.0, 200.0):
        V = rng.uniform(-1, 1, g.size) - shift
        vals = oracles.dense_eigenvalues(g.n, g.h, V)
        assert count_nonpositive(g, V) == int(np.sum(vals <= 0))


def test_count_falls_to_zero_as_repulsion_grows(g199):
    w1 = solve_positive_scalar(g199, 5.0, 4.0).w
    lam2 = 6.0
    counts = [count_nonpositive(g199, b * w1**2 - lam2) for b in (0.0, 0.5, 1.0, 1.2, 1.3, 2.0, 10.0)]
    assert counts[0] >= 1
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] == 0
    # spot-check against a full dense eigensolve on a coarse grid
    g = build_grid(1, np.pi, 49)
    w = solve_positive_scalar(g, 5.0, 4.0).w
    for b in (0.0, 1.0, 3.0):
        V = b * w**2 - lam2
        assert count_nonpositive(g, V) == int(np.sum(oracles.dense_eigenvalues(49, g.h[0], V) <= 0))
