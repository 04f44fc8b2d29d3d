"""Compiled kernels against the numpy fallback, and backend selection."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coupled_logistic import _kernels_py as py
from coupled_logistic import kernels

try:
    from coupled_logistic import _kernels as cy
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")
vals = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
exps = st.sampled_from([2.5, 3.0, 4.0, 5.0, 6.0, 3.7, 2.1])


@st.composite
def pairs(draw):
    n = draw(st.integers(1, 300))
    return draw(arrays(np.float64, n, elements=vals)), draw(arrays(np.float64, n, elements=vals))


@needs_ext
@given(pairs(), exps)
def test_power_sums_parity(uv, p):
    u, v = uv
    a, b = py.power_sums(u, v, p), cy.power_sums(u, v, p)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


@needs_ext
@given(pairs(), exps, st.floats(-50, 50))
def test_nonlinear_grad_parity(uv, p, beta):
    u, v = uv
    for a, b in zip(py.nonlinear_grad(u, v, p, beta), cy.nonlinear_grad(u, v, p, beta)):
        scale = max(1.0, np.abs(a).max())
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * scale)


@needs_ext
@given(arrays(np.float64, st.integers(1, 200), elements=vals), st.floats(1e-3, 10))
def test_laplacian_1d_parity(f, h):
    assert np.allclose(py.neg_lap_1d(f.copy(), h), cy.neg_lap_1d(f.copy(), h), rtol=1e-13, atol=1e-9 / h**2)


@needs_ext
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.01, 2), st.floats(0.01, 2), st.data())
def test_laplacian_2d_parity(n1, n2, h1, h2, data):
    f = data.draw(arrays(np.float64, n1 * n2, elements=vals))
    a = py.neg_lap_2d(f.copy(), n1, n2, h1, h2)
    b = cy.neg_lap_2d(f.copy(), n1, n2, h1, h2)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-9 / min(h1, h2) ** 2)


@needs_ext
@given(arrays(np.float64, st.integers(2, 150), elements=st.floats(-100, 100)), st.floats(-50, 50))
def test_sturm_count_parity(d, shift):
    off = np.linspace(-1.0, 1.0, d.size - 1)
    assert py.sturm_count(d, off, shift) == cy.sturm_count(d, off, shift)


def test_sturm_count_matches_eigenvalues(rng):
    d = rng.uniform(-5, 5, 40)
    off = rng.uniform(-2, 2, 39)
    T = np.diag(d) + np.diag(off, 1) + np.diag(off, -1)
    ev = np.linalg.eigvalsh(T)
    for shift in (-3.0, 0.0, 2.5):
        assert kernels.sturm_count(d, off, shift) == int(np.sum(ev <= shift))


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    if cy is not None:
        assert kernels.BACKEND == "cython"


def test_environment_forces_python_backend():
    code = (
        "import numpy as np\n"
        "from coupled_logistic import kernels, build_grid, Params, ground_state\n"
        "g = build_grid(1, np.pi, 99)\n"
        "r = ground_state(Params(5, 6, 4, 0.5), g)\n"
        "print(kernels.BACKEND, repr(r.energy))\n"
    )
    env = dict(os.environ, COUPLED_LOGISTIC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    backend, energy = out.split()
    assert backend == "python"
    env.pop("COUPLED_LOGISTIC_PURE_PYTHON")
    ref = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    assert float(energy) == pytest.approx(float(ref.split()[1]), rel=1e-10)
