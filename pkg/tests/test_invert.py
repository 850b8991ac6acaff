import numpy as np
import pytest

from radonsplit.core import Grid2D, prolong
from radonsplit.errors import InvalidArgument, NumericalFailure
from radonsplit.hypersolve import blank_grid, make_cosine_hump
from radonsplit.invert import (
    InvertOptions,
    cg_solve,
    forward_oversampled,
    invert_drt,
    normal_operator,
)
from radonsplit.adrt2 import drt_forward


def test_cg_identity():
    b = np.array([3.0, -1.0, 2.0])
    res = cg_solve(lambda x: x, b)
    assert res.iterations == 1
    assert np.allclose(res.x, b)


def test_cg_diagonal():
    x, iters, rel = cg_solve(lambda v: np.array([1.0, 2.0]) * v, np.array([1.0, 2.0]), tol=1e-14)
    assert iters <= 2
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-14)
    assert rel <= 1e-14


def test_cg_zero_rhs():
    res = cg_solve(lambda x: x, np.zeros(4))
    assert res.iterations == 0 and res.converged and not res.x.any()


def test_cg_non_finite():
    with pytest.raises(NumericalFailure) as info:
        cg_solve(lambda x: x * np.nan, np.ones(3))
    assert info.value.iteration >= 1


def test_normal_operator_is_symmetric():
    n = 16
    rng = np.random.default_rng(0)
    A = normal_operator(n, 4)
    x, y = rng.normal(size=(2, n, n))
    lhs, rhs = np.sum(A(x) * y), np.sum(x * A(y))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_cg_recovers_random_grid():
    n = 8
    g = np.random.default_rng(1).normal(size=(n, n))
    A = normal_operator(n, 2)
    res = cg_solve(A, A(g), tol=1e-10, max_iter=200)
    assert res.converged
    np.testing.assert_allclose(res.x, g, atol=1e-6)


def test_energy_error_nonincreasing():
    # CG residual norms may rise between steps; the A-norm of the error may not
    n = 16
    g = np.random.default_rng(4).normal(size=(n, n))
    A = normal_operator(n, 2)
    b = A(g)
    energies = []
    for k in range(1, 30):
        e = cg_solve(A, b, tol=1e-13, max_iter=k).x - g
        energies.append(np.sum(e * A(e)))
    energies = np.array(energies)
    assert np.all(np.diff(energies) <= 1e-10 * energies[0])
    assert energies[-1] < 1e-6 * energies[0]


@pytest.mark.parametrize("n", [16, 32])
def test_roundtrip(n):
    g = make_cosine_hump((0.5, -0.25), 1.0, 1.0, blank_grid(n))
    res = invert_drt(drt_forward(prolong(g, 4)), n, InvertOptions(oversample_p=2))
    assert res.converged
    assert np.max(np.abs(res.grid.data - g.data)) <= 1e-6


def test_zero_sinogram():
    res = invert_drt(np.zeros((4, 63, 32)), 8)
    assert res.iterations == 0
    assert not res.grid.data.any()


def test_non_convergence_is_flagged():
    g = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(16))
    res = invert_drt(forward_oversampled(g), 16, InvertOptions(tol=1e-12, max_iter=1))
    assert not res.converged
    assert res.iterations == 1


def test_noise_is_reported_not_raised():
    g = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(16))
    y = forward_oversampled(g) + 1e-3 * np.random.default_rng(2).normal(size=(4, 127, 64))
    res = invert_drt(y, 16, InvertOptions(max_iter=20))
    assert np.isfinite(res.grid.data).all()
    assert np.max(np.abs(res.grid.data - g.data)) < 0.05


def test_size_mismatch():
    with pytest.raises(InvalidArgument):
        invert_drt(np.zeros((4, 31, 16)), 8)


@pytest.mark.parametrize("kwargs", [{"tol": 0.0}, {"tol": 1.0}, {"oversample_p": 0}, {"max_iter": 0}])
def test_bad_options(kwargs):
    with pytest.raises(InvalidArgument):
        InvertOptions(**kwargs)
