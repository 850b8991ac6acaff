import math

import numpy as np
import pytest

from radonsplit.adrt2 import quadrant_normals
from radonsplit.core import Grid2D
from radonsplit.errors import InvalidArgument
from radonsplit.hypersolve import (
    ABSORBING,
    ZERO,
    AcousticState,
    BoundarySpec,
    MaterialParams,
    SolveOptions,
    blank_grid,
    evolve_acoustic_sinograms,
    evolve_transport_sinogram,
    make_cosine_hump,
    shift_columns,
    shift_slice,
    slope_shift_amount,
    solve_acoustics,
    solve_transport,
    two_humps,
    valid_ranges,
)
from radonsplit.invert import forward_oversampled
from radonsplit.radial import cosine_hump_profile, radial_reference_acoustics
from radonsplit.studies import weighted_error


def pulse(n, at):
    x = np.zeros(n)
    x[at] = 1.0
    return x


def test_material_params():
    m = MaterialParams(4.0, 1.0)
    assert m.c == 2.0 and m.Z == 2.0
    with pytest.raises(InvalidArgument):
        MaterialParams(0.0, 1.0)


def test_hump_values():
    g = blank_grid(8, 4.0)
    h = make_cosine_hump((0.5, 0.5), 1.0, 2.0, g)
    assert h.data[4, 4] == pytest.approx(2.0 * math.cos(0.0))
    assert h.data[0, 0] == 0.0
    narrow = make_cosine_hump((0.5, 0.5), 4.0, 1.0, g)
    assert np.count_nonzero(narrow.data) == 1


def test_two_humps_is_a_sum():
    g = blank_grid(32)
    first = make_cosine_hump((-1.0, -1.5), 1.0, 1.0, g).data
    second = make_cosine_hump((0.75, 1.1), 1.25, 1.5, g).data
    assert np.array_equal(two_humps(g).data, first + second)


def test_slope_shift_amount():
    assert slope_shift_amount("a", 0, 128, 4.0, 1.0, 1.0) == pytest.approx(16.0)
    assert slope_shift_amount("b", 127, 128, 4.0, 1.0, 1.0) == pytest.approx(16.0 * math.sqrt(2.0))
    assert slope_shift_amount("c", 5, 128, 4.0, 0.0, 1.0) == 0.0
    with pytest.raises(InvalidArgument):
        slope_shift_amount("e", 0, 8, 4.0, 1.0, 1.0)


def test_shift_slice_examples():
    x = np.random.default_rng(0).normal(size=9)
    assert np.array_equal(shift_slice(x, 0.0), x)
    assert np.array_equal(shift_slice(pulse(9, 0), 3, ZERO), pulse(9, 3))
    half = shift_slice(pulse(9, 0), 0.5, ZERO)
    assert half[0] == 0.5 and half[1] == 0.5 and half.sum() == 1.0


def test_shift_slice_boundaries():
    x = np.arange(1.0, 6.0)
    assert shift_slice(x, 2, ABSORBING).tolist() == [1, 1, 1, 2, 3]
    assert shift_slice(x, 2, ZERO).tolist() == [0, 0, 1, 2, 3]
    assert shift_slice(x, -2, ABSORBING).tolist() == [3, 4, 5, 5, 5]
    with pytest.raises(InvalidArgument):
        shift_slice(x, 1, "periodic")
    with pytest.raises(InvalidArgument):
        BoundarySpec("periodic")


def test_shift_respects_valid_range():
    x = np.ones(6)
    out = shift_slice(x, 1, ZERO, valid=(2, 5))
    assert out.tolist() == [0, 0, 0, 1, 1, 1]


@pytest.mark.parametrize("boundary", [ABSORBING, ZERO])
def test_integer_shifts_compose_exactly(boundary):
    data = np.random.default_rng(1).normal(size=(31, 16))
    a = np.arange(16) % 5
    b = (np.arange(16) * 3) % 4
    once = shift_columns(data, a + b, boundary)
    twice = shift_columns(shift_columns(data, a, boundary), b, boundary)
    assert np.array_equal(once, twice)


def test_fractional_composition_error_bounded_by_variation():
    x = np.convolve(np.random.default_rng(2).random(60), np.ones(5), "same")
    once = shift_slice(x, 7.0, ZERO)
    twice = shift_slice(shift_slice(x, 3.5, ZERO), 3.5, ZERO)
    tv = np.abs(np.diff(x)).sum()
    assert np.max(np.abs(once - twice)) <= tv


def test_transport_sinogram_single_step_equals_two():
    n = 16
    g = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(n // 4))
    y = forward_oversampled(g)
    theta = (1.0, 0.0)
    # T chosen so that every shift is n/(2L) * T * speed; compare at slice level
    one = evolve_transport_sinogram(y, theta, 1.0, 4.0, ZERO)
    two = evolve_transport_sinogram(evolve_transport_sinogram(y, theta, 0.5, 4.0, ZERO), theta, 0.5, 4.0, ZERO)
    # the s = 0 slices of quadrants a and d move by an integer number of heights
    for k in (0, 3):
        assert np.array_equal(one[k, :, 0], two[k, :, 0])
    tv = np.abs(np.diff(y, axis=1)).sum(axis=1).max()
    assert np.max(np.abs(one - two)) <= tv


def test_perpendicular_slices_do_not_move():
    n = 16
    y = np.random.default_rng(3).normal(size=(4, 2 * n - 1, n))
    out = evolve_transport_sinogram(y, (1.0, 0.0), 5.0, 4.0)
    normals = quadrant_normals(n)
    still = np.abs(normals @ np.array([1.0, 0.0])) < 1e-15
    assert still.any()
    lo, _ = valid_ranges(n)
    for k, s in zip(*np.nonzero(still)):
        assert np.array_equal(out[k, lo[s] :, s], y[k, lo[s] :, s])


def test_transport_zero_time_is_roundtrip():
    g = make_cosine_hump((0.5, 0.0), 1.0, 1.0, blank_grid(16))
    res = solve_transport(g, (1.0, 0.0), 0.0)
    assert res.converged
    assert np.max(np.abs(res.grid.data - g.data)) <= 1e-6


def _centroid(g):
    x1, x2 = g.mesh()
    m = g.data.sum()
    return np.array([(g.data * x1).sum() / m, (g.data * x2).sum() / m])


@pytest.mark.parametrize("theta", [(1.0, 0.0), (0.0, -1.0), (math.sqrt(0.5), math.sqrt(0.5))])
def test_transport_moves_centroid(theta):
    g = make_cosine_hump((-0.5, 0.25), 1.0, 1.0, blank_grid(32))
    out = solve_transport(g, theta, 1.0).grid
    moved = _centroid(out) - _centroid(g)
    assert np.linalg.norm(moved - np.array(theta)) <= g.dx


def test_negative_time():
    with pytest.raises(InvalidArgument):
        solve_transport(blank_grid(8), (1.0, 0.0), -1.0)


def test_acoustics_zero_state():
    state = AcousticState.at_rest(blank_grid(8))
    out = solve_acoustics(state, MaterialParams(), 2.0).state
    assert not (out.p.data.any() or out.u.data.any() or out.v.data.any())


def test_rest_state_shortcut_matches_general_path():
    n = 16
    p = forward_oversampled(make_cosine_hump((0.3, -0.4), 1.0, 1.0, blank_grid(n // 4)))
    zero = np.zeros_like(p)
    fast = evolve_acoustic_sinograms(p, None, None, MaterialParams(), 1.5, 4.0)
    full = evolve_acoustic_sinograms(p, zero, zero, MaterialParams(), 1.5, 4.0)
    for a, b in zip(fast, full):
        assert np.array_equal(a, b)


def test_tangential_velocity_is_carried():
    # a pure nu field has no pressure coupling and does not move
    n = 16
    w = quadrant_normals(n)
    nu = np.random.default_rng(5).normal(size=(4, 2 * n - 1, n))
    u = -w[..., 1][:, None, :] * nu
    v = w[..., 0][:, None, :] * nu
    p_new, u_new, v_new = evolve_acoustic_sinograms(np.zeros_like(nu), u, v, MaterialParams(), 2.0, 4.0)
    assert np.allclose(p_new, 0.0, atol=1e-14)
    np.testing.assert_allclose(u_new, u, atol=1e-14)
    np.testing.assert_allclose(v_new, v, atol=1e-14)


def test_acoustics_keeps_rotational_symmetry():
    g = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(16))
    p = solve_acoustics(AcousticState.at_rest(g), MaterialParams(), 1.5).state.p.data
    assert np.max(np.abs(p - np.rot90(p))) <= 1e-10 * np.max(np.abs(p))


def test_acoustics_matches_radial_reference_roughly():
    g = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(64))
    p = solve_acoustics(AcousticState.at_rest(g), MaterialParams(), 3.0).state.p
    ref = radial_reference_acoustics(2000, 3.0, 8.0)
    assert weighted_error(p, ref, 1) < 0.05


def test_options_must_agree():
    from radonsplit.invert import InvertOptions

    with pytest.raises(InvalidArgument):
        SolveOptions(oversample_p=2, invert=InvertOptions(oversample_p=1)).invert_options()


def test_radial_reference_initial_and_steady():
    ref = radial_reference_acoustics(400, 0.0, 4.0)
    np.testing.assert_allclose(ref.p, cosine_hump_profile(ref.r))
    flat = radial_reference_acoustics(400, 2.0, 4.0, p0=lambda r: np.full_like(r, 0.7))
    np.testing.assert_allclose(flat.p, 0.7, atol=1e-14)
    assert not flat.u.any()
    with pytest.raises(InvalidArgument):
        radial_reference_acoustics(50, 1.0, 4.0)


def test_weighted_error_closed_forms():
    n, L = 32, 4.0
    g = blank_grid(n, L)
    ref = radial_reference_acoustics(400, 0.0, 8.0)
    x1, x2 = g.mesh()
    sampled = g.with_data(ref(np.hypot(x1, x2)))
    assert weighted_error(sampled, ref, 1) == pytest.approx(0.0, abs=1e-15)
    delta = 0.01
    shifted = g.with_data(sampled.data + delta)
    R = math.sqrt(2.0) * L
    assert weighted_error(shifted, ref, 1) == pytest.approx(delta * R * R / 2.0, rel=1e-12)
    with pytest.raises(InvalidArgument):
        weighted_error(shifted, ref, 3)
