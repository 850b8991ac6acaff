import numpy as np
import pytest

from radonsplit.core import Grid2D
from radonsplit.dispinterp import (
    DECOMPOSITION_COLUMNS,
    decomposition_rows,
    displacement_interpolate_1d,
    displacement_interpolate_2d,
    interpolate_sinograms,
    pair_reversal,
    shift,
    template_fit,
    transport_reversal,
)
from radonsplit.errors import DegenerateInput, InvalidArgument
from radonsplit.hypersolve import blank_grid, make_cosine_hump
from radonsplit.invert import InvertOptions

DX = 0.05
K = np.arange(-20, 61)


def hat(c):
    # phi0(x - c * DX) on the grid x = K * DX
    return np.clip(1.0 - np.abs(K - c) / 2.0, 0.0, None)


def gaussian(center, n=300, sigma=5.0):
    h = np.arange(n)
    return np.exp(-0.5 * ((h - center) / sigma) ** 2)


def test_template_fit_identity_and_hat():
    assert template_fit(hat(0), hat(0)) == 0.0
    assert template_fit(hat(0), 0.25 * hat(40), dx=DX) == 2.0


def test_template_fit_fractional():
    g = gaussian(120)
    assert template_fit(g, shift(g, 3.5)) == pytest.approx(3.5, abs=0.1)


@pytest.mark.parametrize("alpha", [1e-3, 0.5, 7.0])
def test_template_fit_scale_covariance(alpha):
    g = gaussian(100)
    h = 0.3 * gaussian(131) + 0.1 * gaussian(80)
    assert template_fit(alpha * g, alpha * h) == pytest.approx(template_fit(g, h), rel=1e-12)


def test_template_fit_errors():
    with pytest.raises(DegenerateInput):
        template_fit(np.zeros(5), np.ones(5))
    with pytest.raises(InvalidArgument):
        template_fit(np.ones(5), np.ones(6))


def test_single_mover():
    g = gaussian(100)
    dec = transport_reversal(g, shift(g, 17))
    assert dec.K == 1
    assert dec.components[0].nu == 17.0
    assert dec.components[0].a == pytest.approx(1.0)
    # window threshold trims the far tails of the template
    assert dec.rel_residual <= 1e-6


def test_hat_pair_decomposition():
    dec = transport_reversal(hat(0), 0.25 * hat(40))
    assert dec.K == 1
    assert dec.components[0].nu == 40.0
    assert dec.components[0].a == pytest.approx(0.25)


def test_hat_pair_interpolant_is_exact():
    dec = transport_reversal(hat(0), 0.25 * hat(40))
    psi = displacement_interpolate_1d(dec, 0.25)
    assert np.array_equal(psi, 0.8125 * hat(10))


def test_dalembert_split():
    g = gaussian(150)
    target = 0.5 * shift(g, 40) + 0.5 * shift(g, -40)
    dec = transport_reversal(g, target)
    assert dec.K == 2
    assert sorted(c.nu for c in dec.components) == [-40.0, 40.0]
    assert all(c.a == pytest.approx(1.0) for c in dec.components)
    mid = displacement_interpolate_1d(dec, 0.5)
    np.testing.assert_allclose(mid, 0.5 * shift(g, 20) + 0.5 * shift(g, -20), atol=1e-6)


def test_scaled_copy_is_a_standing_component():
    g = gaussian(150)
    dec = transport_reversal(g, 0.6 * g)
    assert dec.K == 1
    assert dec.components[0].nu == 0.0
    assert dec.components[0].a == pytest.approx(0.6)
    np.testing.assert_allclose(displacement_interpolate_1d(dec, 0.5), 0.8 * g, atol=1e-15)


def test_infinite_tolerance_stops_after_one():
    g = gaussian(150)
    dec = transport_reversal(g, 0.5 * shift(g, 40) + 0.5 * shift(g, -40), tol=np.inf)
    assert dec.K == 1


def test_endpoints():
    g = gaussian(150)
    target = 0.7 * shift(g, 30) + 0.2 * shift(g, -25)
    dec = transport_reversal(g, target)
    assert np.array_equal(displacement_interpolate_1d(dec, 0.0), g)
    np.testing.assert_allclose(displacement_interpolate_1d(dec, 1.0), target, atol=1e-6 * np.abs(target).max())
    assert (dec.mask_total() <= 1.0 + 1e-15).all()
    with pytest.raises(InvalidArgument):
        displacement_interpolate_1d(dec, 1.5)


def test_shift_equivariance():
    g = gaussian(120)
    target = 0.5 * shift(g, 30) + 0.5 * shift(g, -30)
    a = transport_reversal(g, target)
    b = transport_reversal(shift(g, 11), shift(target, 11))
    assert [(c.nu, c.a) for c in a.components] == pytest.approx([(c.nu, c.a) for c in b.components])


def test_bad_k_max():
    with pytest.raises(InvalidArgument):
        transport_reversal(gaussian(100), gaussian(110), K_max=0)


def test_pair_reversal_overlapping_movers():
    # the two moved copies overlap, so hard windows cannot separate them
    g = gaussian(150, sigma=8.0)
    target = 0.5 * shift(g, 12) + 0.5 * shift(g, -12)
    dec = pair_reversal(g, target)
    assert dec.method == "pair"
    assert abs(abs(dec.components[0].nu) - 12.0) < 1.0
    assert dec.rel_residual < 1e-2


def test_sinogram_identity_pair():
    y = np.random.default_rng(0).random((4, 15, 8))
    out, choices = interpolate_sinograms(y, y, 0.4)
    # heights below -s hold no d-line and stay zero
    lo = 7 - np.arange(8)
    for s in range(8):
        np.testing.assert_allclose(out[:, lo[s] :, s], y[:, lo[s] :, s], atol=1e-12)
    assert len(choices) == 32


def test_sinogram_endpoints_are_exact():
    rng = np.random.default_rng(1)
    y1, y2 = rng.random((2, 4, 15, 8))
    lo = 7 - np.arange(8)
    for tau, y in ((0.0, y1), (1.0, y2)):
        out, _ = interpolate_sinograms(y1, y2, tau)
        for s in range(8):
            assert np.array_equal(out[:, lo[s] :, s], y[:, lo[s] :, s])


def test_2d_identity_and_endpoint():
    g = make_cosine_hump((0.5, -0.5), 1.0, 1.0, blank_grid(8))
    same = displacement_interpolate_2d(g, g, 0.5)
    assert np.max(np.abs(same.grid.data - g.data)) <= 1e-6
    h = make_cosine_hump((-0.5, 0.5), 1.0, 1.0, blank_grid(8))
    start = displacement_interpolate_2d(g, h, 0.0)
    assert start.inversion.converged
    assert np.max(np.abs(start.grid.data - g.data)) <= 1e-6


def test_2d_argument_checks():
    g = blank_grid(8)
    with pytest.raises(InvalidArgument):
        displacement_interpolate_2d(g, blank_grid(16), 0.5)
    with pytest.raises(InvalidArgument):
        displacement_interpolate_2d(g, g, -0.1)
    with pytest.raises(InvalidArgument):
        displacement_interpolate_2d(g, g, 0.5, method="magic")


def test_decomposition_rows():
    g = make_cosine_hump((0.5, -0.5), 1.0, 1.0, blank_grid(4))
    res = displacement_interpolate_2d(g, g, 0.5, InvertOptions(oversample_p=1))
    rows = decomposition_rows(res.slices)
    assert rows and all(len(r) == len(DECOMPOSITION_COLUMNS) for r in rows)
    assert {r[6] for r in rows} <= {"forward", "reverse"}
