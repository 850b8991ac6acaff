"""Radon-split large time step solver for constant-coefficient hyperbolic PDEs.

The initial data is prolonged, transformed with the DRT, every 1D slice of
fixed slope is evolved exactly along its characteristics up to the final
time (a shift in the height variable), and the result is inverted by
least squares.  No CFL restriction applies: a single step reaches ``T``.

Physical offset along the slice normal and DRT height are related by
``offset = L cos(theta) (2h/N - 1 + s/(N-1))``, so a physical displacement
``d`` moves the slice by ``d N / (2 L cos(theta))`` heights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adrt2 import drt_forward_array, quadrant_normals, slope_angle
from .core import QUADRANTS, Grid2D
from .errors import InvalidArgument, ValidationError
from .invert import InversionResult, InvertOptions, invert_drt

ABSORBING = "absorbing-extrapolation"
ZERO = "zero"


@dataclass(frozen=True)
class MaterialParams:
    K0: float = 1.0
    rho0: float = 1.0

    def __post_init__(self):
        if not (self.K0 > 0 and self.rho0 > 0):
            raise InvalidArgument(f"K0 and rho0 must be positive, got K0={self.K0}, rho0={self.rho0}")

    @property
    def c(self) -> float:
        return math.sqrt(self.K0 / self.rho0)

    @property
    def Z(self) -> float:
        return math.sqrt(self.K0 * self.rho0)


@dataclass(frozen=True, eq=False)
class AcousticState:
    p: Grid2D
    u: Grid2D
    v: Grid2D

    def __post_init__(self):
        grids = (self.p, self.u, self.v)
        if len({g.n for g in grids}) != 1 or len({g.half_width for g in grids}) != 1:
            raise ValidationError("p, u and v must share n and half_width")
        if not all(np.isfinite(g.data).all() for g in grids):
            raise ValidationError("acoustic state contains non-finite values")

    @classmethod
    def at_rest(cls, p: Grid2D) -> "AcousticState":
        zero = p.with_data(np.zeros_like(p.data))
        return cls(p, zero, zero)

    @property
    def n(self) -> int:
        return self.p.n

    @property
    def half_width(self) -> float:
        return self.p.half_width


@dataclass(frozen=True)
class BoundarySpec:
    kind: str = ABSORBING

    def __post_init__(self):
        if self.kind not in (ABSORBING, ZERO):
            raise InvalidArgument(f"unknown boundary kind {self.kind!r}")


@dataclass(frozen=True)
class SolveOptions:
    oversample_p: int = 2
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    invert: InvertOptions | None = None

    def invert_options(self) -> InvertOptions:
        if self.invert is None:
            return InvertOptions(oversample_p=self.oversample_p)
        if self.invert.oversample_p != self.oversample_p:
            raise InvalidArgument("SolveOptions.oversample_p disagrees with invert.oversample_p")
        return self.invert


# ---------------------------------------------------------------------------
# Initial conditions


def make_cosine_hump(center, scale, amplitude, g_template: Grid2D) -> Grid2D:
    """``amplitude * cos(pi r^2 / 2)`` for ``r^2 = scale^2 |x - center|^2 < 1``, sampled at cell centres."""
    x1, x2 = g_template.mesh()
    r2 = scale**2 * ((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2)
    data = np.where(r2 < 1.0, amplitude * np.cos(0.5 * np.pi * r2), 0.0)
    return g_template.with_data(data)


def blank_grid(n, half_width=4.0) -> Grid2D:
    return Grid2D(np.zeros((n, n)), half_width)


def two_humps(g_template: Grid2D) -> Grid2D:
    """Sum of a unit hump at (-1, -1.5) and a narrower 1.5-high hump at (0.75, 1.1)."""
    first = make_cosine_hump((-1.0, -1.5), 1.0, 1.0, g_template)
    second = make_cosine_hump((0.75, 1.1), 1.25, 1.5, g_template)
    return g_template.with_data(first.data + second.data)


# ---------------------------------------------------------------------------
# Slice evolution


def slope_shift_amount(label, s, n, half_width, speed, t):
    """Height displacement of slope ``s`` for a physical displacement ``speed * t``."""
    if label not in QUADRANTS:
        raise InvalidArgument(f"unknown quadrant {label!r}")
    return speed * t * n / (2.0 * half_width * math.cos(slope_angle(s, n)))


def shift_columns(data, dh, boundary=ABSORBING, lo=None, hi=None):
    """Shift every column of ``data`` (heights along axis 0) by ``dh`` heights.

    ``out[h] = x[h - dh]`` with linear interpolation for the fractional part.
    ``lo``/``hi`` give per-column inclusive index ranges of valid heights;
    values leaving the range are discarded and inflowing ones are the
    boundary value (``absorbing-extrapolation``) or zero.
    """
    if isinstance(boundary, BoundarySpec):
        boundary = boundary.kind
    if boundary not in (ABSORBING, ZERO):
        raise InvalidArgument(f"unknown boundary kind {boundary!r}")
    data = np.asarray(data, dtype=np.float64)
    nh, ncol = data.shape
    dh = np.broadcast_to(np.asarray(dh, dtype=np.float64), (ncol,))
    if not np.isfinite(dh).all():
        raise InvalidArgument("shift amounts must be finite")
    lo = np.zeros(ncol, dtype=np.int64) if lo is None else np.broadcast_to(lo, (ncol,)).astype(np.int64)
    hi = np.full(ncol, nh - 1, dtype=np.int64) if hi is None else np.broadcast_to(hi, (ncol,)).astype(np.int64)

    whole = np.floor(dh)
    frac = dh - whole
    h = np.arange(nh)[:, None]
    src = h - whole.astype(np.int64)[None, :]
    cols = np.arange(ncol)[None, :]

    def take(k):
        clipped = np.clip(k, lo, hi)
        vals = data[clipped, cols]
        if boundary == ZERO:
            vals = np.where((k >= lo) & (k <= hi), vals, 0.0)
        return vals

    # integer shifts are exact: the second term carries weight zero
    out = (1.0 - frac) * take(src)
    has_frac = frac != 0.0
    if has_frac.any():
        out = out + np.where(has_frac, frac * take(src - 1), 0.0)
    out[(h < lo) | (h > hi)] = 0.0
    return out


def shift_slice(values, dh, boundary=ABSORBING, valid=None):
    """Shift a single 1D slice by ``dh`` heights (see :func:`shift_columns`)."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = (None, None) if valid is None else valid
    return shift_columns(values[:, None], dh, boundary, lo, hi)[:, 0]


def valid_ranges(n):
    """Inclusive index range of heights carrying d-lines, per slope: ``h in [-s, n-1]``."""
    s = np.arange(n)
    return (n - 1) - s, np.full(n, 2 * n - 2)


def shift_sinogram(data, dh, boundary=ABSORBING):
    """Shift every slice of a ``(4, 2N-1, N)`` sinogram; ``dh`` has shape ``(4, N)``."""
    n = data.shape[2]
    lo, hi = valid_ranges(n)
    dh = np.broadcast_to(dh, (4, n))
    out = np.empty_like(data)
    for k in range(4):
        out[k] = shift_columns(data[k], dh[k], boundary, lo, hi)
    return out


def _unit_shifts(n, half_width):
    # heights travelled per unit of physical displacement, per slope
    cos = np.cos(np.arctan(np.arange(n) / max(n - 1, 1)))
    return n / (2.0 * half_width * cos)


def evolve_transport_sinogram(data, theta, T, half_width, boundary=ABSORBING):
    """Advance the sinogram of ``q_t + theta . grad q = 0`` by ``T``."""
    n = data.shape[2]
    speeds = quadrant_normals(n) @ np.asarray(theta, dtype=np.float64)
    return shift_sinogram(data, speeds * T * _unit_shifts(n, half_width)[None, :], boundary)


def evolve_acoustic_sinograms(p_hat, u_hat, v_hat, params: MaterialParams, T, half_width, boundary=ABSORBING):
    """Characteristic solution of the 1D acoustics problem on every slice.

    The normal velocity ``mu = w1 u + w2 v`` pairs with ``p``; the tangential
    part ``nu = -w2 u + w1 v`` is carried unchanged.
    """
    n = p_hat.shape[2]
    normals = quadrant_normals(n)
    w1 = normals[..., 0][:, None, :]
    w2 = normals[..., 1][:, None, :]
    dh = params.c * T * _unit_shifts(n, half_width)
    dh = np.broadcast_to(dh, (4, n))
    Z = params.Z

    def fwd(x):  # x(s - cT)
        return shift_sinogram(x, dh, boundary)

    def bwd(x):  # x(s + cT)
        return shift_sinogram(x, -dh, boundary)

    p_r, p_l = fwd(p_hat), bwd(p_hat)
    p_new = 0.5 * (p_r + p_l)
    mu_new = (0.5 / Z) * (p_r - p_l)
    if u_hat is None and v_hat is None:
        return p_new, w1 * mu_new, w2 * mu_new
    mu = w1 * u_hat + w2 * v_hat
    nu = -w2 * u_hat + w1 * v_hat
    mu_r, mu_l = fwd(mu), bwd(mu)
    p_new += 0.5 * Z * (mu_r - mu_l)
    mu_new += 0.5 * (mu_r + mu_l)
    return p_new, w1 * mu_new - w2 * nu, w2 * mu_new + w1 * nu


def _oversampled_drt(g: Grid2D, factor):
    big = np.repeat(np.repeat(g.data, factor, axis=0), factor, axis=1)
    return drt_forward_array(big)


def solve_transport(q0: Grid2D, theta, T, opts: SolveOptions | None = None) -> InversionResult:
    """Advect ``q0`` with unit velocity ``theta`` up to time ``T`` in one step."""
    opts = opts or SolveOptions()
    if T < 0:
        raise InvalidArgument(f"T must be non-negative, got {T}")
    inv = opts.invert_options()
    sino = _oversampled_drt(q0, inv.factor)
    sino = evolve_transport_sinogram(sino, theta, T, q0.half_width, opts.boundary.kind)
    return invert_drt(sino, q0.n, inv, half_width=q0.half_width)


@dataclass
class AcousticSolution:
    state: AcousticState
    inversions: dict

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.inversions.values())


def solve_acoustics(q0: AcousticState, params: MaterialParams, T, opts: SolveOptions | None = None) -> AcousticSolution:
    """Solve 2D linear acoustics from ``q0`` to time ``T`` in a single step."""
    opts = opts or SolveOptions()
    if T < 0:
        raise InvalidArgument(f"T must be non-negative, got {T}")
    inv = opts.invert_options()
    L = q0.half_width
    p_hat = _oversampled_drt(q0.p, inv.factor)
    at_rest = not (q0.u.data.any() or q0.v.data.any())
    if at_rest:
        u_hat = v_hat = None
    else:
        u_hat = _oversampled_drt(q0.u, inv.factor)
        v_hat = _oversampled_drt(q0.v, inv.factor)
    sinos = evolve_acoustic_sinograms(p_hat, u_hat, v_hat, params, T, L, opts.boundary.kind)
    results = {name: invert_drt(s, q0.n, inv, half_width=L) for name, s in zip("puv", sinos)}
    state = AcousticState(results["p"].grid, results["u"].grid, results["v"].grid)
    return AcousticSolution(state, results)


def pressure_history(p0: Grid2D, params: MaterialParams, times, opts: SolveOptions | None = None):
    """Pressure at several times for a state starting at rest; only ``p`` is inverted.

    Returns a list of :class:`InversionResult`, one per time.
    """
    opts = opts or SolveOptions()
    inv = opts.invert_options()
    p_hat = _oversampled_drt(p0, inv.factor)
    out = []
    for t in times:
        p_t, _, _ = evolve_acoustic_sinograms(p_hat, None, None, params, t, p0.half_width, opts.boundary.kind)
        out.append(invert_drt(p_t, p0.n, inv, half_width=p0.half_width))
    return out
