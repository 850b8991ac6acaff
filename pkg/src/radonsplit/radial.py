"""Radially symmetric 2D acoustics on a 1D grid.

Solves ``p_t + K0 (u_r + u / r) = 0``, ``u_t + p_r / rho0 = 0`` on
``0 < r <= r_max`` with a first-order Godunov (upwind) scheme for the flux
part followed by a fractional step for the geometric source ``-K0 u / r``.
The axis is a reflecting wall, the outer end an outflow (zero-order
extrapolation) boundary.  Used as the independent reference for
radially symmetric runs of the splitting solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


def cosine_hump_profile(r, amplitude=1.0, scale=1.0):
    r2 = (scale * np.asarray(r, dtype=np.float64)) ** 2
    return np.where(r2 < 1.0, amplitude * np.cos(0.5 * np.pi * r2), 0.0)


@dataclass
class RadialProfile:
    r: np.ndarray
    p: np.ndarray
    u: np.ndarray
    t: float

    def __call__(self, rho):
        """Pressure at radii ``rho`` by linear interpolation (even extension at the axis)."""
        rho = np.abs(np.asarray(rho, dtype=np.float64))
        return np.interp(rho, self.r, self.p)


def radial_reference_acoustics(n_cells=4000, T=3.0, L_max=8.0, K0=1.0, rho0=1.0, p0=cosine_hump_profile, cfl=0.9):
    """Reference pressure/velocity profile at time ``T``.

    ``p0`` maps radii to the initial pressure; the initial velocity is zero.
    """
    if n_cells < 100:
        raise InvalidArgument(f"n_cells must be at least 100, got {n_cells}")
    if T < 0:
        raise InvalidArgument(f"T must be non-negative, got {T}")
    dr = L_max / n_cells
    r = (np.arange(n_cells) + 0.5) * dr
    p = np.asarray(p0(r), dtype=np.float64).copy()
    u = np.zeros(n_cells)
    c = np.sqrt(K0 / rho0)
    Z = np.sqrt(K0 * rho0)
    dt_max = cfl * dr / c
    t = 0.0
    pe = np.empty(n_cells + 2)
    ue = np.empty(n_cells + 2)
    while t < T:
        dt = min(dt_max, T - t)
        if T - (t + dt) < 1e-12 * max(T, 1.0):
            dt = T - t
        pe[1:-1] = p
        ue[1:-1] = u
        pe[0], ue[0] = p[0], -u[0]
        pe[-1], ue[-1] = p[-1], u[-1]
        dp = np.diff(pe)
        du = np.diff(ue)
        # wave strengths at each interface for eigenvectors (-Z, 1) and (Z, 1)
        a_left = (-dp + Z * du) / (2.0 * Z)
        a_right = (dp + Z * du) / (2.0 * Z)
        # A+ dq from the left interface, A- dq from the right one
        apdq_p = c * a_right[:-1] * Z
        apdq_u = c * a_right[:-1]
        amdq_p = -c * a_left[1:] * (-Z)
        amdq_u = -c * a_left[1:]
        lam = dt / dr
        p = p - lam * (apdq_p + amdq_p)
        u = u - lam * (apdq_u + amdq_u)
        p = p - dt * K0 * u / r
        t += dt
    return RadialProfile(r, p, u, float(T))
