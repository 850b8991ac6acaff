"""Fast 2D discrete Radon transform over digital lines (d-lines).

A d-line ``D_n(h, s)`` picks one cell per column of an ``n x n`` array.  It
starts at row ``h`` in column 0 and climbs ``s`` rows by the last column,
following the halving recursion::

    D_2m(h, 2s)   = D^L_m(h, s) U D^R_m(h + s,     s)
    D_2m(h, 2s+1) = D^L_m(h, s) U D^R_m(h + s + 1, s)

where ``L``/``R`` are the left and right column halves.  Cells that fall
outside the rows of the array are dropped.  Heights span
``-(n-1) <= h <= n-1``; entries with ``h < -s`` correspond to lines that
miss the array and stay zero.

The four quadrants sum d-lines over re-oriented copies of the grid::

    a: A[i, j]          b: A[j, i]
    c: A[j, n-1-i]      d: A[n-1-i, j]

In physical coordinates (``x1`` along columns, ``x2`` along rows) the d-line
family of slope ``s`` has direction angle ``phi = arctan(s / (n-1))`` from
the ``x1`` axis in quadrant a, ``pi/2 - phi`` in b, ``pi/2 + phi`` in c and
``pi - phi`` in d, so the four quadrants tile ``[0, pi)``.  The unit normal
returned by :func:`quadrant_normal` points in the direction of increasing
height ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import QUADRANTS, Grid2D, Quadrant2D, Sinogram2D, is_power_of_two
from .errors import InvalidArgument


@dataclass(frozen=True)
class DLine:
    n: int
    h: int
    s: int
    cells: frozenset


def _check_slope(n, s):
    if not is_power_of_two(n):
        raise InvalidArgument(f"n must be a power of two, got {n}")
    if not 0 <= s < n:
        raise InvalidArgument(f"slope s={s} outside [0, {n - 1}]")


def _dline_rows(n, h, s):
    # Row of the d-line in every column, before clipping to the array.
    if n == 1:
        return [h]
    m = n // 2
    half, odd = divmod(s, 2)
    left = _dline_rows(m, h, half)
    right = _dline_rows(m, h + half + odd, half)
    return left + right


def dline_cells(n: int, h: int, s: int) -> DLine:
    """Cells ``(row, column)`` of the d-line ``D_n(h, s)`` inside the array.

    Direct unrolling of the recursion, meant as an oracle for the fast sweep.
    """
    _check_slope(n, s)
    rows = _dline_rows(n, h, s)
    cells = frozenset((i, j) for j, i in enumerate(rows) if 0 <= i < n)
    return DLine(n, h, s, cells)


def drt_quadrant_bruteforce(a) -> np.ndarray:
    """Quadrant-a sums computed cell by cell from :func:`dline_cells`."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    out = np.zeros((2 * n - 1, n))
    for s in range(n):
        for h in range(-(n - 1), n):
            total = 0.0
            for i, j in sorted(dline_cells(n, h, s).cells, key=lambda c: c[1]):
                total += a[i, j]
            out[h + n - 1, s] = total
    return out


# ---------------------------------------------------------------------------
# Halving sweep over the last two axes ``(rows, columns)`` of a batch.  With
# ``R`` rows, at the level where segments are m columns wide only heights
# -(m-1) <= h <= R-1 can meet a cell, so the working array has shape
# (segments, m slopes, R + m - 1 heights) with height h stored at h + m - 1.
# Segments of different batch entries never pair up because the column
# count is a power of two.  Each (segment, slope) column is contiguous.


def _sweep_forward(a, dest=None):
    *batch, rows, ncol = a.shape
    nb = int(np.prod(batch, dtype=np.int64))
    cur = np.ascontiguousarray(np.swapaxes(a.reshape(nb, rows, ncol), 1, 2)).reshape(nb * ncol, 1, rows)
    m = 1
    while m < ncol:
        nseg = cur.shape[0] // 2
        hm = rows + m - 1
        hout = hm + m
        left = cur[0::2]
        right = cur[1::2]
        out = np.zeros((nseg, 2 * m, hout))
        out[:, 0::2, m:] = left
        out[:, 1::2, m:] = left
        for s in range(m):
            out[:, 2 * s, m - s : hout - s] += right[:, s]
            out[:, 2 * s + 1, m - s - 1 : hout - s - 1] += right[:, s]
        cur = out
        m *= 2
    res = np.swapaxes(cur.reshape(nb, ncol, rows + ncol - 1), 1, 2)
    if dest is not None:
        # copy straight into the caller's buffer; saves a full-size temporary
        dest.reshape(nb, rows + ncol - 1, ncol)[...] = res
        return dest
    return np.ascontiguousarray(res).reshape(*batch, rows + ncol - 1, ncol)


def _sweep_adjoint(q):
    *batch, nh, ncol = q.shape
    rows = nh - ncol + 1
    nb = int(np.prod(batch, dtype=np.int64))
    cur = np.ascontiguousarray(np.swapaxes(q.reshape(nb, nh, ncol), 1, 2))
    m = ncol // 2
    while m >= 1:
        nseg = cur.shape[0]
        hm = rows + m - 1
        hout = hm + m
        state = np.empty((2 * nseg, m, hm))
        np.add(cur[:, 0::2, m:], cur[:, 1::2, m:], out=state[0::2])
        right = state[1::2]
        for s in range(m):
            np.add(cur[:, 2 * s, m - s : hout - s], cur[:, 2 * s + 1, m - s - 1 : hout - s - 1], out=right[:, s])
        cur = state
        m //= 2
    res = np.swapaxes(cur.reshape(nb, ncol, rows), 1, 2)
    return np.ascontiguousarray(res).reshape(*batch, rows, ncol)


def _orient(a):
    return (a, a.T, a[:, ::-1].T, a[::-1, :])


def _orient_adjoint(a, b, c, d):
    return a + b.T + c.T[:, ::-1] + d[::-1, :]


def _as_array(g):
    data = g.data if isinstance(g, Grid2D) else np.asarray(g, dtype=np.float64)
    n = data.shape[0]
    if data.shape != (n, n) or not is_power_of_two(n):
        raise InvalidArgument(f"expected an n x n array with n a power of two, got {data.shape}")
    return data


def drt_quadrant(g) -> Quadrant2D:
    """Quadrant-a DRT of a grid in ``O(n^2 log n)``."""
    data = _as_array(g)
    return Quadrant2D(_sweep_forward(data), "a")


def drt_forward_array(a) -> np.ndarray:
    """Full DRT of an ``n x n`` array, returned as a ``(4, 2n-1, n)`` array."""
    a = _as_array(a)
    n = a.shape[0]
    res = np.empty((4, 2 * n - 1, n))
    for k, b in enumerate(_orient(a)):
        _sweep_forward(b, dest=res[k])
    return res


def drt_adjoint_array(y) -> np.ndarray:
    """Unscaled transpose of :func:`drt_forward_array`."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[-1]
    if y.shape != (4, 2 * n - 1, n) or not is_power_of_two(n):
        raise InvalidArgument(f"sinogram must have shape (4, 2n-1, n), got {y.shape}")
    return _orient_adjoint(*(_sweep_adjoint(q) for q in y))


def drt_forward(g: Grid2D) -> Sinogram2D:
    """DRT of all four quadrants."""
    return Sinogram2D(drt_forward_array(_as_array(g)))


def backproject(sino: Sinogram2D, half_width=None) -> Grid2D:
    """Back-projection ``B = R^T / (4 n^2)``, so ``<R g, y> = 4 n^2 <g, B y>``."""
    if isinstance(sino, (tuple, list)):
        sino = Sinogram2D.from_quadrants(sino)
    n = sino.n
    data = drt_adjoint_array(sino.data) / (4.0 * n * n)
    if half_width is None:
        return Grid2D(data)
    return Grid2D(data, half_width)


# ---------------------------------------------------------------------------
# Geometry of the quadrants.


def slope_angle(s, n):
    """Angle ``arctan(s / (n-1))`` of slope ``s`` inside its quadrant."""
    if n == 1:
        return 0.0
    return math.atan(s / (n - 1))


def quadrant_theta(label, s, n):
    """Direction angle in ``[0, pi]`` of the d-line family ``(label, s)``."""
    phi = slope_angle(s, n)
    return {"a": phi, "b": 0.5 * math.pi - phi, "c": 0.5 * math.pi + phi, "d": math.pi - phi}[label]


def quadrant_normal(label, s, n):
    """Unit normal of the d-line family, pointing towards increasing height."""
    if label not in QUADRANTS:
        raise InvalidArgument(f"unknown quadrant {label!r}")
    _check_slope(n, s)
    phi = slope_angle(s, n)
    c, si = math.cos(phi), math.sin(phi)
    return {
        "a": np.array([-si, c]),
        "b": np.array([c, -si]),
        "c": np.array([-c, -si]),
        "d": np.array([-si, -c]),
    }[label]


def quadrant_normals(n):
    """Array of shape ``(4, n, 2)`` with every normal of every quadrant."""
    return np.stack([[quadrant_normal(q, s, n) for s in range(n)] for q in QUADRANTS])


def to_continuous(h, s, n):
    """Map a d-line ``(h, s)`` to the continuous offset/angle pair ``(s_c, theta)``.

    ``s_c`` is the offset on a domain rescaled to ``[-1, 1]``; multiply by the
    half width to get physical units.
    """
    theta = slope_angle(s, n)
    sc = math.cos(theta) * (2.0 * h / n - 1.0 + (s / (n - 1) if n > 1 else 0.0))
    return sc, theta


def continuous_estimate(value, s, n, half_width):
    """Line integral estimate from a DRT value: divide by ``cos(theta)`` and the line density."""
    theta = slope_angle(s, n)
    return value / math.cos(theta) / (n / (2.0 * half_width))
