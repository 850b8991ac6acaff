"""3D discrete Radon transform over digital planes (d-planes).

A d-plane ``D_n(h, s1, s2)`` of an ``n x n x n`` array ``A[i, j, k]`` picks
one row ``i`` for every pair ``(j, k)``.  It obeys the four-case halving
recursion::

    D_2n(h, 2s1+e1, 2s2+e2) = D^LL_n(h, s1, s2)
                            U D^RL_n(h + s1 + e1, s1, s2)
                            U D^LR_n(h + s2 + e2, s1, s2)
                            U D^RR_n(h + s1 + s2 + e1 + e2, s1, s2)

with ``e1, e2 in {0, 1}``.  The first letter of ``LR`` names the half along
``j`` (slope ``s1``), the second the half along ``k`` (slope ``s2``).  The
recursion separates: the row of cell ``(j, k)`` is ``h + f(s1, j) + f(s2, k)``
with ``f`` the 2D d-line row offset, so the fast transform is a 2D sweep
along ``j`` followed by one along ``k``.

Heights span ``-2(n-1) <= h <= n-1`` and are stored at ``h + 2(n-1)``.

Hexadecants are labelled by two quadrant letters.  The first letter
re-orients axes ``(i, j)`` and the second axes ``(i, k)``::

    a: A[i, j]      b: A[j, i]      c: A[j, n-1-i]      d: A[i, n-1-j]

The composed map is applied first-letter first.  ``d`` flips the slope
axis rather than the row axis (in 2D both give the same line family), so
the two letters flip the signs of ``s1`` and ``s2`` independently.  The 16
maps are distinct; their plane normals cover the 12 cones "dominant axis
times sign pair", with the four cones dominated by ``k`` covered twice
(``ab/bb``, ``ac/bc``, ``cb/db``, ``cc/dc``) with the slope roles swapped.
"""

from __future__ import annotations

import numpy as np

from .adrt2 import _sweep_adjoint, _sweep_forward
from .core import HEXADECANTS, Grid3D, Hexadecant3D, Sinogram3D, is_power_of_two
from .errors import InvalidArgument


def _check(n, s1, s2):
    if not is_power_of_two(n):
        raise InvalidArgument(f"n must be a power of two, got {n}")
    for name, s in (("s1", s1), ("s2", s2)):
        if not 0 <= s < n:
            raise InvalidArgument(f"slope {name}={s} outside [0, {n - 1}]")


def _dplane_rows(n, h, s1, s2):
    # rows[j, k] before clipping, straight from the four-case recursion
    if n == 1:
        return np.array([[h]])
    m = n // 2
    t1, e1 = divmod(s1, 2)
    t2, e2 = divmod(s2, 2)
    rows = np.empty((n, n), dtype=np.int64)
    rows[:m, :m] = _dplane_rows(m, h, t1, t2)
    rows[m:, :m] = _dplane_rows(m, h + t1 + e1, t1, t2)
    rows[:m, m:] = _dplane_rows(m, h + t2 + e2, t1, t2)
    rows[m:, m:] = _dplane_rows(m, h + t1 + t2 + e1 + e2, t1, t2)
    return rows


def dplane_cells(n: int, h: int, s1: int, s2: int) -> frozenset:
    """Cells ``(i, j, k)`` of ``D_n(h, s1, s2)`` that lie inside the array.

    Oracle for the fast transform; cost grows like ``n^2`` per plane.
    """
    _check(n, s1, s2)
    rows = _dplane_rows(n, h, s1, s2)
    return frozenset((int(rows[j, k]), j, k) for j in range(n) for k in range(n) if 0 <= rows[j, k] < n)


def drt3_hexadecant_bruteforce(a) -> np.ndarray:
    """Sums over every d-plane of an already oriented array, cell by cell."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    out = np.zeros((3 * n - 2, n, n))
    jj, kk = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for s1 in range(n):
        for s2 in range(n):
            base = _dplane_rows(n, 0, s1, s2)
            for h in range(-2 * (n - 1), n):
                rows = base + h
                inside = (rows >= 0) & (rows < n)
                total = 0.0
                for i, j, k in zip(rows[inside], jj[inside], kk[inside]):
                    total += a[i, j, k]
                out[h + 2 * (n - 1), s1, s2] = total
    return out


# ---------------------------------------------------------------------------
# Fast sweep: d-line sums along j for every depth k, then along k for every
# slope s1.  The intermediate heights h1 span 2n-1 rows, which the second
# sweep treats as the rows of a (2n-1) x n array.


def _hex_forward(a):
    y1 = _sweep_forward(np.transpose(a, (2, 0, 1)))  # (k, h1, s1)
    y2 = _sweep_forward(np.transpose(y1, (2, 1, 0)))  # (s1, h, s2)
    return np.ascontiguousarray(np.transpose(y2, (1, 0, 2)))


def _hex_adjoint(y):
    y2 = _sweep_adjoint(np.transpose(y, (1, 0, 2)))  # (s1, h1, k)
    y1 = _sweep_adjoint(np.transpose(y2, (2, 1, 0)))  # (k, i, j)
    return np.ascontiguousarray(np.transpose(y1, (1, 2, 0)))


def _orient2(x, label, axes):
    # 2D quadrant re-orientation acting on the pair of axes (row, other)
    r, o = axes
    if label == "a":
        return x
    if label == "b":
        return np.swapaxes(x, r, o)
    if label == "c":
        return np.swapaxes(np.flip(x, o), r, o)
    return np.flip(x, o)


def orientation_index(n, label):
    """Flat source index of every cell of the array re-oriented for ``label``."""
    if label not in HEXADECANTS:
        raise InvalidArgument(f"unknown hexadecant {label!r}")
    idx = np.arange(n**3).reshape(n, n, n)
    idx = _orient2(idx, label[0], (0, 1))
    idx = _orient2(idx, label[1], (0, 2))
    return np.ascontiguousarray(idx)


def _as_cube(g):
    data = g.data if isinstance(g, Grid3D) else np.asarray(g, dtype=np.float64)
    n = data.shape[0]
    if data.shape != (n, n, n) or not is_power_of_two(n):
        raise InvalidArgument(f"expected an n x n x n array with n a power of two, got {data.shape}")
    return data


def drt3_forward_array(a) -> np.ndarray:
    """Full 3D DRT as a ``(16, 3n-2, n, n)`` array in ``HEXADECANTS`` order."""
    a = _as_cube(a)
    n = a.shape[0]
    flat = a.ravel()
    return np.stack([_hex_forward(flat[orientation_index(n, lab)]) for lab in HEXADECANTS])


def drt3_adjoint_array(y) -> np.ndarray:
    """Unscaled transpose of :func:`drt3_forward_array`."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[-1]
    if y.shape != (16, 3 * n - 2, n, n) or not is_power_of_two(n):
        raise InvalidArgument(f"sinogram must have shape (16, 3n-2, n, n), got {y.shape}")
    out = np.zeros(n**3)
    for block, lab in zip(y, HEXADECANTS):
        # orientations are permutations, so the transpose is a scatter-add
        out[orientation_index(n, lab).ravel()] += _hex_adjoint(block).ravel()
    return out.reshape(n, n, n)


def drt3_forward(g: Grid3D) -> Sinogram3D:
    """DRT of all 16 hexadecants."""
    return Sinogram3D(drt3_forward_array(_as_cube(g)))


def drt3_hexadecant(g, label) -> Hexadecant3D:
    a = _as_cube(g)
    return Hexadecant3D(_hex_forward(a.ravel()[orientation_index(a.shape[0], label)]), label)


def backproject3(sino: Sinogram3D, half_width=None) -> Grid3D:
    """Back-projection ``B = R^T / (16 n^3)``, so ``<R g, y> = 16 n^3 <g, B y>``."""
    if isinstance(sino, (tuple, list)):
        if tuple(h.label for h in sino) != HEXADECANTS:
            raise InvalidArgument("hexadecants must be given in HEXADECANTS order")
        sino = Sinogram3D(np.stack([h.data for h in sino]))
    n = sino.n
    data = drt3_adjoint_array(sino.data) / (16.0 * n**3)
    if half_width is None:
        return Grid3D(data)
    return Grid3D(data, half_width)
