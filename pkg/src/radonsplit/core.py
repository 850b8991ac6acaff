"""Grid and sinogram containers plus prolongation/restriction.

Grids are square (or cubic) arrays of cell averages over the physical
domain ``[-L, L]^d``.  Array index ``(i, j)`` is (row, column); column ``j``
runs along the first physical coordinate ``x1`` and row ``i`` along ``x2``,
both increasing with the index.  Cell ``k`` along an axis has its centre at
``-L + (k + 1/2) * dx`` with ``dx = 2L / n``, so the origin sits on a cell
corner for even ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ValidationError

QUADRANTS = ("a", "b", "c", "d")
HEXADECANTS = tuple(p + q for p in QUADRANTS for q in QUADRANTS)

DEFAULT_HALF_WIDTH = 4.0


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def _frozen(array, ndim, name):
    data = np.array(array, dtype=np.float64, copy=True)
    if data.ndim != ndim:
        raise ValidationError(f"{name} data must be {ndim}-dimensional, got shape {data.shape}")
    data.setflags(write=False)
    return data


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Samples of a scalar field on an ``n x n`` grid over ``[-L, L]^2``."""

    data: np.ndarray
    half_width: float = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        data = _frozen(self.data, 2, "Grid2D")
        n = data.shape[0]
        if data.shape != (n, n):
            raise ValidationError(f"Grid2D must be square, got shape {data.shape}")
        if not is_power_of_two(n):
            raise ValidationError(f"Grid2D size must be a power of two, got n={n}")
        if not self.half_width > 0:
            raise ValidationError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    def centers(self):
        """Cell-centre coordinates along one axis."""
        return cell_centers(self.n, self.half_width)

    def mesh(self):
        """Return ``(x1, x2)`` arrays of cell centres shaped like ``data``."""
        c = self.centers()
        x2, x1 = np.meshgrid(c, c, indexing="ij")
        return x1, x2

    def with_data(self, data) -> "Grid2D":
        return Grid2D(data, self.half_width)

    def total(self) -> float:
        return float(self.data.sum())


@dataclass(frozen=True, eq=False)
class Grid3D:
    """Samples of a scalar field on an ``n x n x n`` grid over ``[-L, L]^3``."""

    data: np.ndarray
    half_width: float = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        data = _frozen(self.data, 3, "Grid3D")
        n = data.shape[0]
        if data.shape != (n, n, n):
            raise ValidationError(f"Grid3D must be cubic, got shape {data.shape}")
        if not is_power_of_two(n):
            raise ValidationError(f"Grid3D size must be a power of two, got n={n}")
        if not self.half_width > 0:
            raise ValidationError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def n(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class Quadrant2D:
    """DRT values of one quadrant.

    ``data[h + n - 1, s]`` holds the sum over the d-line with height ``h``
    (``-(n-1) <= h <= n-1``) and slope ``s`` (``0 <= s < n``).
    """

    data: np.ndarray
    label: str

    def __post_init__(self):
        data = _frozen(self.data, 2, "Quadrant2D")
        n = data.shape[1]
        if data.shape != (2 * n - 1, n) or not is_power_of_two(n):
            raise ValidationError(f"Quadrant2D must have shape (2n-1, n), got {data.shape}")
        if self.label not in QUADRANTS:
            raise ValidationError(f"unknown quadrant label {self.label!r}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def heights(self):
        return np.arange(-(self.n - 1), self.n)

    def column(self, s):
        return self.data[:, s]


@dataclass(frozen=True, eq=False)
class Sinogram2D:
    """All four quadrants ``(a, b, c, d)``, stored as a ``(4, 2n-1, n)`` array."""

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, 3, "Sinogram2D")
        n = data.shape[2]
        if data.shape != (4, 2 * n - 1, n) or not is_power_of_two(n):
            raise ValidationError(f"Sinogram2D must have shape (4, 2n-1, n), got {data.shape}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_quadrants(cls, quadrants) -> "Sinogram2D":
        quadrants = tuple(quadrants)
        if tuple(q.label for q in quadrants) != QUADRANTS:
            raise InvalidArgument("quadrants must be labelled a, b, c, d in order")
        if len({q.n for q in quadrants}) != 1:
            raise InvalidArgument("all quadrants must share the same n")
        return cls(np.stack([q.data for q in quadrants]))

    @property
    def n(self) -> int:
        return self.data.shape[2]

    @property
    def quadrants(self):
        return tuple(Quadrant2D(self.data[k], label) for k, label in enumerate(QUADRANTS))

    def quadrant(self, label) -> Quadrant2D:
        return Quadrant2D(self.data[QUADRANTS.index(label)], label)


@dataclass(frozen=True, eq=False)
class Hexadecant3D:
    """D-plane sums of one hexadecant.

    ``data[h + 2(n-1), s1, s2]`` for ``-2(n-1) <= h <= n-1``.
    """

    data: np.ndarray
    label: str

    def __post_init__(self):
        data = _frozen(self.data, 3, "Hexadecant3D")
        n = data.shape[1]
        if data.shape != (3 * n - 2, n, n) or not is_power_of_two(n):
            raise ValidationError(f"Hexadecant3D must have shape (3n-2, n, n), got {data.shape}")
        if self.label not in HEXADECANTS:
            raise ValidationError(f"unknown hexadecant label {self.label!r}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class Sinogram3D:
    """All 16 hexadecants in the order of ``HEXADECANTS``, shape ``(16, 3n-2, n, n)``."""

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, 4, "Sinogram3D")
        n = data.shape[2]
        if data.shape != (16, 3 * n - 2, n, n) or not is_power_of_two(n):
            raise ValidationError(f"Sinogram3D must have shape (16, 3n-2, n, n), got {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[2]

    @property
    def hexadecants(self):
        return tuple(Hexadecant3D(self.data[k], label) for k, label in enumerate(HEXADECANTS))


def cell_centers(n, half_width):
    dx = 2.0 * half_width / n
    return -half_width + (np.arange(n) + 0.5) * dx


def _check_factor(factor):
    if not isinstance(factor, (int, np.integer)) or factor <= 0 or factor % 2:
        raise InvalidArgument(f"factor must be a positive even integer, got {factor!r}")


def prolong(g: Grid2D, factor: int) -> Grid2D:
    """Zeroth-order prolongation: replicate every cell into a ``factor x factor`` block."""
    _check_factor(factor)
    data = np.repeat(np.repeat(g.data, factor, axis=0), factor, axis=1)
    return Grid2D(data, g.half_width)


def restrict(g: Grid2D, factor: int) -> Grid2D:
    """Block-mean restriction, the left inverse of :func:`prolong`."""
    _check_factor(factor)
    n = g.n
    if n % factor:
        raise InvalidArgument(f"grid size {n} is not divisible by factor {factor}")
    m = n // factor
    data = g.data.reshape(m, factor, m, factor).mean(axis=(1, 3))
    return Grid2D(data, g.half_width)


def pad_to_power_of_two(data, half_width=None):
    """Zero-pad a square array symmetrically up to the next power of two.

    Returns the padded :class:`Grid2D`.  When ``half_width`` is given it is
    the half width of the *unpadded* data and is enlarged so the cell size
    is preserved.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if data.shape != (n, n):
        raise InvalidArgument(f"expected a square array, got shape {data.shape}")
    m = 1 << max(0, (n - 1).bit_length())
    before = (m - n) // 2
    padded = np.pad(data, ((before, m - n - before), (before, m - n - before)))
    if half_width is None:
        half_width = DEFAULT_HALF_WIDTH
    else:
        half_width = half_width * m / n
    return Grid2D(padded, half_width)
