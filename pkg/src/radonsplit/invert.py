"""Least-squares inversion of the DRT by conjugate gradients.

The transform is oversampled: a target grid of size ``n`` is prolonged by
``2p`` before the forward DRT and the back-projection is restricted by the
same factor, so the normal operator is ``S B R P`` on ``n x n`` grids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adrt2 import drt_adjoint_array, drt_forward_array
from .core import Grid2D, Sinogram2D, is_power_of_two
from .errors import InvalidArgument, NumericalFailure

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InvertOptions:
    """``max_iter=None`` means ten times the target grid size."""

    oversample_p: int = 2
    tol: float = 1e-8
    max_iter: int | None = None

    def __post_init__(self):
        if not isinstance(self.oversample_p, (int, np.integer)) or self.oversample_p < 1:
            raise InvalidArgument(f"oversample_p must be an integer >= 1, got {self.oversample_p!r}")
        if not 0.0 < self.tol < 1.0:
            raise InvalidArgument(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidArgument(f"max_iter must be >= 1, got {self.max_iter}")

    @property
    def factor(self) -> int:
        return 2 * self.oversample_p

    def iteration_cap(self, n) -> int:
        return self.max_iter if self.max_iter is not None else 10 * n


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    rel_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)

    def __iter__(self):
        # allows ``x, iters, rel = cg_solve(...)``
        return iter((self.x, self.iterations, self.rel_residual))


def cg_solve(apply_A, b, tol=1e-8, max_iter=1000, callback=None) -> CGResult:
    """Conjugate gradients for a symmetric positive semidefinite operator.

    Starts from zero and stops once ``||A x - b|| <= tol * ||b||`` or after
    ``max_iter`` iterations.  ``b`` may be an array of any shape (or a
    :class:`Grid2D`, in which case its data is used); ``apply_A`` must map
    arrays of that shape to arrays of that shape.

    Raises
    ------
    NumericalFailure
        If a non-finite value shows up; the exception carries the iteration.
    """
    if isinstance(b, Grid2D):
        b = b.data
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CGResult(x, 0, 0.0, True, [0.0])
    r = b.copy()
    p = r.copy()
    rr = float(np.vdot(r, r))
    history = [1.0]
    it = 0
    while it < max_iter:
        if np.sqrt(rr) <= tol * bnorm:
            break
        ap = np.asarray(apply_A(p), dtype=np.float64)
        pap = float(np.vdot(p, ap))
        if not np.isfinite(pap):
            raise NumericalFailure("non-finite curvature in CG", it + 1)
        if pap <= 0.0:
            # direction in the null space; nothing more to gain
            log.warning("CG stopped on non-positive curvature at iteration %d", it + 1)
            break
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.vdot(r, r))
        it += 1
        if not np.isfinite(rr_new):
            raise NumericalFailure("non-finite residual in CG", it)
        history.append(np.sqrt(rr_new) / bnorm)
        if callback is not None:
            callback(it, history[-1])
        p *= rr_new / rr
        p += r
        rr = rr_new
    rel = float(np.sqrt(rr) / bnorm)
    return CGResult(x, it, rel, rel <= tol, history)


def normal_operator(n, factor):
    """Return ``x -> S R^T R P x`` acting on ``n x n`` arrays (unscaled transpose)."""

    def apply(x):
        big = np.repeat(np.repeat(x, factor, axis=0), factor, axis=1)
        back = drt_adjoint_array(drt_forward_array(big))
        return back.reshape(n, factor, n, factor).mean(axis=(1, 3))

    return apply


def normal_rhs(sino_data, n, factor):
    back = drt_adjoint_array(sino_data)
    return back.reshape(n, factor, n, factor).mean(axis=(1, 3))


@dataclass
class InversionResult:
    grid: Grid2D
    iterations: int
    rel_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)


def invert_drt(sino, target_n: int, opts: InvertOptions | None = None, half_width=None) -> InversionResult:
    """Recover an ``target_n x target_n`` grid from a sinogram of the prolonged grid.

    Solves ``S R^T R P X = S R^T B`` by CG.  ``sino`` may be a
    :class:`Sinogram2D` or a raw ``(4, 2N-1, N)`` array with
    ``N = 2 p target_n``.  Non-convergence is reported through
    ``InversionResult.converged``, not raised.
    """
    opts = opts or InvertOptions()
    data = sino.data if isinstance(sino, Sinogram2D) else np.asarray(sino, dtype=np.float64)
    if not is_power_of_two(target_n):
        raise InvalidArgument(f"target_n must be a power of two, got {target_n}")
    big_n = opts.factor * target_n
    if data.shape != (4, 2 * big_n - 1, big_n):
        raise InvalidArgument(
            f"sinogram shape {data.shape} does not match target_n={target_n} "
            f"with oversampling factor {opts.factor} (expected N={big_n})"
        )
    rhs = normal_rhs(data, target_n, opts.factor)
    res = cg_solve(
        normal_operator(target_n, opts.factor),
        rhs,
        tol=opts.tol,
        max_iter=opts.iteration_cap(target_n),
    )
    if not res.converged:
        log.warning(
            "DRT inversion did not converge: %d iterations, relative residual %.3e",
            res.iterations,
            res.rel_residual,
        )
    kwargs = {} if half_width is None else {"half_width": half_width}
    return InversionResult(
        Grid2D(res.x, **kwargs), res.iterations, res.rel_residual, res.converged, res.residual_history
    )


def forward_oversampled(g: Grid2D, oversample_p: int = 2) -> np.ndarray:
    """DRT of ``g`` prolonged by ``2p``: the data :func:`invert_drt` expects."""
    factor = 2 * oversample_p
    big = np.repeat(np.repeat(g.data, factor, axis=0), factor, axis=1)
    return drt_forward_array(big)
