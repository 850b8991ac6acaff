"""Template fitting, transport reversal and displacement interpolation.

A slice ``phi2`` is explained as a sum of shifted, scaled and masked copies of
``phi1``::

    phi2 ~ sum_k a_k * K(nu_k)[mask_k * phi1] + residual

where ``K(d)[f](x) = f(x - d)``.  The interpolant between the two slices is

    psi(tau) = sum_k eta_k(tau) K(nu_k tau)[mask_k phi1]
               + (1 - tau) (1 - sum_k mask_k) phi1 + tau residual

with the linear schedule ``eta_k(tau) = (1 - tau) + tau a_k``.  Masks are
fixed in time.  Two decompositions are available:

* :func:`transport_reversal`, a greedy fit whose masks are the connected
  support windows of ``phi1``; components matched inside the same window
  share it in proportion to their least-squares coefficients.
* :func:`pair_reversal`, a pair of opposite movers ``nu = +d, -d`` (the
  d'Alembert form) with pointwise masks found by least squares, for slices
  where the two travelling pulses overlap and no window split exists.

Shifts are in cells; sub-cell shifts use the same linear interpolation as
the solver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal, sparse
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import spsolve

from .adrt2 import drt_forward_array
from .core import Grid2D
from .errors import DegenerateInput, InvalidArgument
from .hypersolve import ZERO, shift_slice, valid_ranges
from .invert import InversionResult, InvertOptions, invert_drt

log = logging.getLogger(__name__)


def shift(values, d):
    """``out[h] = values[h - d]``; zero inflow, linear interpolation for fractions."""
    return shift_slice(values, d, ZERO)


def _as_pair(phi1, phi2):
    phi1 = np.asarray(phi1, dtype=np.float64)
    phi2 = np.asarray(phi2, dtype=np.float64)
    if phi1.ndim != 1 or phi1.shape != phi2.shape:
        raise InvalidArgument(f"slices must be 1D of equal length, got {phi1.shape} and {phi2.shape}")
    return phi1, phi2


def _lag_energy(phi):
    # energy of phi still inside the domain after an integer shift, for lags -(N-1)..N-1
    n = phi.size
    csum = np.concatenate([[0.0], np.cumsum(phi * phi)])
    lags = np.arange(-(n - 1), n)
    pos = lags >= 0
    e = np.empty(lags.size)
    e[pos] = csum[n - lags[pos]]
    e[~pos] = csum[n] - csum[-lags[~pos]]
    return lags, e


def _xcorr(phi2, phi1):
    # c[tau] = sum_h phi2[h] phi1[h - tau] for tau = -(N-1)..N-1; direct sums,
    # so symmetric data gives bitwise symmetric correlations
    return np.correlate(phi2, phi1, mode="full")


def _best_index(score, lags):
    """Index of the maximum of ``score``; ties go to the smallest ``|lag|``."""
    best = np.max(score)
    cand = np.flatnonzero(score == best)
    return cand[np.argmin(np.abs(lags[cand]))]


def _parabolic_offset(fm, f0, fp):
    # vertex of the parabola through (-1, fm), (0, f0), (1, fp), for a minimum
    curv = fm - 2.0 * f0 + fp
    if not curv > 0.0:
        return 0.0
    return float(np.clip(0.5 * (fm - fp) / curv, -0.5, 0.5))


def _refine(objective, lags, i):
    if 0 < i < len(lags) - 1:
        return lags[i] + _parabolic_offset(objective[i - 1], objective[i], objective[i + 1])
    return float(lags[i])


def template_fit(phi1, phi2, dx=1.0) -> float:
    """Shift ``tau`` minimizing ``||phi2 - K(tau) phi1||_2``.

    The signal is treated as living on the whole line, so shifting ``phi1``
    keeps its norm and the minimizer is the maximizer of the cross
    correlation.  Exhaustive search over integer shifts, then a three-point
    parabolic refinement.  The result is in cells times ``dx``.

    Raises
    ------
    DegenerateInput
        If ``phi1`` is identically zero.
    """
    phi1, phi2 = _as_pair(phi1, phi2)
    if not phi1.any():
        raise DegenerateInput("template phi1 is identically zero")
    corr = _xcorr(phi2, phi1)
    lags = np.arange(-(phi1.size - 1), phi1.size)
    i = _best_index(corr, lags)
    moved = shift(phi1, lags[i])
    denom = float(np.dot(moved, moved))
    if denom > 0.0:
        fit = phi2 - (float(np.dot(phi2, moved)) / denom) * moved
        if np.linalg.norm(fit) <= 1e-12 * np.linalg.norm(phi2):
            # exact match at an integer lag; refinement would only add rounding
            return float(lags[i]) * dx
    return _refine(-corr, lags, i) * dx


@dataclass
class Component:
    nu: float
    a: float
    mask: np.ndarray
    coef: float = 0.0
    window: int = -1


@dataclass
class SliceDecomposition:
    components: list
    base: np.ndarray
    residual: np.ndarray
    target_norm: float = 0.0
    history: list = field(default_factory=list)
    method: str = "greedy"

    @property
    def K(self) -> int:
        return len(self.components)

    @property
    def rel_residual(self) -> float:
        r = float(np.linalg.norm(self.residual))
        return r / self.target_norm if self.target_norm > 0 else r

    def mask_total(self):
        total = np.zeros_like(self.base)
        for c in self.components:
            total += c.mask
        return total

    def displacement(self) -> float:
        """Mean ``|nu|`` in cells, weighted by the mass each mask carries."""
        w = np.array([np.abs(c.mask * self.base).sum() for c in self.components])
        if w.sum() == 0.0:
            return 0.0
        return float(np.dot(w, [abs(c.nu) for c in self.components]) / w.sum())

    def score(self, mu) -> float:
        """Relative residual plus ``mu`` times the displacement per slice length."""
        return self.rel_residual + mu * self.displacement() / self.base.size


def support_windows(phi, threshold=1e-6, pad=2, prominence=0.05):
    """Windows covering the support of ``phi``, one per pulse.

    The support is where ``|phi|`` exceeds ``threshold * max|phi|``, dilated
    by ``pad`` cells.  Each connected piece is split further at the lowest
    point between consecutive peaks whose prominence exceeds
    ``prominence * max|phi|``; ``prominence=None`` disables the split.
    """
    phi = np.asarray(phi, dtype=np.float64)
    mag = np.abs(phi)
    peak = mag.max() if phi.size else 0.0
    if peak == 0.0:
        return []
    on = mag > threshold * peak
    if pad > 0:
        on = ndimage.binary_dilation(on, iterations=pad)
    labels, count = ndimage.label(on)
    cuts = []
    if prominence is not None:
        tops, _ = signal.find_peaks(np.concatenate([[0.0], mag, [0.0]]), prominence=prominence * peak)
        tops = tops - 1
        for left, right in zip(tops[:-1], tops[1:]):
            if labels[left] == labels[right] and labels[left] > 0:
                cuts.append(left + int(np.argmin(mag[left : right + 1])))
    windows = []
    for k in range(1, count + 1):
        idx = np.flatnonzero(labels == k)
        bounds = [idx[0]] + [c for c in cuts if idx[0] < c <= idx[-1]] + [idx[-1] + 1]
        for a, b in zip(bounds[:-1], bounds[1:]):
            w = np.zeros(phi.size, dtype=bool)
            w[a:b] = True
            windows.append(w)
    return windows


def transport_reversal(phi1, phi2, K_max=8, tol=1e-6, threshold=1e-6) -> SliceDecomposition:
    """Greedy decomposition of ``phi2`` into moving pieces of ``phi1``.

    At every step each support window of ``phi1`` is correlated against the
    current residual; the (window, shift) pair with the largest least-squares
    gain wins, its shift is refined to sub-cell accuracy, its coefficient is
    fitted and the piece is subtracted.  Stops when the residual drops below
    ``tol * ||phi2||``, after ``K_max`` pieces, or when no window correlates
    positively with the residual.
    """
    phi1, phi2 = _as_pair(phi1, phi2)
    if K_max < 1:
        raise InvalidArgument(f"K_max must be >= 1, got {K_max}")
    if not phi1.any():
        raise DegenerateInput("template phi1 is identically zero")
    target = float(np.linalg.norm(phi2))
    # phi2 a scaled copy of phi1: no motion, skip the windowed search
    coef = float(np.dot(phi1, phi2) / np.dot(phi1, phi1))
    still = phi2 - coef * phi1
    if coef > 0.0 and np.linalg.norm(still) <= tol * target:
        rel = float(np.linalg.norm(still)) / target
        return SliceDecomposition([Component(0.0, coef, np.ones_like(phi1), coef)], phi1.copy(), still, target, [1.0, rel])
    windows = support_windows(phi1, threshold)
    templates = [np.where(w, phi1, 0.0) for w in windows]
    spectra = [_lag_energy(t) for t in templates]
    residual = phi2.copy()
    picks = []
    history = [1.0]
    while len(picks) < K_max:
        if picks and np.linalg.norm(residual) <= tol * target:
            break
        best = None
        for w, (t, (lags, energy)) in enumerate(zip(templates, spectra)):
            corr = _xcorr(residual, t)
            ok = (corr > 0.0) & (energy > 0.0)
            if not ok.any():
                continue
            gain = np.where(ok, corr * corr / np.where(ok, energy, 1.0), 0.0)
            i = _best_index(gain, lags)
            if best is None or gain[i] > best[0]:
                best = (gain[i], w, _refine(-gain, lags, i))
        if best is None:
            break
        _, w, nu = best
        moved = shift(templates[w], nu)
        denom = float(np.dot(moved, moved))
        coef = float(np.dot(residual, moved)) / denom if denom > 0 else 0.0
        if not coef > 0.0:
            break
        residual -= coef * moved
        picks.append((w, float(nu), coef))
        history.append(float(np.linalg.norm(residual)) / target if target > 0 else 0.0)

    components = []
    if not picks:
        # nothing moves: keep phi1 in place and let the residual carry phi2
        mask = np.zeros_like(phi1)
        for win in windows:
            mask[win] = 1.0
        components.append(Component(0.0, 0.0, mask, 0.0, -1))
    else:
        totals = {}
        for w, _, coef in picks:
            totals[w] = totals.get(w, 0.0) + coef
        for w, nu, coef in picks:
            weight = coef / totals[w]
            mask = np.where(windows[w], weight, 0.0)
            components.append(Component(nu, totals[w], mask, coef, w))
    return SliceDecomposition(components, phi1.copy(), residual, target, history)


def _shift_matrix(n, d):
    # sparse form of shift(., d): out[h] = (1 - f) x[h - k] + f x[h - k - 1]
    k = int(np.floor(d))
    f = d - k
    h = np.arange(n)
    rows, cols, vals = [], [], []
    for off, w in ((k, 1.0 - f), (k + 1, f)):
        if w == 0.0:
            continue
        src = h - off
        ok = (src >= 0) & (src < n)
        rows.append(h[ok])
        cols.append(src[ok])
        vals.append(np.full(ok.sum(), w))
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


class _PairFit:
    """Pointwise masks for two movers ``+d`` and ``-d`` at a fixed ``d``.

    Minimizes ``||a1 K(d)[m1 phi1] + a2 K(-d)[m2 phi1] - phi2||^2`` plus a
    penalty pulling ``m1 + m2`` to one and a first-difference smoothing
    term, over the support of ``phi1``.  Masks are then clipped to
    ``[0, 1]``, scaled so their sum stays below one, and the scales
    ``a1, a2`` refitted.
    """

    def __init__(self, phi1, phi2, smooth=1e-2, threshold=1e-6):
        self.phi1, self.phi2 = phi1, phi2
        mag = np.abs(phi1)
        self.support = np.flatnonzero(mag > threshold * mag.max())
        m = self.support.size
        self.P = sparse.csr_matrix((phi1[self.support], (self.support, np.arange(m))), shape=(phi1.size, m))
        self.weight = float(np.linalg.norm(phi1)) / np.sqrt(m)
        D = sparse.diags([-np.ones(m - 1), np.ones(m - 1)], [0, 1], shape=(m - 1, m))
        w2 = self.weight**2
        # constant blocks of the normal equations
        DtD = (D.T @ D) * (smooth * w2)
        eye = sparse.identity(m) * w2
        self.reg = sparse.bmat([[eye + DtD, eye], [eye, eye + DtD]]).tocsc()
        self.reg_rhs = np.full(2 * m, w2)
        self.norm2 = float(np.linalg.norm(phi2))

    def __call__(self, d, refits=1):
        n, m = self.phi1.size, self.support.size
        K = [(_shift_matrix(n, nu) @ self.P).tocsc() for nu in (d, -d)]
        a = np.ones(2)
        for _ in range(refits):
            A = sparse.hstack([a[0] * K[0], a[1] * K[1]]).tocsc()
            lhs = (A.T @ A + self.reg).tocsc()
            x = spsolve(lhs, A.T @ self.phi2 + self.reg_rhs)
            masks = np.clip(x.reshape(2, m), 0.0, 1.0)
            total = masks.sum(axis=0)
            over = total > 1.0
            masks[:, over] /= total[over]
            cols = np.stack([K[0] @ masks[0], K[1] @ masks[1]], axis=1)
            a, *_ = np.linalg.lstsq(cols, self.phi2, rcond=None)
        full = np.zeros((2, n))
        full[:, self.support] = masks
        model = sum(a[k] * shift(full[k] * self.phi1, nu) for k, nu in enumerate((d, -d)))
        residual = self.phi2 - model
        rr = float(np.linalg.norm(residual)) / self.norm2 if self.norm2 > 0 else float(np.linalg.norm(residual))
        return rr, full, a, residual


def pair_reversal(phi1, phi2, d_max=None, mu=0.1, smooth=1e-2, threshold=1e-6) -> SliceDecomposition:
    """Decompose ``phi2`` as two opposite movers of pieces of ``phi1``.

    Scans integer ``d`` in ``[1, d_max]`` (default a quarter of the slice),
    refines the best few local minima of ``rel_residual + mu * d / N`` over
    real ``d`` and keeps the winner.  The ``mu`` term breaks the tie with
    ``2d``, which fits equally well whenever each mask can be split into
    pieces that move by ``d`` twice.
    """
    phi1, phi2 = _as_pair(phi1, phi2)
    if not phi1.any():
        raise DegenerateInput("template phi1 is identically zero")
    n = phi1.size
    d_max = max(1, n // 4) if d_max is None else int(d_max)
    fit = _PairFit(phi1, phi2, smooth, threshold)
    ds = np.arange(1.0, d_max + 1.0)
    score = np.array([fit(d)[0] for d in ds]) + mu * ds / n
    interior = np.r_[True, score[1:] <= score[:-1]] & np.r_[score[:-1] <= score[1:], True]
    starts = sorted(np.flatnonzero(interior), key=lambda i: score[i])[:4]
    best = None
    for i in starts:
        res = minimize_scalar(
            lambda d: fit(d)[0] + mu * d / n,
            bounds=(max(ds[i] - 1.0, 0.5), ds[i] + 1.0),
            method="bounded",
            options={"xatol": 0.05},
        )
        cand = (float(res.fun), float(res.x))
        if best is None or cand[0] < best[0]:
            best = cand
    d = best[1]
    rr, masks, a, residual = fit(d, refits=2)
    comps = [Component(d, float(a[0]), masks[0], float(a[0])), Component(-d, float(a[1]), masks[1], float(a[1]))]
    return SliceDecomposition(comps, phi1.copy(), residual, fit.norm2, [rr], method="pair")


def displacement_interpolate_1d(dec: SliceDecomposition, tau) -> np.ndarray:
    """Evaluate the displacement interpolant at ``tau`` in ``[0, 1]``.

    ``tau = 0`` returns the source slice exactly.
    """
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise InvalidArgument(f"tau must lie in [0, 1], got {tau}")
    if tau == 0.0:
        return dec.base.copy()
    out = (1.0 - tau) * (1.0 - dec.mask_total()) * dec.base + tau * dec.residual
    for c in dec.components:
        eta = (1.0 - tau) + tau * c.a
        out += eta * shift(c.mask * dec.base, c.nu * tau)
    return out


METHODS = ("auto", "greedy", "pair")


@dataclass
class SliceChoice:
    """Which way a slice pair was decomposed and how well."""

    quadrant: int
    s: int
    reverse: bool
    decomposition: SliceDecomposition | None


def _decompose(phi1, phi2, method, K_max, tol, mu):
    out = []
    if method in ("auto", "greedy"):
        out.append(transport_reversal(phi1, phi2, K_max, tol))
    if method in ("auto", "pair") and phi1.size >= 4:
        out.append(pair_reversal(phi1, phi2, mu=mu))
    return out


def _interp_slice(phi1, phi2, tau, K_max, tol, method="auto", mu=0.1):
    # Decompose both ways and keep the lowest score.  Pulses that overlap in
    # one snapshot are often separated in the other.
    if not phi1.any() and not phi2.any():
        return np.zeros_like(phi1), False, None
    decs = []
    if phi1.any():
        decs += [(False, d) for d in _decompose(phi1, phi2, method, K_max, tol, mu)]
    if phi2.any():
        decs += [(True, d) for d in _decompose(phi2, phi1, method, K_max, tol, mu)]
    reverse, dec = min(decs, key=lambda d: d[1].score(mu))
    if tau in (0.0, 1.0):
        # endpoints are the snapshots themselves whichever way the fit went
        return (phi1 if tau == 0.0 else phi2).copy(), reverse, dec
    values = displacement_interpolate_1d(dec, 1.0 - tau if reverse else tau)
    return values, reverse, dec


def _check_method(method):
    if method not in METHODS:
        raise InvalidArgument(f"method must be one of {METHODS}, got {method!r}")


def interpolate_sinograms(y1, y2, tau, K_max=8, tol=1e-6, method="auto", mu=0.1):
    """Slice-by-slice displacement interpolation of two ``(4, 2N-1, N)`` sinograms.

    ``method`` selects the decomposition: ``"greedy"`` (hard windows),
    ``"pair"`` (two opposite movers) or ``"auto"``, which tries both in both
    time directions and keeps the lowest :meth:`SliceDecomposition.score`.
    """
    _check_method(method)
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if y1.shape != y2.shape:
        raise InvalidArgument(f"sinogram shapes differ: {y1.shape} vs {y2.shape}")
    n = y1.shape[2]
    lo, hi = valid_ranges(n)
    out = np.zeros_like(y1)
    choices = []
    for q in range(4):
        for s in range(n):
            rows = slice(lo[s], hi[s] + 1)
            vals, reverse, dec = _interp_slice(y1[q, rows, s], y2[q, rows, s], tau, K_max, tol, method, mu)
            out[q, rows, s] = vals
            choices.append(SliceChoice(q, s, reverse, dec))
    return out, choices


@dataclass
class InterpolationResult:
    grid: Grid2D
    inversion: InversionResult
    slices: list


def displacement_interpolate_2d(
    q_t1: Grid2D, q_t2: Grid2D, tau, opts: InvertOptions | None = None, K_max=8, tol=1e-6, method="auto", mu=0.1
):
    """Displacement interpolation of two grids through their DRT slices.

    Both grids are prolonged and transformed, every slice pair is
    interpolated (see :func:`interpolate_sinograms`), and the resulting
    sinogram is inverted.  Inversion flags are passed through in
    ``result.inversion``.
    """
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise InvalidArgument(f"tau must lie in [0, 1], got {tau}")
    _check_method(method)
    if q_t1.n != q_t2.n or q_t1.half_width != q_t2.half_width:
        raise InvalidArgument("grids must share n and half_width")
    opts = opts or InvertOptions()
    f = opts.factor
    big1 = np.repeat(np.repeat(q_t1.data, f, axis=0), f, axis=1)
    big2 = np.repeat(np.repeat(q_t2.data, f, axis=0), f, axis=1)
    sino, choices = interpolate_sinograms(drt_forward_array(big1), drt_forward_array(big2), tau, K_max, tol, method, mu)
    res = invert_drt(sino, q_t1.n, opts, half_width=q_t1.half_width)
    return InterpolationResult(res.grid, res, choices)


DECOMPOSITION_COLUMNS = ("quadrant", "s", "k", "nu", "a", "residual", "direction", "method")


def decomposition_rows(choices):
    """Flatten per-slice decompositions into rows of :data:`DECOMPOSITION_COLUMNS`.

    ``nu`` and ``a`` are as fitted.  ``direction`` is ``forward`` when the
    first snapshot was the template and ``reverse`` when the second one was.
    """
    rows = []
    for ch in choices:
        if ch.decomposition is None:
            continue
        dec = ch.decomposition
        direction = "reverse" if ch.reverse else "forward"
        for k, c in enumerate(dec.components):
            rows.append(("abcd"[ch.quadrant], ch.s, k, c.nu, c.a, dec.rel_residual, direction, dec.method))
    return rows
