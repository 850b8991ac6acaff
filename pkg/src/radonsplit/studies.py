"""Convergence and absorbing-boundary studies for the acoustics solver."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import Grid2D, is_power_of_two
from .errors import InvalidArgument
from .hypersolve import MaterialParams, SolveOptions, blank_grid, make_cosine_hump, pressure_history
from .radial import radial_reference_acoustics


def diagonal_profile(q: Grid2D):
    """Values on the cells ``(i, i)`` of the upper-right quadrant and their radii."""
    n = q.n
    k = np.arange(n // 2, n)
    x = q.centers()[k]
    return math.sqrt(2.0) * x, q.data[k, k]


def weighted_error(q: Grid2D, p_ref, order=1):
    """``(int_0^{sqrt2 L} |p - p_ref|^order rho drho)^(1/order)`` along the diagonal.

    Midpoint rule on the diagonal cells; ``p_ref`` is a callable of the radius.
    """
    if order not in (1, 2):
        raise InvalidArgument(f"order must be 1 or 2, got {order}")
    rho, vals = diagonal_profile(q)
    drho = math.sqrt(2.0) * q.dx
    diff = np.abs(vals - p_ref(rho)) ** order
    return float(np.sum(diff * rho) * drho) ** (1.0 / order)


def observed_orders(errors):
    e = np.asarray(errors, dtype=np.float64)
    return np.log2(e[:-1] / e[1:])


@dataclass
class ErrorTable:
    """Weighted errors per grid size at ``t = 0`` and ``t = T``."""

    T: float
    rows: list = field(default_factory=list)

    COLUMNS = ("n", "L1_t0", "L1_T", "L2_t0", "L2_T", "iterations_t0", "iterations_T", "seconds")

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def orders(self, name="L1_T"):
        return observed_orders(self.column(name))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: (f"{row[k]:.8g}" if isinstance(row[k], float) else row[k]) for k in self.COLUMNS})
        return buf.getvalue()


def convergence_study(Ns, T=3.0, half_width=4.0, opts: SolveOptions | None = None, ref_cells=4000, ref_extent=8.0, log=None):
    """Run the centred cosine hump for each ``n`` and compare with the radial reference."""
    Ns = list(Ns)
    for n in Ns:
        if not is_power_of_two(n):
            raise InvalidArgument(f"grid sizes must be powers of two, got {n}")
    params = MaterialParams()
    ref0 = radial_reference_acoustics(ref_cells, 0.0, ref_extent)
    refT = radial_reference_acoustics(ref_cells, T, ref_extent)
    table = ErrorTable(float(T))
    for n in Ns:
        start = time.perf_counter()
        p0 = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(n, half_width))
        r0, rT = pressure_history(p0, params, [0.0, T], opts)
        row = {
            "n": n,
            "L1_t0": weighted_error(r0.grid, ref0, 1),
            "L1_T": weighted_error(rT.grid, refT, 1),
            "L2_t0": weighted_error(r0.grid, ref0, 2),
            "L2_T": weighted_error(rT.grid, refT, 2),
            "iterations_t0": r0.iterations,
            "iterations_T": rT.iterations,
            "seconds": time.perf_counter() - start,
        }
        table.rows.append(row)
        if log is not None:
            log(row)
    return table


DEFAULT_DECAY_TIMES = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 10.0, 12.0, 14.0, 17.0, 20.0)


@dataclass
class DecayTable:
    """Error of the bounded-domain run against a reference, per output time."""

    reference: str
    interior: float
    rows: list = field(default_factory=list)

    COLUMNS = ("t", "L1_full", "L1_interior", "L2_full", "L2_interior", "iterations")

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def peak_time(self, name="L1_full") -> float:
        return float(self.column("t")[int(np.argmax(self.column(name)))])

    def decay_slope(self, name="L1_full", t_min=None) -> float:
        """Least-squares slope of ``log(error)`` against ``log(t)`` after the peak.

        Times with a zero error are skipped (the fit is in log space).
        """
        t = self.column("t")
        e = self.column(name)
        start = self.peak_time(name) if t_min is None else t_min
        keep = (t > start) & (e > 0)
        if keep.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(t[keep]), np.log(e[keep]), 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: (f"{row[k]:.8g}" if isinstance(row[k], float) else row[k]) for k in self.COLUMNS})
        return buf.getvalue()


def boundary_decay_study(
    T_max=20.0,
    n=128,
    times=None,
    half_width=4.0,
    reference="wide",
    interior=3.0,
    opts: SolveOptions | None = None,
    ref_cells=8000,
    log=None,
):
    """Error caused by the absorbing boundary, for the centred hump, over time.

    ``reference="wide"`` runs the same solver on ``2n`` cells over a domain
    twice as wide (same cell size) and keeps the central ``n x n`` block;
    ``reference="radial"`` samples the 1D radial solution at cell centres.
    Errors are cell sums of ``|p - p_ref|`` (and squares) times the cell area,
    over the whole grid and over ``[-interior, interior]^2``.
    """
    if not is_power_of_two(n):
        raise InvalidArgument(f"n must be a power of two, got {n}")
    if reference not in ("wide", "radial"):
        raise InvalidArgument(f"reference must be 'wide' or 'radial', got {reference!r}")
    times = [t for t in (DEFAULT_DECAY_TIMES if times is None else times) if t <= T_max]
    if not times:
        raise InvalidArgument("no output times at or below T_max")
    params = MaterialParams()
    p0 = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(n, half_width))
    runs = pressure_history(p0, params, times, opts)
    x1, x2 = p0.mesh()
    inside = (np.abs(x1) <= interior) & (np.abs(x2) <= interior)
    area = p0.dx**2
    if reference == "wide":
        wide0 = make_cosine_hump((0.0, 0.0), 1.0, 1.0, blank_grid(2 * n, 2.0 * half_width))
        refs = [r.grid.data[n // 2 : n // 2 + n, n // 2 : n // 2 + n] for r in pressure_history(wide0, params, times, opts)]
    else:
        rho = np.hypot(x1, x2)
        extent = 2.0 * half_width + max(times) + 2.0
        refs = [radial_reference_acoustics(ref_cells, t, extent)(rho) for t in times]
    table = DecayTable(reference, float(interior))
    for t, run, ref in zip(times, runs, refs):
        diff = run.grid.data - ref
        row = {
            "t": float(t),
            "L1_full": float(np.abs(diff).sum() * area),
            "L1_interior": float(np.abs(diff[inside]).sum() * area),
            "L2_full": float(np.sqrt((diff**2).sum() * area)),
            "L2_interior": float(np.sqrt((diff[inside] ** 2).sum() * area)),
            "iterations": run.iterations,
        }
        table.rows.append(row)
        if log is not None:
            log(row)
    return table
