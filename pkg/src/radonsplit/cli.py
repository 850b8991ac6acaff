"""Command-line entry point: ``radonsplit <command> ...``.

Exit codes: 0 success, 2 usage or configuration error (including a missing
input file), 3 I/O error while reading or writing.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _require_input(path):
    if not Path(path).is_file():
        raise CliError(f"input file not found: {path}", EXIT_USAGE)
    return path


def parse_sizes(text):
    """``"8..512"`` (doubling range) or ``"8,16,32"`` to a list of powers of two."""
    from .core import is_power_of_two

    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split("..", 1))
            if not (is_power_of_two(lo) and is_power_of_two(hi)) or lo > hi:
                raise CliError(f"--Ns range ends must be powers of two with lo <= hi, got {text!r}")
            sizes = []
            while lo <= hi:
                sizes.append(lo)
                lo *= 2
        else:
            sizes = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"cannot parse grid sizes {text!r}") from None
    bad = [n for n in sizes if not is_power_of_two(n)]
    if bad or not sizes:
        raise CliError(f"grid sizes must be powers of two, got {bad or text!r}")
    return sizes


def write_manifest(path, entries):
    """Two-column ``key,value`` CSV with versions, config hash and tolerances."""
    import numpy
    import scipy

    from . import __version__

    base = {
        "radonsplit_version": __version__,
        "python_version": platform.python_version(),
        "numpy_version": numpy.__version__,
        "scipy_version": scipy.__version__,
    }
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in {**base, **entries}.items():
            writer.writerow([key, value])


def _hash_args(args):
    payload = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


# ---------------------------------------------------------------------------
# transform


def cmd_transform(args):
    from .adrt2 import backproject, drt_forward
    from .adrt3 import backproject3, drt3_forward
    from .io import load_grid, load_grid3, load_sinogram, load_sinogram3, save_grid, save_grid3, save_sinogram, save_sinogram3

    _require_input(args.input)
    start = time.perf_counter()
    if args.op == "fwd":
        g = load_grid(args.input)
        out = drt_forward(g)
        save_sinogram(out, args.output)
    elif args.op == "adj":
        out = backproject(load_sinogram(args.input), args.half_width)
        save_grid(out, args.output)
    elif args.op == "fwd3":
        out = drt3_forward(load_grid3(args.input, args.half_width))
        save_sinogram3(out, args.output)
    else:
        out = backproject3(load_sinogram3(args.input), args.half_width)
        save_grid3(out, args.output)
    elapsed = time.perf_counter() - start
    print(f"{args.op}: n={out.n} shape={tuple(out.data.shape)} values={out.data.size} seconds={elapsed:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# invert


def cmd_invert(args):
    from .invert import InvertOptions, invert_drt
    from .io import load_sinogram, save_grid

    _require_input(args.input)
    opts = InvertOptions(oversample_p=args.oversample_p, tol=args.tol, max_iter=args.max_iter)
    sino = load_sinogram(args.input)
    n = args.n if args.n is not None else sino.n // opts.factor
    if n < 1 or n * opts.factor != sino.n:
        raise CliError(f"sinogram size N={sino.n} is not {opts.factor} * n for n={n}")
    res = invert_drt(sino, n, opts, half_width=args.half_width)
    save_grid(res.grid, args.output)
    flag = "" if res.converged else " WARNING: not converged"
    print(f"iterations={res.iterations} rel_residual={res.rel_residual:.3e} converged={res.converged}{flag}")
    if args.residual_csv:
        with open(args.residual_csv, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "rel_residual"])
            for k, r in enumerate(res.residual_history):
                writer.writerow([k, f"{r:.17g}"])
    if args.manifest:
        write_manifest(
            args.manifest,
            {
                "command": "invert",
                "args_sha256": _hash_args(args),
                "tol": opts.tol,
                "max_iter": opts.iteration_cap(n),
                "oversample_p": opts.oversample_p,
                "iterations": res.iterations,
                "rel_residual": f"{res.rel_residual:.17g}",
                "converged": res.converged,
            },
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def _initial_grid(cfg):
    from .hypersolve import blank_grid, make_cosine_hump

    g = blank_grid(cfg.n, cfg.L)
    total = g.data.copy()
    for h in cfg.humps:
        total += make_cosine_hump(h.center, h.scale, h.amplitude, g).data
    return g.with_data(total)


def _write_snapshot(outdir, name, grid, cfg):
    from .adrt2 import drt_forward
    from .io import save_grid, save_sinogram

    written = []
    if cfg.outputs["grids"]:
        written.append(outdir / f"{name}.rsg")
        save_grid(grid, written[-1])
    if cfg.outputs["csv"]:
        written.append(outdir / f"{name}.csv")
        save_grid(grid, written[-1])
    if cfg.outputs["pgm"]:
        written.append(outdir / f"{name}.pgm")
        save_grid(grid, written[-1])
    if cfg.outputs["sinograms"]:
        written.append(outdir / f"{name}_drt.rss")
        save_sinogram(drt_forward(grid), written[-1])
    return written


def cmd_solve(args):
    from .config import ConfigError, load_config
    from .hypersolve import (
        AcousticState,
        BoundarySpec,
        MaterialParams,
        SolveOptions,
        solve_acoustics,
        solve_transport,
    )
    from .invert import InvertOptions

    _require_input(args.config)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CliError(f"{args.config}: {exc} (offending keys: {', '.join(exc.keys)})") from None
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    inv = InvertOptions(oversample_p=cfg.oversample_p, tol=cfg.tol, max_iter=cfg.max_iter)
    opts = SolveOptions(cfg.oversample_p, BoundarySpec(cfg.boundary), inv)
    q0 = _initial_grid(cfg)
    summary = []
    for t in cfg.output_times:
        start = time.perf_counter()
        tag = f"t{t:g}".replace(".", "p")
        if cfg.problem == "transport":
            res = solve_transport(q0, cfg.theta, t, opts)
            grids = {"q": res.grid}
            inversions = {"q": res}
        else:
            sol = solve_acoustics(AcousticState.at_rest(q0), MaterialParams(cfg.K0, cfg.rho0), t, opts)
            grids = {"p": sol.state.p, "u": sol.state.u, "v": sol.state.v}
            inversions = sol.inversions
        for name, grid in grids.items():
            _write_snapshot(outdir, f"{name}_{tag}", grid, cfg)
        for name, r in inversions.items():
            summary.append((t, name, r.iterations, r.rel_residual, r.converged, time.perf_counter() - start))
            flag = "" if r.converged else " WARNING: not converged"
            print(f"t={t:g} {name}: iterations={r.iterations} rel_residual={r.rel_residual:.3e}{flag}")
    with open(outdir / "runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "field", "iterations", "rel_residual", "converged", "seconds"])
        for row in summary:
            writer.writerow([f"{row[0]:g}", row[1], row[2], f"{row[3]:.6e}", row[4], f"{row[5]:.3f}"])
    with open(args.config, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    write_manifest(
        outdir / "manifest.csv",
        {
            "command": "solve",
            "config": os.fspath(args.config),
            "config_sha256": digest,
            "problem": cfg.problem,
            "n": cfg.n,
            "L": cfg.L,
            "output_times": " ".join(f"{t:g}" for t in cfg.output_times),
            "oversample_p": cfg.oversample_p,
            "boundary": cfg.boundary,
            "tol": cfg.tol,
            "max_iter": inv.iteration_cap(cfg.n),
            "threads": args.threads if args.threads else "default",
        },
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# study


def cmd_study(args):
    from .studies import boundary_decay_study, convergence_study

    out = open(args.out, "w") if args.out else None

    def emit(text):
        (out or sys.stdout).write(text)

    try:
        if args.name == "convergence":
            sizes = parse_sizes(args.Ns)
            log = (lambda row: print(f"n={row['n']} L1_T={row['L1_T']:.6g} ({row['seconds']:.1f}s)", file=sys.stderr)) if args.verbose else None
            table = convergence_study(sizes, T=args.T, log=log)
            emit(table.to_csv())
            orders = " ".join(f"{o:.3f}" for o in table.orders("L1_T"))
            print(f"observed orders (L1 at t={args.T:g}): {orders}", file=sys.stderr if out is None else sys.stdout)
        else:
            from .core import is_power_of_two

            if not is_power_of_two(args.n):
                raise CliError(f"--n must be a power of two, got {args.n}")
            log = (lambda row: print(f"t={row['t']:g} L1_full={row['L1_full']:.4e}", file=sys.stderr)) if args.verbose else None
            table = boundary_decay_study(T_max=args.T, n=args.n, reference=args.reference, log=log)
            emit(table.to_csv())
            msg = f"peak at t={table.peak_time():g}; post-peak log-log slope {table.decay_slope():.3f}"
            print(msg, file=sys.stderr if out is None else sys.stdout)
    finally:
        if out is not None:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# interp


def cmd_interp(args):
    from .dispinterp import DECOMPOSITION_COLUMNS, decomposition_rows, displacement_interpolate_2d
    from .invert import InvertOptions
    from .io import load_grid, save_grid

    for path in (args.grid1, args.grid2):
        _require_input(path)
    g1, g2 = load_grid(args.grid1), load_grid(args.grid2)
    if g1.n != g2.n:
        raise CliError(f"grid sizes differ: {g1.n} and {g2.n}")
    opts = InvertOptions(oversample_p=args.oversample_p, tol=args.tol, max_iter=args.max_iter)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for tau in args.tau:
        if not 0.0 <= tau <= 1.0:
            raise CliError(f"tau must lie in [0, 1], got {tau}")
    for tau in args.tau:
        start = time.perf_counter()
        res = displacement_interpolate_2d(g1, g2, tau, opts, K_max=args.K_max, tol=args.fit_tol, method=args.method, mu=args.mu)
        tag = f"{tau:g}".replace(".", "p")
        save_grid(res.grid, outdir / f"interp_tau{tag}.{args.format}")
        with open(outdir / f"decomposition_tau{tag}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(DECOMPOSITION_COLUMNS)
            for row in decomposition_rows(res.slices):
                writer.writerow([row[0], row[1], row[2], f"{row[3]:.10g}", f"{row[4]:.10g}", f"{row[5]:.6e}", row[6], row[7]])
        inv = res.inversion
        flag = "" if inv.converged else " WARNING: not converged"
        print(f"tau={tau:g}: iterations={inv.iterations} rel_residual={inv.rel_residual:.3e} seconds={time.perf_counter() - start:.1f}{flag}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="radonsplit", description="Discrete Radon transform tools and Radon-split solvers.")
    parser.add_argument("--threads", type=int, default=None, help="cap on BLAS/OpenMP threads (default: library default)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="apply the 2D/3D DRT or its back-projection")
    p.add_argument("op", choices=("fwd", "adj", "fwd3", "adj3"))
    p.add_argument("input", help="grid (.rsg/.csv, .npy for 3D) or sinogram (.rss/.csv, .rs3)")
    p.add_argument("output", help="output path; the format follows the suffix")
    p.add_argument("--half-width", type=float, default=4.0, help="half width L for grids built by adj/adj3 (default 4)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("invert", help="least-squares inversion of an oversampled sinogram")
    p.add_argument("input", help="sinogram of the prolonged grid (.rss or .csv)")
    p.add_argument("output", help="recovered grid (.rsg, .csv or .pgm)")
    p.add_argument("--n", type=int, default=None, help="target grid size (default N / 2p)")
    p.add_argument("--oversample-p", type=int, default=2, help="prolongation factor is 2p (default 2)")
    p.add_argument("--tol", type=float, default=1e-8, help="CG relative residual tolerance (default 1e-8)")
    p.add_argument("--max-iter", type=int, default=None, help="CG iteration cap (default 10 n)")
    p.add_argument("--half-width", type=float, default=4.0)
    p.add_argument("--residual-csv", default=None, help="write the per-iteration relative residual here")
    p.add_argument("--manifest", default=None, help="write a key,value manifest CSV here")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("solve", help="run a solver from a JSON config (schema in the README)")
    p.add_argument("config")
    p.add_argument("--outdir", default=".", help="directory for snapshots, runs.csv and manifest.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="convergence or absorbing-boundary study")
    p.add_argument("name", choices=("convergence", "boundary-decay"))
    p.add_argument("--Ns", default="8..256", help="grid sizes, '8..512' or '8,16,32' (convergence)")
    p.add_argument("--T", type=float, default=None, help="final time (default 3 for convergence, 20 for boundary-decay)")
    p.add_argument("--n", type=int, default=128, help="grid size (boundary-decay)")
    p.add_argument("--reference", choices=("wide", "radial"), default="wide", help="boundary-decay reference")
    p.add_argument("--out", default=None, help="CSV path (default standard output)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("interp", help="displacement interpolation between two grids")
    p.add_argument("grid1")
    p.add_argument("grid2")
    p.add_argument("--tau", type=float, nargs="+", default=[0.5])
    p.add_argument("--outdir", default=".")
    p.add_argument("--format", choices=("rsg", "csv", "pgm"), default="rsg")
    p.add_argument("--method", choices=("auto", "greedy", "pair"), default="auto")
    p.add_argument("--mu", type=float, default=0.1, help="displacement penalty used to rank slice fits")
    p.add_argument("--K-max", type=int, default=8, help="greedy component cap")
    p.add_argument("--fit-tol", type=float, default=1e-6, help="greedy stopping tolerance")
    p.add_argument("--oversample-p", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=None)
    p.set_defaults(func=cmd_interp)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        # only effective when set before the BLAS library starts
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    if getattr(args, "T", 0) is None:
        args.T = 3.0 if args.name == "convergence" else 20.0

    from .config import ConfigError
    from .errors import InvalidArgument, ParseError, ValidationError

    try:
        return args.func(args)
    except CliError as exc:
        print(f"radonsplit: error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"radonsplit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"radonsplit: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidArgument, ValidationError) as exc:
        print(f"radonsplit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"radonsplit: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
