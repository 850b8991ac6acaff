"""JSON configuration for solver runs.

Schema (keys marked * are required)::

    {
      "problem"*:      "transport" | "acoustics",
      "n"*:            power of two,
      "L":             half width, default 4,
      "T":             final time; "output_times" defaults to [T],
      "output_times":  list of times >= 0,
      "theta":         [x1, x2] unit velocity, required for transport,
      "K0", "rho0":    positive, acoustics only, default 1,
      "ic":            {"humps": [{"center": [x1, x2], "scale": s, "amplitude": a}, ...]},
      "oversample_p":  integer >= 1, default 2,
      "boundary":      "absorbing-extrapolation" | "zero",
      "tol":           CG relative tolerance, default 1e-8,
      "max_iter":      CG iteration cap, default 10 n,
      "outputs":       {"grids": bool, "sinograms": bool, "csv": bool, "pgm": bool}
    }

Without ``ic`` the centred unit hump is used.  Every offending key is
reported together in one :class:`ConfigError`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .core import is_power_of_two
from .hypersolve import ABSORBING, ZERO

KNOWN_KEYS = {
    "problem",
    "n",
    "L",
    "T",
    "output_times",
    "theta",
    "K0",
    "rho0",
    "ic",
    "oversample_p",
    "boundary",
    "tol",
    "max_iter",
    "outputs",
}
OUTPUT_KEYS = ("grids", "sinograms", "csv", "pgm")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(f"{k}: {msg}" for k, msg in self.problems))

    @property
    def keys(self):
        return [k for k, _ in self.problems]


@dataclass(frozen=True)
class Hump:
    center: tuple
    scale: float = 1.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class SolverConfig:
    problem: str
    n: int
    L: float = 4.0
    output_times: tuple = (1.0,)
    theta: tuple | None = None
    K0: float = 1.0
    rho0: float = 1.0
    humps: tuple = (Hump((0.0, 0.0)),)
    oversample_p: int = 2
    boundary: str = ABSORBING
    tol: float = 1e-8
    max_iter: int | None = None
    outputs: dict = field(default_factory=lambda: {"grids": True, "sinograms": False, "csv": False, "pgm": False})


def _number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _vector(x):
    return isinstance(x, (list, tuple)) and len(x) == 2 and all(_number(v) for v in x)


def parse_config(raw: dict) -> SolverConfig:
    """Validate a decoded JSON object and build a :class:`SolverConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError([("<root>", "expected a JSON object")])
    bad = []
    for key in sorted(set(raw) - KNOWN_KEYS):
        bad.append((key, "unknown key"))

    problem = raw.get("problem")
    if problem not in ("transport", "acoustics"):
        bad.append(("problem", f"must be 'transport' or 'acoustics', got {problem!r}"))
    n = raw.get("n")
    if not (isinstance(n, int) and not isinstance(n, bool) and is_power_of_two(n)):
        bad.append(("n", f"must be a power of two, got {n!r}"))
    L = raw.get("L", 4.0)
    if not (_number(L) and L > 0):
        bad.append(("L", f"must be a positive number, got {L!r}"))

    times = raw.get("output_times")
    if times is None:
        T = raw.get("T")
        if T is None:
            bad.append(("T", "give T or output_times"))
            times = []
        else:
            times = [T]
    elif "T" in raw and _number(raw["T"]) and isinstance(times, list) and times and raw["T"] not in times:
        times = list(times) + [raw["T"]]
    if not (isinstance(times, list) and all(_number(t) and t >= 0 for t in times)):
        bad.append(("output_times", f"must be a list of non-negative numbers, got {times!r}"))
        times = []

    theta = raw.get("theta")
    if problem == "transport":
        if not _vector(theta):
            bad.append(("theta", "transport needs a two-component velocity"))
    elif theta is not None and not _vector(theta):
        bad.append(("theta", "must be a two-component vector"))
    for key in ("K0", "rho0"):
        v = raw.get(key, 1.0)
        if not (_number(v) and v > 0):
            bad.append((key, f"must be a positive number, got {v!r}"))

    humps = []
    ic = raw.get("ic", {"humps": [{"center": [0.0, 0.0]}]})
    if not (isinstance(ic, dict) and set(ic) <= {"humps"} and isinstance(ic.get("humps"), list) and ic["humps"]):
        bad.append(("ic", "expected {'humps': [ ... ]} with at least one hump"))
    else:
        for i, h in enumerate(ic["humps"]):
            key = f"ic.humps[{i}]"
            if not (isinstance(h, dict) and set(h) <= {"center", "scale", "amplitude"} and _vector(h.get("center"))):
                bad.append((key, "needs a two-component center and optional scale, amplitude"))
                continue
            scale, amp = h.get("scale", 1.0), h.get("amplitude", 1.0)
            if not (_number(scale) and scale > 0 and _number(amp)):
                bad.append((key, "scale must be positive and amplitude a number"))
                continue
            humps.append(Hump(tuple(float(c) for c in h["center"]), float(scale), float(amp)))

    p = raw.get("oversample_p", 2)
    if not (isinstance(p, int) and not isinstance(p, bool) and p >= 1):
        bad.append(("oversample_p", f"must be an integer >= 1, got {p!r}"))
    boundary = raw.get("boundary", ABSORBING)
    if boundary not in (ABSORBING, ZERO):
        bad.append(("boundary", f"must be {ABSORBING!r} or {ZERO!r}, got {boundary!r}"))
    tol = raw.get("tol", 1e-8)
    if not (_number(tol) and 0 < tol < 1):
        bad.append(("tol", f"must lie in (0, 1), got {tol!r}"))
    max_iter = raw.get("max_iter")
    if max_iter is not None and not (isinstance(max_iter, int) and not isinstance(max_iter, bool) and max_iter >= 1):
        bad.append(("max_iter", f"must be a positive integer, got {max_iter!r}"))

    outputs = {"grids": True, "sinograms": False, "csv": False, "pgm": False}
    given = raw.get("outputs", {})
    if not isinstance(given, dict):
        bad.append(("outputs", "must be an object"))
    else:
        for key, val in given.items():
            if key not in OUTPUT_KEYS:
                bad.append((f"outputs.{key}", "unknown output kind"))
            elif not isinstance(val, bool):
                bad.append((f"outputs.{key}", "must be true or false"))
            else:
                outputs[key] = val

    if bad:
        raise ConfigError(bad)
    return SolverConfig(
        problem=problem,
        n=n,
        L=float(L),
        output_times=tuple(float(t) for t in sorted(set(times))),
        theta=None if theta is None else tuple(float(v) for v in theta),
        K0=float(raw.get("K0", 1.0)),
        rho0=float(raw.get("rho0", 1.0)),
        humps=tuple(humps),
        oversample_p=p,
        boundary=boundary,
        tol=float(tol),
        max_iter=max_iter,
        outputs=outputs,
    )


def load_config(path) -> SolverConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("<json>", f"line {exc.lineno}: {exc.msg}")]) from None
    return parse_config(raw)
