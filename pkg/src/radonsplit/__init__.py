"""Discrete Radon transform, DRT inversion and Radon-split hyperbolic solvers.

Public names are loaded on first access, so ``radonsplit.cli`` can set
thread limits before NumPy starts.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "adrt2": ("backproject", "drt_forward", "drt_quadrant", "dline_cells"),
    "adrt3": ("backproject3", "dplane_cells", "drt3_forward"),
    "core": ("Grid2D", "Grid3D", "Hexadecant3D", "Quadrant2D", "Sinogram2D", "Sinogram3D", "prolong", "restrict"),
    "dispinterp": (
        "displacement_interpolate_1d",
        "displacement_interpolate_2d",
        "pair_reversal",
        "template_fit",
        "transport_reversal",
    ),
    "hypersolve": ("AcousticState", "MaterialParams", "SolveOptions", "solve_acoustics", "solve_transport"),
    "invert": ("InvertOptions", "invert_drt"),
}
_WHERE = {name: mod for mod, names in _EXPORTS.items() for name in names}

__all__ = sorted(_WHERE)


def __getattr__(name):
    if name in _WHERE:
        return getattr(import_module(f".{_WHERE[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + __all__)
