"""Grid and sinogram files.

Binary layouts (all little-endian, doubles row-major):

=======  ==================================================================
RSG1     ``b"RSG1"``, u32 ``n``, f64 half width, ``n*n`` doubles
RSS1     ``b"RSS1"``, u32 ``n``, quadrants a..d, each ``(2n-1) x n`` doubles
RS31     ``b"RS31"``, u32 ``n``, 16 hexadecants, each ``(3n-2) x n x n``
=======  ==================================================================

CSV grids hold ``n`` lines of ``n`` comma-separated values with an optional
``# n=<n> L=<half_width>`` header.  CSV sinograms hold four blocks, each
introduced by ``# quadrant=<label>``.  PGM output is binary P5 with 16-bit
big-endian samples, the grid minimum mapped to 0 and the maximum to 65535.
3D grids use the NumPy ``.npy`` format.
"""

from __future__ import annotations

import os
import re
import struct
from pathlib import Path

import numpy as np

from .core import DEFAULT_HALF_WIDTH, HEXADECANTS, QUADRANTS, Grid2D, Grid3D, Sinogram2D, Sinogram3D
from .errors import InvalidArgument, ParseError

GRID_MAGIC = b"RSG1"
SINO_MAGIC = b"RSS1"
SINO3_MAGIC = b"RS31"

_SUFFIXES = {
    ".csv": "csv",
    ".rsg": "rsg-binary",
    ".pgm": "pgm-out",
    ".rss": "rss-binary",
    ".rs3": "rs31-binary",
    ".npy": "npy",
}

_HEADER = re.compile(r"^#\s*n\s*=\s*(\S+)\s+L\s*=\s*(\S+)\s*$")


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    try:
        return _SUFFIXES[suffix]
    except KeyError:
        raise InvalidArgument(f"cannot infer a file format from {str(path)!r}") from None


def _fmt(x):
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# CSV


def grid_to_csv(g: Grid2D) -> str:
    lines = [f"# n={g.n} L={_fmt(g.half_width)}"]
    lines += [",".join(_fmt(v) for v in row) for row in g.data]
    return "\n".join(lines) + "\n"


def _parse_rows(lines, first_line):
    rows = []
    width = None
    for offset, text in enumerate(lines):
        lineno = first_line + offset
        fields = text.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields, got {len(fields)}", f"line {lineno} (row {len(rows)})")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ParseError(f"non-numeric field in {text!r}", f"line {lineno} (row {len(rows)})") from None
    return rows


def grid_from_csv(text: str) -> Grid2D:
    lines = text.splitlines()
    n_decl, half_width = None, DEFAULT_HALF_WIDTH
    start = 0
    while start < len(lines) and not lines[start].strip():
        start += 1
    if start < len(lines) and lines[start].lstrip().startswith("#"):
        m = _HEADER.match(lines[start].strip())
        if m is None:
            raise ParseError(f"malformed header {lines[start]!r}", f"line {start + 1}")
        try:
            n_decl, half_width = int(m.group(1)), float(m.group(2))
        except ValueError:
            raise ParseError(f"malformed header {lines[start]!r}", f"line {start + 1}") from None
        start += 1
    body = [ln for ln in lines[start:]]
    while body and not body[-1].strip():
        body.pop()
    rows = _parse_rows(body, start + 1)
    if not rows:
        raise ParseError("no data rows", f"line {start + 1}")
    n = len(rows[0])
    if n_decl is not None and n_decl != n:
        raise ParseError(f"header declares n={n_decl} but rows have {n} fields", "line 1")
    if len(rows) != n:
        raise ParseError(f"expected {n} rows, got {len(rows)}", f"line {start + len(rows)}")
    return Grid2D(np.array(rows), half_width)


def sinogram_to_csv(sino: Sinogram2D) -> str:
    out = []
    for label, block in zip(QUADRANTS, sino.data):
        out.append(f"# quadrant={label}")
        out += [",".join(_fmt(v) for v in row) for row in block]
    return "\n".join(out) + "\n"


def sinogram_from_csv(text: str) -> Sinogram2D:
    blocks = {}
    current = None
    first = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = re.match(r"^#\s*quadrant\s*=\s*([a-d])\s*$", stripped)
            if m is None or m.group(1) in blocks:
                raise ParseError(f"unexpected header {stripped!r}", f"line {lineno}")
            current = m.group(1)
            blocks[current] = []
            first[current] = lineno + 1
            continue
        if current is None:
            raise ParseError("data before the first '# quadrant=' header", f"line {lineno}")
        blocks[current].append(stripped)
    if tuple(blocks) != QUADRANTS:
        raise ParseError(f"expected quadrants a, b, c, d in order, got {list(blocks)}")
    arrays = [np.array(_parse_rows(blocks[q], first[q])) for q in QUADRANTS]
    if len({a.shape for a in arrays}) != 1:
        raise ParseError("quadrant blocks differ in shape")
    return Sinogram2D(np.stack(arrays))


# ---------------------------------------------------------------------------
# Binary


def _read_header(raw, magic, path):
    if len(raw) < 8 or raw[:4] != magic:
        raise ParseError(f"{path}: missing {magic.decode()} magic", "offset 0")
    (n,) = struct.unpack_from("<I", raw, 4)
    return n


def _read_doubles(raw, offset, count, path):
    need = offset + 8 * count
    if len(raw) != need:
        raise ParseError(f"{path}: expected {need} bytes, found {len(raw)}", f"offset {min(len(raw), need)}")
    return np.frombuffer(raw, dtype="<f8", count=count, offset=offset).astype(np.float64)


def grid_to_bytes(g: Grid2D) -> bytes:
    head = GRID_MAGIC + struct.pack("<Id", g.n, g.half_width)
    return head + np.ascontiguousarray(g.data, dtype="<f8").tobytes()


def grid_from_bytes(raw: bytes, path="<bytes>") -> Grid2D:
    n = _read_header(raw, GRID_MAGIC, path)
    if len(raw) < 16:
        raise ParseError(f"{path}: truncated header", f"offset {len(raw)}")
    (half_width,) = struct.unpack_from("<d", raw, 8)
    data = _read_doubles(raw, 16, n * n, path)
    return Grid2D(data.reshape(n, n), half_width)


def sinogram_to_bytes(sino: Sinogram2D) -> bytes:
    return SINO_MAGIC + struct.pack("<I", sino.n) + np.ascontiguousarray(sino.data, dtype="<f8").tobytes()


def sinogram_from_bytes(raw: bytes, path="<bytes>") -> Sinogram2D:
    n = _read_header(raw, SINO_MAGIC, path)
    data = _read_doubles(raw, 8, 4 * (2 * n - 1) * n, path)
    return Sinogram2D(data.reshape(4, 2 * n - 1, n))


def sinogram3_to_bytes(sino: Sinogram3D) -> bytes:
    return SINO3_MAGIC + struct.pack("<I", sino.n) + np.ascontiguousarray(sino.data, dtype="<f8").tobytes()


def sinogram3_from_bytes(raw: bytes, path="<bytes>") -> Sinogram3D:
    n = _read_header(raw, SINO3_MAGIC, path)
    data = _read_doubles(raw, 8, len(HEXADECANTS) * (3 * n - 2) * n * n, path)
    return Sinogram3D(data.reshape(len(HEXADECANTS), 3 * n - 2, n, n))


def pgm_bytes(data) -> bytes:
    """16-bit binary PGM of a 2D array, linearly mapping ``[min, max]`` to ``[0, 65535]``."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidArgument(f"PGM output needs a 2D array, got shape {a.shape}")
    lo, hi = float(np.min(a)), float(np.max(a))
    scaled = np.zeros(a.shape) if hi <= lo else (a - lo) / (hi - lo) * 65535.0
    pixels = np.clip(np.rint(scaled), 0, 65535).astype(">u2")
    rows, cols = a.shape
    return f"P5\n{cols} {rows}\n65535\n".encode("ascii") + pixels.tobytes()


# ---------------------------------------------------------------------------
# Path level helpers


def _write(path, payload):
    mode = "w" if isinstance(payload, str) else "wb"
    with open(path, mode) as fh:
        fh.write(payload)


def save_grid(g: Grid2D, path, format=None):
    fmt = format or infer_format(path)
    if fmt == "csv":
        _write(path, grid_to_csv(g))
    elif fmt == "rsg-binary":
        _write(path, grid_to_bytes(g))
    elif fmt == "pgm-out":
        _write(path, pgm_bytes(g.data))
    else:
        raise InvalidArgument(f"unsupported grid format {fmt!r}")


def load_grid(path, format=None) -> Grid2D:
    fmt = format or infer_format(path)
    if fmt == "csv":
        with open(path) as fh:
            return grid_from_csv(fh.read())
    if fmt == "rsg-binary":
        with open(path, "rb") as fh:
            return grid_from_bytes(fh.read(), os.fspath(path))
    if fmt == "pgm-out":
        raise InvalidArgument("PGM is an output-only format")
    raise InvalidArgument(f"unsupported grid format {fmt!r}")


def save_sinogram(sino: Sinogram2D, path, format=None):
    fmt = format or infer_format(path)
    if fmt == "csv":
        _write(path, sinogram_to_csv(sino))
    elif fmt == "rss-binary":
        _write(path, sinogram_to_bytes(sino))
    elif fmt == "pgm-out":
        # quadrants side by side
        _write(path, pgm_bytes(np.concatenate(list(sino.data), axis=1)))
    else:
        raise InvalidArgument(f"unsupported sinogram format {fmt!r}")


def load_sinogram(path, format=None) -> Sinogram2D:
    fmt = format or infer_format(path)
    if fmt == "csv":
        with open(path) as fh:
            return sinogram_from_csv(fh.read())
    if fmt == "rss-binary":
        with open(path, "rb") as fh:
            return sinogram_from_bytes(fh.read(), os.fspath(path))
    raise InvalidArgument(f"unsupported sinogram format {fmt!r}")


def save_sinogram3(sino: Sinogram3D, path):
    _write(path, sinogram3_to_bytes(sino))


def load_sinogram3(path) -> Sinogram3D:
    with open(path, "rb") as fh:
        return sinogram3_from_bytes(fh.read(), os.fspath(path))


def save_grid3(g: Grid3D, path):
    with open(path, "wb") as fh:
        np.save(fh, np.asarray(g.data), allow_pickle=False)


def load_grid3(path, half_width=DEFAULT_HALF_WIDTH) -> Grid3D:
    try:
        data = np.load(path, allow_pickle=False)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return Grid3D(data, half_width)
