import struct

import numpy as np
import pytest

from radonsplit.adrt2 import drt_forward
from radonsplit.adrt3 import drt3_forward
from radonsplit.core import Grid2D, Grid3D
from radonsplit.errors import InvalidArgument, ParseError, ValidationError
from radonsplit.io import (
    grid_from_csv,
    grid_to_bytes,
    load_grid,
    load_grid3,
    load_sinogram,
    load_sinogram3,
    pgm_bytes,
    save_grid,
    save_grid3,
    save_sinogram,
    save_sinogram3,
)


@pytest.fixture
def grid():
    return Grid2D(np.random.default_rng(3).normal(size=(8, 8)) * 1e3, 2.75)


@pytest.mark.parametrize("suffix", ["csv", "rsg"])
def test_grid_roundtrip_is_bit_exact(tmp_path, grid, suffix):
    path = tmp_path / f"g.{suffix}"
    save_grid(grid, path)
    back = load_grid(path)
    assert np.array_equal(back.data, grid.data)
    assert back.half_width == grid.half_width


def test_small_csv_roundtrip(tmp_path):
    g = Grid2D([[1.0, 2.0], [3.0, 4.0]])
    save_grid(g, tmp_path / "g.csv")
    assert np.array_equal(load_grid(tmp_path / "g.csv").data, g.data)


def test_rsg_layout():
    raw = grid_to_bytes(Grid2D([[1.0, 2.0], [3.0, 4.0]], 4.0))
    assert raw[:4] == b"RSG1"
    assert struct.unpack("<I", raw[4:8]) == (2,)
    assert struct.unpack("<d", raw[8:16]) == (4.0,)
    assert struct.unpack("<4d", raw[16:]) == (1.0, 2.0, 3.0, 4.0)


def test_csv_short_row_names_the_row():
    text = "1,2,3,4\n1,2,3,4\n1,2,3\n1,2,3,4\n"
    with pytest.raises(ParseError, match="row 2"):
        grid_from_csv(text)


def test_csv_header_mismatch():
    with pytest.raises(ParseError):
        grid_from_csv("# n=4 L=4\n1,2\n3,4\n")


def test_csv_non_power_of_two():
    with pytest.raises(ValidationError):
        grid_from_csv("1,2,3\n4,5,6\n7,8,9\n")


def test_truncated_binary(tmp_path, grid):
    path = tmp_path / "g.rsg"
    save_grid(grid, path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ParseError, match="offset"):
        load_grid(path)


@pytest.mark.parametrize("suffix", ["csv", "rss"])
def test_sinogram_roundtrip(tmp_path, grid, suffix):
    s = drt_forward(grid)
    save_sinogram(s, tmp_path / f"s.{suffix}")
    assert np.array_equal(load_sinogram(tmp_path / f"s.{suffix}").data, s.data)


def test_sinogram_binary_size(tmp_path, grid):
    save_sinogram(drt_forward(grid), tmp_path / "s.rss")
    assert (tmp_path / "s.rss").stat().st_size == 8 + 8 * 4 * 15 * 8


def test_3d_roundtrip(tmp_path):
    g = Grid3D(np.arange(64.0).reshape(4, 4, 4))
    save_grid3(g, tmp_path / "g.npy")
    assert np.array_equal(load_grid3(tmp_path / "g.npy").data, g.data)
    s = drt3_forward(g)
    save_sinogram3(s, tmp_path / "s.rs3")
    raw = (tmp_path / "s.rs3").read_bytes()
    assert raw[:4] == b"RS31"
    assert np.array_equal(load_sinogram3(tmp_path / "s.rs3").data, s.data)


def test_pgm_scaling():
    raw = pgm_bytes(np.array([[0.0, 1.0], [2.0, 4.0]]))
    head = b"P5\n2 2\n65535\n"
    assert raw.startswith(head)
    pixels = np.frombuffer(raw[len(head) :], dtype=">u2")
    assert pixels.tolist() == [0, 16384, 32768, 65535]


def test_pgm_is_output_only(tmp_path, grid):
    save_grid(grid, tmp_path / "g.pgm")
    with pytest.raises(InvalidArgument):
        load_grid(tmp_path / "g.pgm")
