import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from gridfn import Box  # noqa: E402


@pytest.fixture
def window1():
    return Box.window(4, 1)


@pytest.fixture
def window2():
    return Box.window(4, 2)


def interval(a, b) -> Box:
    return Box((Fraction(a),), (Fraction(b),))


def atom_on(cells, cube_lo, cube_hi, kind, I0=(), I1=(), window=None):
    """Atom whose payload takes the given values on 1-d or n-d boxes."""
    from atoms import Atom
    from gridfn import DyadicCube, PCFunction

    boxes = [(b if isinstance(b, Box) else interval(*b), v) for b, v in cells]
    payload = PCFunction.from_cells(boxes, window=window)
    lo = cube_lo if isinstance(cube_lo, tuple) else (cube_lo,)
    hi = cube_hi if isinstance(cube_hi, tuple) else (cube_hi,)
    return Atom(payload, DyadicCube(tuple(Fraction(x) for x in lo), tuple(Fraction(x) for x in hi)),
                tuple(I0), tuple(I1), kind)
