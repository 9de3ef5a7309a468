"""Piecewise-constant functions on dyadic grids, eta-extension and eta-averaging.

A ``PCFunction`` stores its cells integer-coded: cell i is the open box
``prod_a (lo[i,a], hi[i,a]) / 2^level``. Values are exact Fractions (object
arrays) or float64/complex128. All integrals are finite weighted sums; in exact
mode they are exact.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from config import GridConfig, settings
from errors import InvalidArgument, InvalidSupport, NotFiniteOrTooLarge
from geometry import SignedChamber, to_exact

Number = Union[int, float, complex, Fraction]


# ---------------------------------------------------------------------------
# Boxes and cubes
# ---------------------------------------------------------------------------

def is_dyadic(x: Fraction) -> bool:
    den = Fraction(x).denominator
    return den & (den - 1) == 0


def dyadic_level(x: Fraction) -> int:
    """Smallest K >= 0 with x * 2^K an integer."""
    x = Fraction(x)
    if not is_dyadic(x):
        raise InvalidArgument(f"{x} is not a dyadic rational")
    return x.denominator.bit_length() - 1


def _frac(x) -> Fraction:
    value = to_exact(x)
    if value is None:
        value = Fraction(x)
    return value


@dataclass(frozen=True)
class Box:
    """Open axis-parallel box with Fraction corners."""

    lo: Tuple[Fraction, ...]
    hi: Tuple[Fraction, ...]

    def __post_init__(self):
        lo = tuple(_frac(x) for x in self.lo)
        hi = tuple(_frac(x) for x in self.hi)
        if len(lo) != len(hi) or not lo:
            raise InvalidArgument(f"Box corners have mismatched dimensions {len(lo)} and {len(hi)}")
        if any(a >= b for a, b in zip(lo, hi)):
            raise InvalidArgument(f"Box must have positive sides: lo={_fmt(lo)}, hi={_fmt(hi)}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def window(cls, half: Number, d: int) -> "Box":
        h = _frac(half)
        return cls((-h,) * d, (h,) * d)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> Tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> Fraction:
        return math.prod(self.sides, start=Fraction(1))

    @property
    def center(self) -> Tuple[Fraction, ...]:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def is_cube(self) -> bool:
        return len(set(self.sides)) == 1

    @property
    def side(self) -> Fraction:
        sides = set(self.sides)
        if len(sides) != 1:
            raise InvalidArgument(f"Box with sides {_fmt(self.sides)} is not a cube")
        return sides.pop()

    @property
    def level(self) -> int:
        return max(dyadic_level(x) for x in self.lo + self.hi)

    @property
    def is_dyadic(self) -> bool:
        return all(is_dyadic(x) for x in self.lo + self.hi)

    def key(self) -> tuple:
        """Lexicographic descriptor used for deterministic tie-breaks."""
        return self.sides + self.lo

    def intersect(self, other: "Box") -> Optional["Box"]:
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def overlaps(self, other: "Box") -> bool:
        return self.intersect(other) is not None

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains_point(self, x: Sequence) -> bool:
        return all(a < _frac(v) < b for a, b, v in zip(self.lo, self.hi, x))

    def scaled(self, factor: Number) -> "Box":
        """Same center, every side multiplied by factor."""
        f = _frac(factor)
        c = self.center
        half = tuple(s * f / 2 for s in self.sides)
        return type(self)(tuple(ci - hi for ci, hi in zip(c, half)), tuple(ci + hi for ci, hi in zip(c, half)))

    def double(self) -> "Box":
        return self.scaled(2)

    def quadruple(self) -> "Box":
        return self.scaled(4)

    def reflect(self, axes: Iterable[int]) -> "Box":
        axes = set(axes)
        lo = tuple(-b if i in axes else a for i, (a, b) in enumerate(zip(self.lo, self.hi)))
        hi = tuple(-a if i in axes else b for i, (a, b) in enumerate(zip(self.lo, self.hi)))
        return type(self)(lo, hi)

    def translate(self, shift: Sequence) -> "Box":
        s = [_frac(x) for x in shift]
        return type(self)(tuple(a + t for a, t in zip(self.lo, s)), tuple(b + t for b, t in zip(self.hi, s)))

    def with_axis(self, axis: int, lo: Fraction, hi: Fraction) -> "Box":
        new_lo, new_hi = list(self.lo), list(self.hi)
        new_lo[axis], new_hi[axis] = _frac(lo), _frac(hi)
        return Box(tuple(new_lo), tuple(new_hi))

    def in_positive_cone(self, axes: Iterable[int]) -> bool:
        """Box lies in the closed cone {x_i >= 0 : i in axes}."""
        return all(self.lo[i] >= 0 for i in axes)

    def describe(self) -> Dict[str, List[str]]:
        return {"lo": [str(x) for x in self.lo], "hi": [str(x) for x in self.hi]}

    def __str__(self) -> str:
        return "x".join(f"({a},{b})" for a, b in zip(self.lo, self.hi))


class DyadicCube(Box):
    """Box with equal sides."""

    def __post_init__(self):
        super().__post_init__()
        if len(set(self.sides)) != 1:
            raise InvalidArgument(f"Cube sides differ: {_fmt(self.sides)}")

    @classmethod
    def from_corner(cls, corner: Sequence, side: Number) -> "DyadicCube":
        s = _frac(side)
        c = tuple(_frac(x) for x in corner)
        return cls(c, tuple(x + s for x in c))

    @classmethod
    def window(cls, half: Number, d: int) -> "DyadicCube":
        h = _frac(half)
        return cls((-h,) * d, (h,) * d)

    @property
    def corner(self) -> Tuple[Fraction, ...]:
        return self.lo


def _fmt(values: Iterable[Fraction]) -> str:
    return "(" + ", ".join(str(v) for v in values) + ")"


def symmetric_hull(box: Box, axes: Iterable[int]) -> Box:
    """Smallest box containing box and its reflections across the given axes."""
    axes = set(axes)
    lo, hi = [], []
    for i, (a, b) in enumerate(zip(box.lo, box.hi)):
        if i in axes:
            m = max(abs(a), abs(b))
            lo.append(-m)
            hi.append(m)
        else:
            lo.append(a)
            hi.append(b)
    return Box(tuple(lo), tuple(hi))


def chamber_box(window: Box, axes: Iterable[int]) -> Optional[Box]:
    """window intersected with {x_i > 0 : i in axes}."""
    lo = list(window.lo)
    for i in axes:
        lo[i] = max(lo[i], Fraction(0))
    try:
        return Box(tuple(lo), window.hi)
    except InvalidArgument:
        return None


# ---------------------------------------------------------------------------
# Value modes
# ---------------------------------------------------------------------------

def _is_exact_value(v) -> bool:
    return not isinstance(v, bool) and isinstance(v, (int, np.integer, Fraction))


def _values_array(values: Sequence, mode: Optional[str]) -> Tuple[np.ndarray, str]:
    items = list(values)
    if mode is None:
        mode = "exact" if all(_is_exact_value(v) or (isinstance(v, str)) for v in items) else "float"
    if mode == "exact":
        out = np.empty(len(items), dtype=object)
        for i, v in enumerate(items):
            ev = to_exact(v)
            if ev is None:
                raise InvalidArgument(f"Value {v!r} is not exact; use value_mode='float'")
            out[i] = ev
        return out, "exact"
    if mode != "float":
        raise InvalidArgument(f"Unknown value mode {mode!r}")
    converted = [complex(v) if isinstance(v, complex) else float(_frac(v) if isinstance(v, str) else v) for v in items]
    dtype = complex if any(isinstance(v, complex) for v in converted) else float
    return np.array(converted, dtype=dtype), "float"


def _mode_of(*modes: str) -> str:
    return "exact" if all(m == "exact" for m in modes) else "float"


def _coerce(values: np.ndarray, mode: str) -> np.ndarray:
    if mode == "exact":
        return values
    if values.dtype == object:
        if any(isinstance(v, complex) for v in values):
            return values.astype(complex)
        return np.array([float(v) for v in values], dtype=float)
    return values


def _scalar(c: Number, mode: str):
    if mode == "exact":
        ev = to_exact(c)
        if ev is None:
            raise InvalidArgument(f"Coefficient {c!r} is not exact")
        return ev
    return complex(c) if isinstance(c, complex) else float(c)


# ---------------------------------------------------------------------------
# PCFunction
# ---------------------------------------------------------------------------

class PCFunction:
    """Piecewise-constant function: disjoint dyadic boxes with constant values, zero elsewhere."""

    def __init__(self, level: int, lo: np.ndarray, hi: np.ndarray, values: np.ndarray, window: Box,
                 value_mode: str, check: bool = True, config: Optional[GridConfig] = None):
        self.level = int(level)
        self.lo = np.asarray(lo, dtype=np.int64).reshape(-1, window.dimension)
        self.hi = np.asarray(hi, dtype=np.int64).reshape(-1, window.dimension)
        self.values = values
        self.window = window
        self.value_mode = value_mode
        self.config = config or settings.grid
        if check:
            self._validate()

    # -- construction ----------------------------------------------------------
    @classmethod
    def from_cells(cls, cells: Sequence[Tuple[Box, Any]], window: Optional[Box] = None, d: Optional[int] = None,
                   value_mode: Optional[str] = None, check: bool = True) -> "PCFunction":
        cells = list(cells)
        if d is None:
            if cells:
                d = cells[0][0].dimension
            elif window is not None:
                d = window.dimension
            else:
                raise InvalidArgument("Cannot infer the dimension of an empty PCFunction")
        window = window or Box.window(settings.grid.window_half, d)
        values, mode = _values_array([v for _, v in cells], value_mode)
        level = max([window.level] + [c.level for c, _ in cells])
        scale = 1 << level
        lo = np.array([[int(x * scale) for x in c.lo] for c, _ in cells], dtype=np.int64).reshape(-1, d)
        hi = np.array([[int(x * scale) for x in c.hi] for c, _ in cells], dtype=np.int64).reshape(-1, d)
        return cls(level, lo, hi, values, window, mode, check=check)

    @classmethod
    def zero(cls, d: int, window: Optional[Box] = None, value_mode: str = "exact") -> "PCFunction":
        window = window or Box.window(settings.grid.window_half, d)
        values = np.empty(0, dtype=object if value_mode == "exact" else float)
        return cls(window.level, np.zeros((0, d)), np.zeros((0, d)), values, window, value_mode, check=False)

    @classmethod
    def indicator(cls, box: Box, value: Number = 1, window: Optional[Box] = None,
                  value_mode: Optional[str] = None) -> "PCFunction":
        return cls.from_cells([(box, value)], window=window, value_mode=value_mode)

    def _replace(self, level=None, lo=None, hi=None, values=None, window=None, value_mode=None) -> "PCFunction":
        return PCFunction(
            self.level if level is None else level,
            self.lo if lo is None else lo,
            self.hi if hi is None else hi,
            self.values if values is None else values,
            self.window if window is None else window,
            self.value_mode if value_mode is None else value_mode,
            check=False,
            config=self.config,
        )

    # -- validation ---------------------------------------------------------------
    def _window_ints(self, level: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        scale = 1 << (self.level if level is None else level)
        return (np.array([int(x * scale) for x in self.window.lo], dtype=np.int64),
                np.array([int(x * scale) for x in self.window.hi], dtype=np.int64))

    def _validate(self) -> None:
        if not self.window.is_dyadic:
            raise InvalidArgument(f"Window {self.window} is not dyadic")
        if len(self.values) != len(self.lo):
            raise InvalidArgument(f"{len(self.values)} values for {len(self.lo)} cells")
        if len(self.lo) == 0:
            return
        if np.any(self.lo >= self.hi):
            raise InvalidArgument("Every cell needs positive sides")
        wlo, whi = self._window_ints()
        if np.any(self.lo < wlo) or np.any(self.hi > whi):
            bad = int(np.nonzero(np.any(self.lo < wlo, axis=1) | np.any(self.hi > whi, axis=1))[0][0])
            raise InvalidArgument(f"Cell {bad} ({self.cell_box(bad)}) is not inside the window {self.window}")
        pair = _overlapping_pair(self, self.config)
        if pair is not None:
            raise InvalidArgument(f"Cells {pair[0]} and {pair[1]} overlap")

    # -- basic accessors -------------------------------------------------------------
    @property
    def dimension(self) -> int:
        return self.window.dimension

    def __len__(self) -> int:
        return len(self.lo)

    @property
    def is_exact(self) -> bool:
        return self.value_mode == "exact"

    @property
    def is_complex(self) -> bool:
        return self.values.dtype == complex

    def cell_box(self, i: int) -> Box:
        scale = 1 << self.level
        return Box(tuple(Fraction(int(x), scale) for x in self.lo[i]), tuple(Fraction(int(x), scale) for x in self.hi[i]))

    @property
    def cells(self) -> List[Tuple[Box, Any]]:
        return list(self.iter_cells())

    def iter_cells(self) -> Iterator[Tuple[Box, Any]]:
        for i in range(len(self.lo)):
            yield self.cell_box(i), self.values[i]

    def resolution(self) -> int:
        """Smallest level at which every cell corner is an integer."""
        if len(self.lo) == 0:
            return self.window.level
        coords = np.concatenate([self.lo.ravel(), self.hi.ravel()])
        combined = int(np.bitwise_or.reduce(np.abs(coords)))
        shift = self.level if combined == 0 else min(self.level, (combined & -combined).bit_length() - 1)
        return max(self.level - shift, self.window.level)

    def at_level(self, level: int) -> "PCFunction":
        if level == self.level:
            return self
        if level < self.level:
            shift = self.level - level
            if np.any(self.lo % (1 << shift)) or np.any(self.hi % (1 << shift)):
                raise InvalidArgument(f"Cannot coarsen to level {level}")
            return self._replace(level=level, lo=self.lo >> shift, hi=self.hi >> shift)
        shift = level - self.level
        if level > 56:
            raise NotFiniteOrTooLarge(f"Dyadic level {level} exceeds integer coordinate range")
        return self._replace(level=level, lo=self.lo << shift, hi=self.hi << shift)

    def cell_volumes(self) -> np.ndarray:
        """Cell volumes: Fractions in exact mode, floats otherwise."""
        sides = (self.hi - self.lo).astype(object)
        raw = np.prod(sides, axis=1) if len(sides) else np.empty(0, dtype=object)
        denom = 1 << (self.level * self.dimension)
        if self.is_exact:
            return np.array([Fraction(int(v), denom) for v in raw], dtype=object)
        return np.array([int(v) / denom for v in raw], dtype=float)

    def support_box(self) -> Optional[Box]:
        if len(self.lo) == 0:
            return None
        scale = 1 << self.level
        return Box(tuple(Fraction(int(x), scale) for x in self.lo.min(axis=0)),
                   tuple(Fraction(int(x), scale) for x in self.hi.max(axis=0)))

    def centers(self) -> np.ndarray:
        return (self.lo + self.hi).astype(float) / (2.0 * (1 << self.level))

    # -- algebra --------------------------------------------------------------------------
    def scale(self, c: Number) -> "PCFunction":
        mode = self.value_mode if _is_exact_value(c) or isinstance(c, Fraction) else "float"
        values = _coerce(self.values, mode) * _scalar(c, mode)
        return self._replace(values=values, value_mode=mode)

    def __mul__(self, c: Number) -> "PCFunction":
        return self.scale(c)

    __rmul__ = __mul__

    def __neg__(self) -> "PCFunction":
        return self.scale(-1)

    def __add__(self, other: "PCFunction") -> "PCFunction":
        return overlay([(1, self), (1, other)], window=_join_windows([self.window, other.window]))

    def __sub__(self, other: "PCFunction") -> "PCFunction":
        return overlay([(1, self), (-1, other)], window=_join_windows([self.window, other.window]))

    def as_float(self) -> "PCFunction":
        return self._replace(values=_coerce(self.values, "float"), value_mode="float")

    def with_window(self, window: Box) -> "PCFunction":
        out = self.at_level(max(self.level, window.level))._replace(window=window)
        out._validate_window()
        return out

    def _validate_window(self) -> None:
        if len(self.lo) == 0:
            return
        wlo, whi = self._window_ints()
        if np.any(self.lo < wlo) or np.any(self.hi > whi):
            raise InvalidArgument(f"Function support does not fit in window {self.window}")

    def restrict(self, box: Box) -> "PCFunction":
        """Multiply by the indicator of box; window unchanged."""
        level = max(self.level, box.level)
        f = self.at_level(level)
        scale = 1 << level
        blo = np.array([int(x * scale) for x in box.lo], dtype=np.int64)
        bhi = np.array([int(x * scale) for x in box.hi], dtype=np.int64)
        lo = np.maximum(f.lo, blo)
        hi = np.minimum(f.hi, bhi)
        keep = np.all(lo < hi, axis=1)
        return f._replace(lo=lo[keep], hi=hi[keep], values=f.values[keep])

    def restrict_halfspace(self, axis: int, positive: bool = True) -> "PCFunction":
        """Multiply by the indicator of {x_axis > 0} (or < 0)."""
        lo, hi = self.lo.copy(), self.hi.copy()
        if positive:
            lo[:, axis] = np.maximum(lo[:, axis], 0)
        else:
            hi[:, axis] = np.minimum(hi[:, axis], 0)
        keep = np.all(lo < hi, axis=1)
        return self._replace(lo=lo[keep], hi=hi[keep], values=self.values[keep])

    def restrict_cone(self, axes: Iterable[int]) -> "PCFunction":
        out = self
        for a in axes:
            out = out.restrict_halfspace(a, True)
        return out

    def reflect(self, axes: Iterable[int]) -> "PCFunction":
        """F composed with the sign flip of the given axes."""
        axes = sorted(set(axes))
        if not axes:
            return self
        lo, hi = self.lo.copy(), self.hi.copy()
        lo[:, axes], hi[:, axes] = -self.hi[:, axes], -self.lo[:, axes]
        return self._replace(lo=lo, hi=hi, window=self.window.reflect(axes))

    def drop_zeros(self) -> "PCFunction":
        keep = np.asarray(self.values != 0, dtype=bool)
        return self._replace(lo=self.lo[keep], hi=self.hi[keep], values=self.values[keep])

    # -- integrals ----------------------------------------------------------------------------
    def integral(self):
        if len(self.lo) == 0:
            return Fraction(0) if self.is_exact else 0.0
        return _sum(self.values * self.cell_volumes(), self.is_exact)

    def l1(self):
        if len(self.lo) == 0:
            return Fraction(0) if self.is_exact else 0.0
        return _sum(np.abs(self.values) * self.cell_volumes(), self.is_exact)

    def l2_squared(self):
        if len(self.lo) == 0:
            return Fraction(0) if self.is_exact else 0.0
        mags = np.array([v * v for v in self.values], dtype=object) if self.is_exact else np.abs(self.values) ** 2
        return _sum(mags * self.cell_volumes(), self.is_exact)

    def l2_norm(self) -> float:
        return math.sqrt(float(self.l2_squared()))

    def mean(self, box: Box):
        return self.restrict(box).integral() / (box.volume if self.is_exact else float(box.volume))

    def inner(self, other: "PCFunction"):
        """Bilinear pairing: integral of self * other."""
        if len(self.lo) == 0 or len(other.lo) == 0:
            return Fraction(0) if (self.is_exact and other.is_exact) else 0.0
        level = max(self.level, other.level)
        a, b = self.at_level(level), other.at_level(level)
        exact = a.is_exact and b.is_exact
        edges = _edges([a, b])
        dense_a = _accumulate(a, edges, _coerce(a.values, "exact" if exact else "float"), self.config)
        dense_b = _accumulate(b, edges, _coerce(b.values, "exact" if exact else "float"), self.config)
        vol = _elementary_volumes(edges, level, exact)
        return _sum((dense_a * dense_b * vol).ravel(), exact)

    def equals(self, other: "PCFunction", tol: float = 0.0) -> bool:
        """Pointwise equality almost everywhere (exact unless tol > 0)."""
        diff = self - other
        if len(diff) == 0:
            return True
        if tol > 0 or not diff.is_exact:
            return bool(np.max(np.abs(_coerce(diff.values, "float"))) <= tol)
        return False

    def evaluate(self, points: np.ndarray):
        """Values at points (cells treated as half-open [lo, hi))."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        scale = float(1 << self.level)
        out = np.zeros(len(pts), dtype=object if self.is_exact else self.values.dtype)
        if self.is_exact:
            out[:] = Fraction(0)
        scaled = pts * scale
        for i in range(len(self.lo)):
            inside = np.all((scaled >= self.lo[i]) & (scaled < self.hi[i]), axis=1)
            out[inside] = self.values[i]
        return out

    def is_eta_symmetric(self, chamber: SignedChamber) -> bool:
        """F(gx) = eta(g) F(x) for every group element."""
        for flips, sign in chamber.images():
            if not self.reflect(flips).equals(self.scale(sign)):
                return False
        return True

    def __repr__(self) -> str:
        return f"PCFunction(d={self.dimension}, cells={len(self)}, level={self.level}, mode={self.value_mode}, window={self.window})"


def _sum(arr: np.ndarray, exact: bool):
    if exact:
        return sum(arr.tolist(), Fraction(0))
    return arr.sum().item() if arr.size else 0.0


def _join_windows(windows: Sequence[Box]) -> Box:
    lo = tuple(min(w.lo[i] for w in windows) for i in range(windows[0].dimension))
    hi = tuple(max(w.hi[i] for w in windows) for i in range(windows[0].dimension))
    return Box(lo, hi)


def _edges(functions: Sequence[PCFunction]) -> List[np.ndarray]:
    """Per-axis sorted distinct coordinates (functions share a level)."""
    d = functions[0].dimension
    return [np.unique(np.concatenate([np.concatenate([f.lo[:, a], f.hi[:, a]]) for f in functions])) for a in range(d)]


def _elementary_volumes(edges: List[np.ndarray], level: int, exact: bool) -> np.ndarray:
    widths = [np.diff(e) for e in edges]
    denom = 1 << level
    if exact:
        per_axis = [np.array([Fraction(int(w), denom) for w in ws], dtype=object) for ws in widths]
        vol = per_axis[0]
        for ws in per_axis[1:]:
            vol = np.multiply.outer(vol, ws)
        return vol
    per_axis = [ws.astype(float) / denom for ws in widths]
    vol = per_axis[0]
    for ws in per_axis[1:]:
        vol = np.multiply.outer(vol, ws)
    return vol


def _accumulate(f: PCFunction, edges: List[np.ndarray], values: np.ndarray, config: GridConfig) -> np.ndarray:
    """Dense array of sum of values over cells on the compressed grid."""
    shape = tuple(max(len(e) - 1, 0) for e in edges)
    size = math.prod(shape)
    if size > config.max_overlay_cells:
        raise NotFiniteOrTooLarge(f"Overlay needs {size} elementary cells, limit is {config.max_overlay_cells}")
    dense = np.zeros(shape, dtype=values.dtype)
    ilo = [np.searchsorted(edges[a], f.lo[:, a]) for a in range(len(edges))]
    ihi = [np.searchsorted(edges[a], f.hi[:, a]) for a in range(len(edges))]
    for i in range(len(values)):
        index = tuple(slice(int(ilo[a][i]), int(ihi[a][i])) for a in range(len(edges)))
        dense[index] += values[i]
    return dense


def _overlapping_pair(f: PCFunction, config: GridConfig, chunk: int = 512) -> Optional[Tuple[int, int]]:
    """First pair of overlapping cells, or None."""
    n = len(f.lo)
    edges = _edges([f])
    if math.prod(max(len(e) - 1, 0) for e in edges) <= config.max_overlay_cells:
        counts = _accumulate(f, edges, np.ones(n, dtype=np.int64), config)
        if counts.max() <= 1:
            return None
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        inter = np.all(np.maximum(f.lo[start:stop, None, :], f.lo[None]) < np.minimum(f.hi[start:stop, None, :], f.hi[None]), axis=2)
        inter[np.arange(stop - start), np.arange(start, stop)] = False
        if inter.any():
            i, j = np.argwhere(inter)[0]
            return int(start + i), int(j)
    return None


def overlay(terms: Sequence[Tuple[Number, PCFunction]], window: Optional[Box] = None,
            config: Optional[GridConfig] = None) -> PCFunction:
    """Normal form of sum_i c_i f_i: one cell per nonzero elementary box."""
    terms = [(c, f) for c, f in terms]
    if not terms:
        raise InvalidArgument("overlay needs at least one term")
    config = config or settings.grid
    window = window or _join_windows([f.window for _, f in terms])
    d = window.dimension
    exact = all(f.is_exact and _is_exact_value(c) for c, f in terms)
    mode = "exact" if exact else "float"
    level = max([window.level] + [f.level for _, f in terms])
    scaled = [f.at_level(level) for _, f in terms]
    nonempty = [(c, f) for (c, _), f in zip(terms, scaled) if len(f)]
    if not nonempty:
        return PCFunction.zero(d, window, mode)

    edges = _edges([f for _, f in nonempty])
    dense = None
    for c, f in nonempty:
        coef = _scalar(c, mode)
        vals = _coerce(f.values, mode) * coef
        part = _accumulate(f, edges, vals, config)
        dense = part if dense is None else dense + part
    mask = np.asarray(dense != 0, dtype=bool)
    idx = np.nonzero(mask)
    lo = np.stack([edges[a][idx[a]] for a in range(d)], axis=1) if idx[0].size else np.zeros((0, d), dtype=np.int64)
    hi = np.stack([edges[a][idx[a] + 1] for a in range(d)], axis=1) if idx[0].size else np.zeros((0, d), dtype=np.int64)
    values = dense[mask]
    if mode == "float" and values.dtype == complex and not np.any(values.imag):
        values = values.real.copy()
    out = PCFunction(level, lo, hi, values, window, mode, check=False, config=config)
    out._validate_window()
    return out


def concat(functions: Sequence[PCFunction], window: Optional[Box] = None, check: bool = False) -> PCFunction:
    """Disjoint union of cell lists (no merging)."""
    functions = list(functions)
    window = window or _join_windows([f.window for f in functions])
    level = max([window.level] + [f.level for f in functions])
    parts = [f.at_level(level) for f in functions]
    mode = _mode_of(*(f.value_mode for f in parts))
    values = np.concatenate([_coerce(f.values, mode) for f in parts]) if parts else np.empty(0)
    if mode == "exact":
        values = values.astype(object)
    lo = np.concatenate([f.lo for f in parts]) if parts else np.zeros((0, window.dimension))
    hi = np.concatenate([f.hi for f in parts]) if parts else np.zeros((0, window.dimension))
    return PCFunction(level, lo, hi, values, window, mode, check=check)


# ---------------------------------------------------------------------------
# Sampled functions
# ---------------------------------------------------------------------------

@dataclass
class SampledFunction:
    """Function known through an evaluator or lattice samples with spacing h."""

    window: Box
    h: float
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    points: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidArgument(f"Lattice spacing must be positive, got {self.h}")
        if self.evaluator is None and (self.points is None or self.values is None):
            raise InvalidArgument("SampledFunction needs an evaluator or lattice samples")
        if self.points is not None and self.values is not None and len(self.points) != len(self.values):
            raise InvalidArgument(f"{len(self.points)} points but {len(self.values)} values")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.evaluator is not None:
            return np.asarray(self.evaluator(pts))
        lookup = {tuple(np.rint(p / (self.h / 2)).astype(np.int64)): v for p, v in zip(self.points, self.values)}
        try:
            return np.array([lookup[tuple(np.rint(p / (self.h / 2)).astype(np.int64))] for p in pts])
        except KeyError as e:
            raise InvalidArgument(f"Point {e} is not a lattice sample")

    def lattice_l1(self) -> float:
        if self.values is None:
            raise InvalidArgument("No lattice samples to sum")
        return float(np.abs(self.values).sum() * self.h ** self.window.dimension)

    def max(self) -> float:
        return float(np.abs(self.values).max()) if self.values is not None and len(self.values) else 0.0


# ---------------------------------------------------------------------------
# eta-extension, eta-averaging, pairing
# ---------------------------------------------------------------------------

def check_chamber_support(f: PCFunction, chamber: SignedChamber) -> None:
    """Every cell of f must lie in the closed chamber."""
    for a in chamber.axes:
        if len(f) == 0:
            return
        straddle = np.nonzero((f.lo[:, a] < 0) & (f.hi[:, a] > 0))[0]
        if straddle.size:
            raise InvalidSupport(f"Cell {int(straddle[0])} ({f.cell_box(int(straddle[0]))}) straddles the wall x_{a} = 0")
        outside = np.nonzero(f.hi[:, a] <= 0)[0]
        if outside.size:
            raise InvalidSupport(f"Cell {int(outside[0])} ({f.cell_box(int(outside[0]))}) lies outside the chamber across x_{a} = 0")


def eta_extend(f: PCFunction, chamber: SignedChamber) -> PCFunction:
    """E_eta f(gx) = eta(g) f(x); cells are listed group element first."""
    chamber.require_orthogonal()
    if f.dimension != chamber.dimension:
        raise InvalidArgument(f"Function has dimension {f.dimension}, chamber has {chamber.dimension}")
    check_chamber_support(f, chamber)
    window = symmetric_hull(f.window, chamber.axes)
    images = [f.reflect(flips).scale(sign) for flips, sign in chamber.images()]
    out = concat(images, window=window)
    logger.debug(f"GRID: eta-extension of {len(f)} cells over {chamber.order} elements gives {len(out)} cells")
    return out


def eta_average(F: Union[PCFunction, SampledFunction], chamber: SignedChamber) -> Union[PCFunction, SampledFunction]:
    """A_eta F(y) = |W|^-1 sum_g eta(g) F(gy)."""
    if isinstance(F, SampledFunction):
        elements = chamber.elements
        order = chamber.order

        def averaged(points: np.ndarray) -> np.ndarray:
            pts = np.atleast_2d(points)
            total = None
            for g in elements:
                mat = g.matrix.astype(float)
                term = g.sign * np.asarray(F.evaluate(pts @ mat.T))
                total = term if total is None else total + term
            return total / order

        return SampledFunction(F.window, F.h, evaluator=averaged, metadata=dict(F.metadata, eta_average=True))

    chamber.require_orthogonal()
    window = symmetric_hull(F.window, chamber.axes)
    order = chamber.order
    weight = Fraction(1, order) if F.is_exact else 1.0 / order
    terms = [(sign * weight, F.reflect(flips)) for flips, sign in chamber.images()]
    return overlay(terms, window=window)


def restrict_to_chamber(F: PCFunction, chamber: SignedChamber) -> PCFunction:
    chamber.require_orthogonal()
    return F.restrict_cone(chamber.axes)


def pairing_identity_defect(f: PCFunction, F: PCFunction, chamber: SignedChamber):
    """|int E_eta f * F - |W| int f * A_eta F| (exactly 0 in exact mode)."""
    lhs = eta_extend(f, chamber).inner(F)
    rhs = chamber.order * f.inner(eta_average(F, chamber))
    return abs(lhs - rhs)
