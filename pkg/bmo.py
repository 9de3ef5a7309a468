"""BMO/bmo norms over discretized cube families.

Suprema over "all cubes" are taken over a ``CubeFamily``: dyadic cubes and
their one-third shifted grids inside a window. Family sweeps rasterize the
function once and evaluate every cube in float64; ``oscillation`` of a single
cube is exact.
"""

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from config import BmoConfig, settings
from errors import EmptyCube, InvalidArgument, InvalidInput, NotFiniteOrTooLarge
from geometry import SignedChamber
from gridfn import Box, DyadicCube, PCFunction, check_chamber_support, concat, eta_extend, symmetric_hull

MEAN = "mean"
BEST = "best"
MEAN_ABS = "mean_abs"
FLAVORS = ("BMO", "BMO*", "bmo", "bmo*")

ALL = "all"
SMALL = "small"
LARGE = "large"

GLOBAL = "global"
LOCAL = "local"

MAX_FAMILY_LEVEL = 30


def _floor_log2(x: Fraction) -> int:
    """Largest j with 2^j <= x (x > 0)."""
    x = Fraction(x)
    j = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** j > x:
        j -= 1
    while Fraction(2) ** (j + 1) <= x:
        j += 1
    return j


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _wall_distance(box: Box, axis: int) -> Fraction:
    return max(box.lo[axis], -box.hi[axis], Fraction(0))


# ---------------------------------------------------------------------------
# Cube families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubeFamily:
    """Dyadic cubes plus one-third shifted grids inside a window.

    Level m has side 2^-m and per-axis offsets {0, +s_m, -s_m} with
    s_m = round(2^(L-m)/3) * 2^-L. Levels run from ``min_level`` (side at most
    half the smallest window side) to ``max_level`` L. Filters: cube length
    against the breaking point, cubes inside the cone of ``inside`` axes, and
    cubes within ``kappa * l(Q)`` of one of the ``adjacent`` walls.
    """

    window: Box
    max_level: int = 7
    min_level: Optional[int] = None
    length: str = ALL
    break_point: Fraction = Fraction(1)
    inside: Tuple[int, ...] = ()
    adjacent: Optional[Tuple[int, ...]] = None
    kappa: Fraction = Fraction(0)

    def __post_init__(self):
        if self.max_level < 0:
            raise InvalidArgument(f"Family level must be >= 0, got {self.max_level}")
        if self.max_level > MAX_FAMILY_LEVEL:
            raise NotFiniteOrTooLarge(f"Family level {self.max_level} exceeds {MAX_FAMILY_LEVEL}")
        if not self.window.is_dyadic:
            raise InvalidArgument(f"Family window {self.window} is not dyadic")
        if self.length not in (ALL, SMALL, LARGE):
            raise InvalidArgument(f"Unknown length filter {self.length!r}")
        break_point = Fraction(self.break_point)
        kappa = Fraction(self.kappa)
        if break_point <= 0:
            raise InvalidArgument(f"Breaking point must be positive, got {break_point}")
        if kappa < 0:
            raise InvalidArgument(f"Adjacency slack must be >= 0, got {kappa}")
        object.__setattr__(self, "break_point", break_point)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "inside", tuple(sorted(set(self.inside))))
        if self.adjacent is not None:
            object.__setattr__(self, "adjacent", tuple(sorted(set(self.adjacent))))
        if self.min_level is None:
            half = min(self.window.sides) / 2
            object.__setattr__(self, "min_level", -_floor_log2(half))

    @classmethod
    def default(cls, window: Box, config: Optional[BmoConfig] = None, **overrides: Any) -> "CubeFamily":
        config = config or settings.bmo
        params = dict(max_level=config.max_level, break_point=Fraction(config.break_point),
                      kappa=Fraction(config.kappa))
        params.update(overrides)
        return cls(window=window, **params)

    def with_(self, **changes: Any) -> "CubeFamily":
        if "window" in changes and "min_level" not in changes:
            changes["min_level"] = None
        return replace(self, **changes)

    @property
    def dimension(self) -> int:
        return self.window.dimension

    def levels(self) -> range:
        return range(self.min_level, self.max_level + 1)

    @staticmethod
    def side(m: int) -> Fraction:
        return Fraction(2) ** -m

    def shift(self, m: int) -> Fraction:
        return Fraction(((1 << (self.max_level - m)) + 1) // 3, 1 << self.max_level)

    def offsets(self, m: int) -> Tuple[Fraction, ...]:
        s = self.shift(m)
        return (Fraction(0),) if s == 0 else (Fraction(0), s, -s)

    def accepts_side(self, side: Fraction) -> bool:
        if self.length == SMALL:
            return side < self.break_point
        if self.length == LARGE:
            return side >= self.break_point
        return True

    def _adjacent_ok(self, cube: Box) -> bool:
        if self.adjacent is None:
            return True
        return any(_wall_distance(cube, i) <= self.kappa * cube.side for i in self.adjacent)

    def _axis_corners(self, m: int, axis: int) -> List[Fraction]:
        side = self.side(m)
        lo, hi = self.window.lo[axis], self.window.hi[axis]
        corners = set()
        for o in self.offsets(m):
            first = math.ceil((lo - o) / side)
            last = math.floor((hi - o) / side) - 1
            corners.update(o + k * side for k in range(first, last + 1))
        if axis in self.inside:
            corners = {c for c in corners if c >= 0}
        return sorted(corners)

    def cubes(self) -> Iterator[DyadicCube]:
        """Every family cube, coarse levels first, corners in lexicographic order."""
        for m in self.levels():
            side = self.side(m)
            if not self.accepts_side(side):
                continue
            per_axis = [self._axis_corners(m, a) for a in range(self.dimension)]
            for corner in itertools.product(*per_axis):
                cube = DyadicCube.from_corner(corner, side)
                if self._adjacent_ok(cube):
                    yield cube

    def contains(self, cube: Box) -> bool:
        if cube.dimension != self.dimension or not cube.is_cube:
            return False
        side = cube.side
        m = -_floor_log2(side)
        if side != self.side(m) or m not in self.levels() or not self.accepts_side(side):
            return False
        if not self.window.contains_box(cube):
            return False
        offsets = self.offsets(m)
        if not all(any((lo - o) % side == 0 for o in offsets) for lo in cube.lo):
            return False
        if any(cube.lo[i] < 0 for i in self.inside):
            return False
        return self._adjacent_ok(cube)

    def first_cube(self) -> Optional[DyadicCube]:
        """Lexicographically smallest cube descriptor of the family (None when empty)."""
        for m in reversed(self.levels()):
            side = self.side(m)
            if not self.accepts_side(side):
                continue
            per_axis = [self._axis_corners(m, a) for a in range(self.dimension)]
            if any(not c for c in per_axis):
                continue
            if self.adjacent is None:
                return DyadicCube.from_corner([c[0] for c in per_axis], side)
            candidates = []
            for i in self.adjacent:
                near = [c for c in per_axis[i] if max(c, -(c + side), Fraction(0)) <= self.kappa * side]
                if near:
                    candidates.append(tuple(near[0] if a == i else per_axis[a][0] for a in range(self.dimension)))
            if candidates:
                return DyadicCube.from_corner(min(candidates), side)
        return None

    def is_empty(self) -> bool:
        return self.first_cube() is None

    def metadata(self) -> Dict[str, Any]:
        return {
            "window": self.window.describe(),
            "max_level": self.max_level,
            "min_level": self.min_level,
            "shifts": "0,+-round(2^(L-m)/3)*2^-L",
            "length": self.length,
            "break_point": str(self.break_point),
            "inside": list(self.inside),
            "adjacent": None if self.adjacent is None else list(self.adjacent),
            "kappa": str(self.kappa),
        }


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class BmoReport(BaseModel):
    """Family supremum of a BMO-type norm."""

    value: float = Field(..., ge=0, description="Norm value over the family")
    flavor: str = Field(..., description="BMO, BMO*, bmo or bmo*")
    centering: str = Field(..., description="Oscillation centering actually used")
    break_point: Optional[str] = Field(default=None, description="Breaking point a of the local flavors")
    oscillation_part: float = Field(default=0.0, description="Supremum of the oscillation term")
    mean_part: float = Field(default=0.0, description="Supremum of mean |F| over cubes with l(Q) >= a")
    argmax: Optional[Dict[str, List[str]]] = Field(default=None, description="Cube attaining the oscillation term")
    argmax_large: Optional[Dict[str, List[str]]] = Field(default=None, description="Cube attaining the mean term")
    family: Dict[str, Any] = Field(default_factory=dict, description="Family metadata")
    modulo_constants: bool = Field(default=False, description="Value is defined modulo constants")
    eta: Optional[List[int]] = Field(default=None, description="Eta bits when computed through an eta-extension")
    warnings: List[str] = Field(default_factory=list)


class IntrinsicReport(BaseModel):
    """Intrinsic characterization of a chamber function: oscillation term M1 and wall term M2."""

    m1: float = Field(..., ge=0)
    m2: float = Field(..., ge=0)
    mode: str
    eta: List[int]
    kappa: str
    break_point: Optional[str] = None
    argmax_m1: Optional[Dict[str, List[str]]] = None
    argmax_m2: Optional[Dict[str, List[str]]] = None
    family: Dict[str, Any] = Field(default_factory=dict)

    @property
    def pair(self) -> Tuple[float, float]:
        return self.m1, self.m2

    @property
    def total(self) -> float:
        return self.m1 + self.m2


# ---------------------------------------------------------------------------
# Single-cube oscillation (exact)
# ---------------------------------------------------------------------------

def _exact_weighted_median(values: Sequence, weights: Sequence):
    pairs = sorted((v, w) for v, w in zip(values, weights) if w > 0)
    half = sum((w for _, w in pairs), 0 * pairs[0][1]) / 2
    acc = 0
    for v, w in pairs:
        acc += w
        if acc >= half:
            return v
    return pairs[-1][0]


def weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Lower weighted median: first sorted value whose cumulative weight reaches half the total."""
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    k = int(np.searchsorted(cum, 0.5 * cum[-1], side="left"))
    return values[order][min(k, len(values) - 1)]


def oscillation(F: PCFunction, Q: Box, centering: str = MEAN):
    """(1/|Q|) int_Q |F - c|, c the mean (mean) or a weighted median (best).

    Exact for exact-mode functions. The region of Q where F has no cell counts
    as value zero.
    """
    if centering not in (MEAN, BEST):
        raise InvalidArgument(f"Unknown centering {centering!r}")
    if F.window.intersect(Q) is None:
        raise EmptyCube(f"Cube {Q} does not meet the window {F.window}")
    if centering == BEST and F.is_complex:
        raise InvalidArgument("Best centering needs a real-valued function")
    part = F.restrict(Q).drop_zeros()
    exact = F.is_exact
    volume = Q.volume if exact else float(Q.volume)
    values = list(part.values)
    weights = list(part.cell_volumes())
    zero = volume - sum(weights, 0 * volume)
    if not exact:
        zero = max(zero, 0.0)
    if centering == MEAN:
        c = sum((v * w for v, w in zip(values, weights)), 0 * volume) / volume
    else:
        c = _exact_weighted_median(values + [0 * volume], weights + [zero])
    total = sum((abs(v - c) * w for v, w in zip(values, weights)), 0 * volume) + abs(c) * zero
    return total / volume


# ---------------------------------------------------------------------------
# Rasterized family sweeps
# ---------------------------------------------------------------------------

@dataclass
class _Raster:
    values: np.ndarray
    origin: np.ndarray
    level: int

    @property
    def stop(self) -> np.ndarray:
        return self.origin + np.array(self.values.shape, dtype=np.int64)


def rasterize(F: PCFunction, level: int, config: Optional[BmoConfig] = None) -> Optional[_Raster]:
    """Dense array of F over its support box at the given dyadic level (None for F = 0)."""
    config = config or settings.bmo
    f = F.drop_zeros()
    if len(f) == 0:
        return None
    if level < f.resolution():
        raise InvalidArgument(f"Raster level {level} is coarser than the function resolution {f.resolution()}")
    f = f.at_level(level)
    origin = f.lo.min(axis=0)
    shape = tuple(int(x) for x in f.hi.max(axis=0) - origin)
    size = math.prod(shape)
    if size > config.max_grid_cells:
        raise NotFiniteOrTooLarge(f"Raster of {size} cells at level {level} exceeds {config.max_grid_cells}")
    dtype = complex if F.is_complex else float
    values = np.zeros(shape, dtype=dtype)
    data = np.asarray(f.values).astype(dtype)
    lo, hi = f.lo - origin, f.hi - origin
    unit = np.all(hi - lo == 1, axis=1)
    if unit.any():
        values[tuple(lo[unit].T)] = data[unit]
    for i in np.nonzero(~unit)[0]:
        values[tuple(slice(int(a), int(b)) for a, b in zip(lo[i], hi[i]))] = data[i]
    return _Raster(values, origin, level)


@dataclass
class _Argmax:
    """Running maximum with the lexicographically smallest cube on ties."""

    value: float = 0.0
    cube: Optional[DyadicCube] = None
    evaluated: int = 0

    def consider(self, value: float, cube: DyadicCube) -> None:
        if value < self.value or value <= 0:
            return
        if value > self.value or self.cube is None or cube.key() < self.cube.key():
            self.value, self.cube = float(value), cube

    def offer(self, value: float, corner: Sequence[int], side: int, level: int) -> None:
        if value < self.value or value <= 0:
            return
        scale = 1 << level
        self.consider(value, DyadicCube.from_corner([Fraction(int(c), scale) for c in corner], Fraction(side, scale)))

    def absorb(self, other: "_Argmax") -> None:
        self.evaluated += other.evaluated
        if other.cube is not None:
            self.consider(other.value, other.cube)


def _block_stats(blocks: np.ndarray, statistic: str) -> np.ndarray:
    if statistic == MEAN_ABS:
        return np.abs(blocks).mean(axis=1)
    if statistic == MEAN:
        center = blocks.mean(axis=1, keepdims=True)
    else:
        center = np.median(blocks, axis=1, keepdims=True)
    return np.abs(blocks - center).mean(axis=1)


def _cube_stat(raster: _Raster, corner: Sequence[int], side: int, statistic: str) -> float:
    lo = np.maximum(np.asarray(corner), raster.origin)
    hi = np.minimum(np.asarray(corner) + side, raster.stop)
    if np.any(lo >= hi):
        return 0.0
    index = tuple(slice(int(a), int(b)) for a, b in zip(lo - raster.origin, hi - raster.origin))
    S = raster.values[index].ravel()
    total = float(side ** raster.values.ndim)
    zero = total - S.size
    if statistic == MEAN_ABS:
        return float(np.abs(S).sum() / total)
    if statistic == MEAN:
        c = S.sum() / total
    else:
        c = weighted_median(np.append(S, 0.0), np.append(np.ones(S.size), zero))
    return float((np.abs(S - c).sum() + zero * abs(c)) / total)


def _extract(raster: _Raster, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    out = np.zeros(tuple(int(x) for x in stop - start), dtype=raster.values.dtype)
    lo = np.maximum(start, raster.origin)
    hi = np.minimum(stop, raster.stop)
    if np.all(lo < hi):
        dst = tuple(slice(int(a), int(b)) for a, b in zip(lo - start, hi - start))
        src = tuple(slice(int(a), int(b)) for a, b in zip(lo - raster.origin, hi - raster.origin))
        out[dst] = raster.values[src]
    return out


def _adjacency_mask(family: CubeFamily, corners: List[np.ndarray], side: int) -> Optional[np.ndarray]:
    if family.adjacent is None:
        return None
    shape = tuple(len(c) for c in corners)
    mask = np.zeros(shape, dtype=bool)
    bound = math.floor(family.kappa * side)
    for i in family.adjacent:
        c = corners[i]
        dist = np.maximum(np.maximum(c, -(c + side)), 0)
        view = [1] * len(corners)
        view[i] = len(c)
        mask |= np.broadcast_to((dist <= bound).reshape(view), shape)
    return mask


def _sweep_grid(raster: _Raster, family: CubeFamily, statistic: str, ranges: Sequence[Tuple[int, int, int]],
                side: int, best: _Argmax, config: BmoConfig) -> None:
    """Evaluate the cubes of one shifted grid that meet the raster."""
    d = raster.values.ndim
    corners = [o + side * np.arange(k0, k1 + 1, dtype=np.int64) for o, k0, k1 in ranges]
    counts = tuple(len(c) for c in corners)
    mask = _adjacency_mask(family, corners, side)
    if mask is not None and not mask.any():
        return
    start = np.array([c[0] for c in corners], dtype=np.int64)
    stop = np.array([c[-1] + side for c in corners], dtype=np.int64)
    padded = math.prod(counts) * side ** d
    limit = min(config.max_grid_cells, max(8 * raster.values.size, 1 << 16))
    if padded <= limit:
        block = _extract(raster, start, stop)
        interleaved = []
        for n in counts:
            interleaved.extend([n, side])
        block = block.reshape(interleaved).transpose(list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2)))
        stats = _block_stats(block.reshape(math.prod(counts), side ** d), statistic).reshape(counts)
        if mask is not None:
            stats = np.where(mask, stats, -1.0)
        best.evaluated += int(mask.sum()) if mask is not None else stats.size
        top = float(stats.max())
        if top > 0 and top >= best.value:
            idx = np.unravel_index(int(np.flatnonzero(stats == top)[0]), counts)
            best.offer(top, [corners[a][idx[a]] for a in range(d)], side, raster.level)
        return
    for idx in np.ndindex(*counts):
        if mask is not None and not mask[idx]:
            continue
        corner = [corners[a][idx[a]] for a in range(d)]
        best.evaluated += 1
        best.offer(_cube_stat(raster, corner, side, statistic), corner, side, raster.level)


def _sweep(raster: Optional[_Raster], family: CubeFamily, statistic: str, config: BmoConfig) -> _Argmax:
    """Maximum of a per-cube statistic over the family cubes meeting the raster."""
    best = _Argmax()
    if raster is None:
        return best
    R = raster.level
    scale = 1 << R
    wlo = [int(x * scale) for x in family.window.lo]
    whi = [int(x * scale) for x in family.window.hi]
    for m in family.levels():
        side_frac = family.side(m)
        if not family.accepts_side(side_frac):
            continue
        side = int(side_frac * scale)
        offsets = [int(o * scale) for o in family.offsets(m)]
        per_axis = []
        for a in range(raster.values.ndim):
            ranges = []
            for o in offsets:
                k0 = max(_ceil_div(wlo[a] - o, side), (int(raster.origin[a]) - o) // side)
                k1 = min((whi[a] - o) // side - 1, _ceil_div(int(raster.stop[a]) - o, side) - 1)
                if a in family.inside:
                    k0 = max(k0, _ceil_div(-o, side))
                if k0 <= k1:
                    ranges.append((o, k0, k1))
            per_axis.append(ranges)
        if any(not r for r in per_axis):
            continue
        for combo in itertools.product(*per_axis):
            _sweep_grid(raster, family, statistic, combo, side, best, config)
        logger.debug(f"BMO: level {m} swept, running max {best.value:.6g}")
    return best


def _raster_level(F: PCFunction, family: CubeFamily) -> int:
    return max(F.resolution(), family.max_level, family.window.level)


def _argmax_or_first(best: _Argmax, family: CubeFamily) -> Optional[Dict[str, List[str]]]:
    cube = best.cube if best.cube is not None else family.first_cube()
    return None if cube is None else cube.describe()


def _check_flavor(flavor: str) -> str:
    if flavor not in FLAVORS:
        raise InvalidArgument(f"Unknown flavor {flavor!r}; expected one of {', '.join(FLAVORS)}")
    return flavor


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _norm_from_raster(raster: Optional[_Raster], family: CubeFamily, flavor: str, is_complex: bool,
                      config: BmoConfig) -> BmoReport:
    warnings = []
    centering = BEST if flavor.endswith("*") else MEAN
    if centering == BEST and is_complex:
        warnings.append("Complex payload: best centering replaced by mean centering (within a factor 2)")
        logger.warning("BMO: complex payload, falling back to mean centering")
        centering = MEAN

    if flavor in ("BMO", "BMO*"):
        fam = family.with_(length=ALL)
        small = _sweep(raster, fam, centering, config)
        value = small.value
        argmax, argmax_large, large = _argmax_or_first(small, fam), None, _Argmax()
        break_point = None
    else:
        fam_small, fam_large = family.with_(length=SMALL), family.with_(length=LARGE)
        small = _sweep(raster, fam_small, centering, config)
        large = _sweep(raster, fam_large, MEAN_ABS, config)
        value = small.value + large.value
        argmax, argmax_large = _argmax_or_first(small, fam_small), _argmax_or_first(large, fam_large)
        break_point = str(family.break_point)

    meta = family.metadata()
    meta.update(resolution=None if raster is None else raster.level, cubes_evaluated=small.evaluated + large.evaluated)
    return BmoReport(
        value=value,
        flavor=flavor,
        centering=centering,
        break_point=break_point,
        oscillation_part=small.value,
        mean_part=large.value,
        argmax=argmax,
        argmax_large=argmax_large,
        family=meta,
        modulo_constants=flavor in ("BMO", "BMO*"),
        warnings=warnings,
    )


def bmo_norm(F: PCFunction, family: Optional[CubeFamily] = None, flavor: str = "BMO*",
             break_point: Optional[Any] = None, config: Optional[BmoConfig] = None) -> BmoReport:
    """Family supremum of the BMO (mean), BMO* (best constant), bmo or bmo* norm of F.

    The bmo flavors add the oscillation supremum over cubes with l(Q) < a and
    the supremum of the mean of |F| over cubes with l(Q) >= a.
    """
    config = config or settings.bmo
    flavor = _check_flavor(flavor)
    family = family or CubeFamily.default(F.window, config)
    if break_point is not None:
        family = family.with_(break_point=Fraction(break_point))
    if family.dimension != F.dimension:
        raise InvalidArgument(f"Family has dimension {family.dimension}, function has {F.dimension}")
    if family.is_empty():
        raise InvalidArgument("Cube family is empty")
    raster = rasterize(F, _raster_level(F, family), config)
    report = _norm_from_raster(raster, family, flavor, F.is_complex, config)
    logger.debug(f"BMO: {flavor} = {report.value:.6g} over {report.family['cubes_evaluated']} cubes")
    return report


def eta_bmo_norm(f: PCFunction, chamber: SignedChamber, family: Optional[CubeFamily] = None,
                 flavor: str = "BMO", break_point: Optional[Any] = None,
                 config: Optional[BmoConfig] = None) -> BmoReport:
    """Norm of the eta-extension of a chamber function over a group-symmetric window."""
    chamber.require_orthogonal()
    E = eta_extend(f, chamber)
    family = family or CubeFamily.default(E.window, config)
    window = symmetric_hull(family.window, chamber.axes)
    if window != family.window:
        family = family.with_(window=window)
    report = bmo_norm(E, family, flavor, break_point, config)
    return report.model_copy(update={
        "modulo_constants": flavor in ("BMO", "BMO*") and not chamber.minus_axes,
        "eta": list(chamber.eta_bits),
    })


def intrinsic_M1_M2(f: PCFunction, chamber: SignedChamber, family: Optional[CubeFamily] = None,
                    mode: str = GLOBAL, break_point: Optional[Any] = None,
                    config: Optional[BmoConfig] = None) -> IntrinsicReport:
    """M1: mean oscillation over family cubes inside the chamber. M2: mean |f| over cubes
    adjacent to a minus wall; local mode splits at the breaking point and adds
    the mean of |f| over large cubes to M2."""
    config = config or settings.bmo
    chamber.require_orthogonal()
    check_chamber_support(f, chamber)
    if mode not in (GLOBAL, LOCAL):
        raise InvalidArgument(f"Unknown mode {mode!r}")
    base = (family or CubeFamily.default(f.window, config)).with_(inside=chamber.axes, adjacent=None, length=ALL)
    if break_point is not None:
        base = base.with_(break_point=Fraction(break_point))
    raster = rasterize(f, _raster_level(f, base), config)
    minus = chamber.minus_axes
    adjacent = base.with_(adjacent=minus)

    if mode == GLOBAL:
        m1_family, m2_family = base, adjacent
        m1 = _sweep(raster, base, MEAN, config)
        m2 = _sweep(raster, adjacent, MEAN_ABS, config) if minus else _Argmax()
    else:
        m1_family, m2_family = base.with_(length=SMALL), base.with_(length=LARGE)
        m1 = _sweep(raster, m1_family, MEAN, config)
        m2 = _sweep(raster, m2_family, MEAN_ABS, config)
        if minus:
            near = adjacent.with_(length=SMALL)
            m2.absorb(_sweep(raster, near, MEAN_ABS, config))
            if m2.cube is None and m2_family.is_empty():
                m2_family = near

    argmax_m2 = None
    if minus or mode == LOCAL:
        argmax_m2 = _argmax_or_first(m2, m2_family)
    report = IntrinsicReport(
        m1=m1.value,
        m2=m2.value,
        mode=mode,
        eta=list(chamber.eta_bits),
        kappa=str(base.kappa),
        break_point=str(base.break_point) if mode == LOCAL else None,
        argmax_m1=_argmax_or_first(m1, m1_family),
        argmax_m2=argmax_m2,
        family=base.metadata(),
    )
    logger.debug(f"BMO: intrinsic {mode} M1={report.m1:.6g} M2={report.m2:.6g} eta={report.eta}")
    return report


# ---------------------------------------------------------------------------
# Reflection lemmas
# ---------------------------------------------------------------------------

def even_extend_bmo(F: PCFunction, axis: int) -> PCFunction:
    """Even extension of F restricted to {x_axis > 0}."""
    if not 0 <= axis < F.dimension:
        raise InvalidArgument(f"Axis {axis} is outside 0..{F.dimension - 1}")
    positive = F.restrict_halfspace(axis, True)
    window = symmetric_hull(F.window, [axis])
    return concat([positive, positive.reflect([axis])], window=window)


def _odd_tolerance(F: PCFunction) -> float:
    if F.is_exact or len(F) == 0:
        return 0.0
    return settings.atoms.float_tol * max(1.0, float(np.max(np.abs(F.values))))


def odd_restrict_bmo(F: PCFunction, axis: int, family: Optional[CubeFamily] = None,
                     config: Optional[BmoConfig] = None) -> PCFunction:
    """F times the indicator of {x_axis > 0}, for F odd across x_axis = 0."""
    if not 0 <= axis < F.dimension:
        raise InvalidArgument(f"Axis {axis} is outside 0..{F.dimension - 1}")
    if not F.reflect([axis]).equals(-F, _odd_tolerance(F)):
        raise InvalidInput(f"Function is not odd across x_{axis} = 0")
    out = F.restrict_halfspace(axis, True)
    if family is not None:
        before = bmo_norm(F, family, "BMO*", config=config).value
        after = bmo_norm(out, family, "BMO*", config=config).value
        ratio = after / before if before > 0 else (0.0 if after == 0 else math.inf)
        logger.info(f"BMO: odd restriction across x_{axis}: norm ratio {ratio:.4g}, "
                    f"reference bound {1 + 2 ** (F.dimension - 1)}")
    return out


def odd_truncation(f: PCFunction, chamber: SignedChamber, family: Optional[CubeFamily] = None,
                   config: Optional[BmoConfig] = None) -> Tuple[PCFunction, float]:
    """(E_eta f) restricted to the positive side of every minus wall, and the measured
    ratio of its BMO* norm to the eta-BMO* norm of f."""
    E = eta_extend(f, chamber)
    family = family or CubeFamily.default(E.window, config)
    window = symmetric_hull(family.window, chamber.axes)
    if window != family.window:
        family = family.with_(window=window)
    F = E
    for axis in chamber.minus_axes:
        F = odd_restrict_bmo(F, axis)
    before = bmo_norm(E, family, "BMO*", config=config).value
    after = bmo_norm(F, family, "BMO*", config=config).value
    ratio = after / before if before > 0 else (0.0 if after == 0 else math.inf)
    logger.info(f"BMO: truncation across minus walls {list(chamber.minus_axes)}: constant {ratio:.4g}")
    return F, ratio


# ---------------------------------------------------------------------------
# Sample functions
# ---------------------------------------------------------------------------

def _grid_center(center: Optional[Sequence], d: int, level: int) -> np.ndarray:
    center = [Fraction(0)] * d if center is None else [Fraction(c) for c in center]
    if len(center) != d:
        raise InvalidArgument(f"Center has {len(center)} coordinates, expected {d}")
    units = [c * (1 << level) for c in center]
    if any(u.denominator != 1 for u in units):
        raise InvalidArgument(f"Center {[str(c) for c in center]} is not on the level-{level} grid")
    return np.array([int(u) for u in units], dtype=np.int64)


def _sample_window(window: Optional[Box], d: int, level: int) -> Box:
    window = window or Box.window(settings.grid.window_half, d)
    if window.level > level:
        raise InvalidArgument(f"Window {window} is finer than sample level {level}")
    return window


def _window_units(window: Box, level: int) -> Tuple[np.ndarray, np.ndarray]:
    scale = 1 << level
    return (np.array([int(x * scale) for x in window.lo], dtype=np.int64),
            np.array([int(x * scale) for x in window.hi], dtype=np.int64))


def _log_cap(level: int) -> float:
    return (level + 1) * math.log(2.0)


def _radial_log(level: int, d: int, center: Optional[Sequence], window: Optional[Box]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Box]:
    window = _sample_window(window, d, level)
    scale = 1 << level
    c = _grid_center(center, d, level)
    wlo, whi = _window_units(window, level)
    ranges = [np.arange(max(c[a] - scale, wlo[a]), min(c[a] + scale, whi[a]), dtype=np.int64) for a in range(d)]
    count = math.prod(len(r) for r in ranges)
    if count > settings.grid.max_overlay_cells:
        raise NotFiniteOrTooLarge(f"Sample needs {count} cells, limit is {settings.grid.max_overlay_cells}")
    if count == 0:
        return np.zeros((0, d), dtype=np.int64), np.zeros(0), c, window
    mesh = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
    r = np.linalg.norm((mesh + 0.5 - c) / scale, axis=1)
    touching = np.all((mesh <= c) & (mesh + 1 >= c), axis=1)
    values = np.where(touching, _log_cap(level), np.maximum(-np.log(r), 0.0))
    return mesh, values, c, window


def psi_sample(level: int, d: int = 1, center: Optional[Sequence] = None, window: Optional[Box] = None) -> PCFunction:
    """max(log(1/|x - x0|), 0) sampled at cell centers."""
    mesh, values, _, window = _radial_log(level, d, center, window)
    keep = values > 0
    return PCFunction(level, mesh[keep], mesh[keep] + 1, values[keep], window, "float", check=False)


def broken_log_sample(level: int, d: int = 1, axis: Optional[int] = None, center: Optional[Sequence] = None,
                      window: Optional[Box] = None) -> PCFunction:
    """psi(x - x0) * sgn(x_axis - x0_axis): the truncated log broken along a hyperplane."""
    axis = d - 1 if axis is None else axis
    if not 0 <= axis < d:
        raise InvalidArgument(f"Axis {axis} is outside 0..{d - 1}")
    mesh, values, c, window = _radial_log(level, d, center, window)
    sign = np.where(mesh[:, axis] >= c[axis], 1.0, -1.0) if len(mesh) else np.zeros(0)
    values = values * sign
    keep = values != 0
    return PCFunction(level, mesh[keep], mesh[keep] + 1, values[keep], window, "float", check=False)


def phi_sample(level: int, d: int = 1, axis: int = 0, window: Optional[Box] = None) -> PCFunction:
    """sgn(t) 1_[1,3](|t|) log(1/||t| - 2|) along one axis, [-1, 1] in the others."""
    if not 0 <= axis < d:
        raise InvalidArgument(f"Axis {axis} is outside 0..{d - 1}")
    window = _sample_window(window, d, level)
    scale = 1 << level
    support = Box(tuple(Fraction(-3) if a == axis else Fraction(-1) for a in range(d)),
                  tuple(Fraction(3) if a == axis else Fraction(1) for a in range(d)))
    if not window.contains_box(support):
        raise InvalidArgument(f"Window {window} does not contain the support {support}")
    k = np.arange(0, 3 * scale, dtype=np.int64)
    t = (k + 0.5) / scale
    touching = (k == 2 * scale) | (k + 1 == 2 * scale)
    inner = (t > 1) & (t < 3)
    magnitude = np.where(touching, _log_cap(level), -np.log(np.abs(t - 2.0)))
    keep = inner & (magnitude > 0)
    k, magnitude = k[keep], magnitude[keep]
    ks = np.concatenate([k, -k - 1])
    values = np.concatenate([magnitude, -magnitude])
    lo = np.full((len(ks), d), -scale, dtype=np.int64)
    hi = np.full((len(ks), d), scale, dtype=np.int64)
    lo[:, axis], hi[:, axis] = ks, ks + 1
    return PCFunction(level, lo, hi, values, window, "float", check=False)


SAMPLES = {
    "psi": psi_sample,
    "phi": phi_sample,
    "broken_log": broken_log_sample,
}


def sample_metadata(name: str, level: int, d: int = 1, **params: Any) -> Dict[str, Any]:
    return {
        "name": name,
        "level": level,
        "dimension": d,
        "values": "cell centers",
        "singular_cells": "cells touching the singular set take the value at distance 2^-(level+1)",
        "cap": _log_cap(level),
        "params": {k: (str(v) if isinstance(v, (Fraction, Box)) else v) for k, v in params.items()},
    }


def sample_functions(name: str, level: int, d: int = 1, **params: Any) -> PCFunction:
    """Sample function by name: psi, phi or broken_log."""
    if name not in SAMPLES:
        raise InvalidArgument(f"Unknown sample {name!r}; expected one of {', '.join(SAMPLES)}")
    if level < 0:
        raise InvalidArgument(f"Sample level must be >= 0, got {level}")
    f = SAMPLES[name](level, d, **params)
    logger.debug(f"BMO: sample {sample_metadata(name, level, d, **params)} with {len(f)} cells")
    return f
