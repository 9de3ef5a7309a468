"""Atoms, atom lists and the decomposition pipelines for orthogonal chambers.

Every stored atom is exactly valid for its kind: normalisations that would
need irrational factors use the smallest dyadic rational above the true factor
(``dyadic_sqrt_ceil``) and fold it into the coefficient.
"""

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from loguru import logger

from config import AtomsConfig, settings
from errors import InvalidArgument, InvalidGeometry, InvalidInput
from geometry import EtaVector
from gridfn import Box, DyadicCube, PCFunction, concat, overlay
from validator import AtomKind, AtomValidator, ValidationMode

GLOBAL = "global"
LOCAL = "local"
MAX_WHITNEY_LEVEL = 48


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Atom:
    """Payload on a supporting cube with its wall sets and kind."""

    payload: PCFunction
    cube: DyadicCube
    I0: Tuple[int, ...]
    I1: Tuple[int, ...]
    kind: AtomKind

    @property
    def side(self) -> Fraction:
        return self.cube.side

    @property
    def dimension(self) -> int:
        return self.cube.dimension

    def reflect(self, axes: Iterable[int]) -> "Atom":
        axes = tuple(axes)
        return replace(self, payload=self.payload.reflect(axes), cube=self.cube.reflect(axes))


Term = Tuple[Any, Atom]


@dataclass
class AtomList:
    """Coefficient-atom pairs with an l1 accumulator and an optional residual."""

    terms: List[Term]
    dimension: int
    eta: Optional[EtaVector] = None
    mode: str = GLOBAL
    residual: Optional[PCFunction] = None
    ledger: List[Dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def atoms(self) -> List[Atom]:
        return [a for _, a in self.terms]

    @property
    def coefficients(self) -> List[Any]:
        return [c for c, _ in self.terms]

    @property
    def l1(self):
        return sum((abs(c) for c, _ in self.terms), Fraction(0))

    @property
    def tail_l1(self):
        return Fraction(0) if self.residual is None else self.residual.l1()

    def header(self) -> Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        """Common (I0, I1) of every atom; InvalidArgument when they differ."""
        headers = {(a.I0, a.I1) for _, a in self.terms}
        if len(headers) > 1:
            raise InvalidArgument(f"Atoms carry different wall sets: {sorted(headers)}")
        return headers.pop() if headers else None

    def kinds(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for _, a in self.terms:
            counts[a.kind.value] = counts.get(a.kind.value, 0) + 1
        return counts

    def with_terms(self, terms: List[Term], **changes) -> "AtomList":
        data = dict(terms=terms, dimension=self.dimension, eta=self.eta, mode=self.mode,
                    residual=self.residual, ledger=list(self.ledger))
        data.update(changes)
        return AtomList(**data)


def reconstruct(atom_list: AtomList, window: Optional[Box] = None) -> PCFunction:
    """sum_i c_i a_i plus the residual."""
    parts = [(c, a.payload) for c, a in atom_list.terms]
    if atom_list.residual is not None:
        parts.append((1, atom_list.residual))
    if not parts:
        return PCFunction.zero(atom_list.dimension, window)
    return overlay(parts, window=window)


# ---------------------------------------------------------------------------
# Exact dyadic normalisation
# ---------------------------------------------------------------------------

def dyadic_sqrt_ceil(x, bits: Optional[int] = None) -> Fraction:
    """Smallest r / 2^bits with (r / 2^bits)^2 >= x."""
    bits = settings.atoms.sqrt_bits if bits is None else bits
    x = Fraction(x)
    if x < 0:
        raise InvalidArgument(f"Square root of negative value {x}")
    scaled = x * (4 ** bits)
    target = -(-scaled.numerator // scaled.denominator)
    r = math.isqrt(target)
    if r * r < target:
        r += 1
    return Fraction(r, 1 << bits)


def normalising_coefficient(G: PCFunction, cube: Box, bits: Optional[int] = None):
    """Coefficient c with ||G / c||_2^2 |Q| <= 1 (dyadic in exact mode)."""
    if G.is_exact:
        return dyadic_sqrt_ceil(G.l2_squared() * cube.volume, bits)
    return math.sqrt(float(G.l2_squared()) * float(cube.volume))


def fit_atom(G: PCFunction, cube: DyadicCube, I0: Sequence[int], I1: Sequence[int], kind: AtomKind,
             bits: Optional[int] = None) -> Optional[Term]:
    """(c, atom) with c * atom.payload = G, or None when G vanishes."""
    G = G.drop_zeros()
    if len(G) == 0:
        return None
    c = normalising_coefficient(G, cube, bits)
    inverse = 1 / c if G.is_exact else 1.0 / c
    return c, Atom(G.scale(inverse), cube, tuple(sorted(I0)), tuple(sorted(I1)), kind)


def _ceil_log2(x: Fraction) -> int:
    """Smallest integer c with 2^c >= x."""
    x = Fraction(x)
    c = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** c < x:
        c += 1
    while Fraction(2) ** (c - 1) >= x:
        c -= 1
    return c


# ---------------------------------------------------------------------------
# Reflection transforms of classical atom lists
# ---------------------------------------------------------------------------

def even_restrict(atom_list: AtomList, axis: int) -> AtomList:
    """Map each atom a to (a + a o sigma_e) / 2 restricted to x_e > 0.

    The input must reconstruct to a function even across x_e = 0.
    """
    F = reconstruct(atom_list)
    if not F.reflect([axis]).equals(F):
        raise InvalidInput(f"Input is not even across x_{axis} = 0")

    terms: List[Term] = []
    half = Fraction(1, 2)
    for c, a in atom_list.terms:
        Q = a.cube
        walls = tuple(sorted(set(a.I0) | {axis}))
        if Q.lo[axis] >= 0:
            new_payload, new_cube = a.payload.scale(half), Q
        elif Q.hi[axis] <= 0:
            new_payload, new_cube = a.payload.reflect([axis]).scale(half), Q.reflect([axis])
        else:
            combined = overlay([(half, a.payload), (half, a.payload.reflect([axis]))], window=a.payload.window)
            new_payload = combined.restrict_halfspace(axis, True)
            new_cube = Q.translate([(-Q.lo[axis] if i == axis else 0) for i in range(Q.dimension)])
        if len(new_payload.drop_zeros()) == 0:
            continue
        terms.append((c, Atom(new_payload, new_cube, walls, (), a.kind)))
    logger.debug(f"ATOMS: even restriction across axis {axis}: {len(atom_list)} -> {len(terms)} atoms")
    return atom_list.with_terms(terms)


def odd_extend(atom_list: AtomList, axis: int, bits: Optional[int] = None) -> AtomList:
    """Map each atom a to a 1_+ - (a 1_+) o sigma_e."""
    terms: List[Term] = []
    for c, a in atom_list.terms:
        Q = a.cube
        walls = tuple(i for i in a.I0 if i != axis)
        if Q.hi[axis] <= 0:
            continue
        if Q.lo[axis] >= 0:
            terms.append((c, Atom(a.payload, Q, walls, (), a.kind)))
            terms.append((-c, Atom(a.payload.reflect([axis]), Q.reflect([axis]), walls, (), a.kind)))
            continue
        upper = a.payload.restrict_halfspace(axis, True)
        odd = concat([upper, -upper.reflect([axis])], window=a.payload.window)
        s = max(2 * Q.hi[axis], Q.side)
        lo = tuple(-s / 2 if i == axis else Q.lo[i] for i in range(Q.dimension))
        cube = DyadicCube.from_corner(lo, s)
        fitted = fit_atom(odd, cube, walls, (), a.kind, bits)
        if fitted is None:
            continue
        scale, atom = fitted
        terms.append((c * scale, atom))
    logger.debug(f"ATOMS: odd extension across axis {axis}: {len(atom_list)} -> {len(terms)} atoms")
    return atom_list.with_terms(terms)


# ---------------------------------------------------------------------------
# Whitney splitting
# ---------------------------------------------------------------------------

def whitney_m0(side: Fraction) -> int:
    """m0 with 2^(-m0-1) < side <= 2^(-m0)."""
    return -_ceil_log2(Fraction(side))


def whitney_cells(Q: Box, axis: int, walls: Iterable[int] = (), max_level: Optional[int] = None,
                  refine_walls: Iterable[int] = (), config: Optional[AtomsConfig] = None) -> List[DyadicCube]:
    """Whitney cubes D with l(D) = dist(D, {x_axis = 0}) = 2^-m meeting Q, levels m0..max_level.

    Cubes whose double crosses one of ``refine_walls`` are replaced by their
    children (recursively, keeping those that meet Q).
    """
    config = config or settings.atoms
    walls = set(walls)
    refine_walls = set(refine_walls)
    if axis in walls:
        raise InvalidGeometry(f"Split axis {axis} is already a wall")
    if any(Q.lo[i] < 0 for i in walls):
        raise InvalidGeometry(f"Cube {Q} is not inside the ambient cone")
    if Q.hi[axis] <= 0:
        raise InvalidGeometry(f"Cube {Q} does not meet x_{axis} > 0")
    side = Q.side
    if Q.double().lo[axis] >= 0:
        raise InvalidGeometry(f"2Q of {Q} already lies in x_{axis} > 0")

    m0 = whitney_m0(side)
    top = max(m0, Q.level) + config.extra_levels if max_level is None else max_level
    d = Q.dimension
    cells: List[DyadicCube] = []
    for m in range(m0, top + 1):
        size = Fraction(1, 2 ** m) if m >= 0 else Fraction(2 ** (-m))
        if not (2 * size > Q.lo[axis] and size < Q.hi[axis]):
            continue
        ranges = []
        for j in range(d):
            if j == axis:
                ranges.append([size])
                continue
            first = math.floor(Q.lo[j] / size)
            last = math.ceil(Q.hi[j] / size)
            ranges.append([k * size for k in range(first, last)])
        for corner in _product(ranges):
            cube = DyadicCube.from_corner(corner, size)
            cells.extend(_refine(cube, Q, refine_walls, 0))
    return cells


def _product(ranges: List[List[Fraction]]) -> Iterable[Tuple[Fraction, ...]]:
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product(ranges[1:]):
            yield (head,) + tail


def _refine(cube: DyadicCube, Q: Box, refine_walls: set, depth: int) -> List[DyadicCube]:
    if cube.intersect(Q) is None:
        return []
    double = cube.double()
    if all(double.lo[i] >= 0 for i in refine_walls):
        return [cube]
    if depth >= MAX_WHITNEY_LEVEL:
        raise InvalidGeometry(f"Cube {Q} touches a wall it must keep its double away from")
    half = cube.side / 2
    out: List[DyadicCube] = []
    for offsets in _product([[0, half]] * cube.dimension):
        child = DyadicCube.from_corner(tuple(a + o for a, o in zip(cube.lo, offsets)), half)
        out.extend(_refine(child, Q, refine_walls, depth + 1))
    return out


def whitney_counts(cells: Sequence[DyadicCube]) -> Dict[int, int]:
    """Number of cells per level m (side 2^-m)."""
    counts: Dict[int, int] = {}
    for D in cells:
        m = -_ceil_log2(D.side)
        counts[m] = counts.get(m, 0) + 1
    return dict(sorted(counts.items()))


def whitney_covering_defect(Q: Box, axis: int, cells: Sequence[DyadicCube], max_level: int) -> Fraction:
    """|Q cap {x_axis > 2^-max_level}| minus the total measure of the pieces D cap Q."""
    strip = Fraction(1, 2 ** max_level) if max_level >= 0 else Fraction(2 ** (-max_level))
    upper = Q.with_axis(axis, max(Q.lo[axis], strip), Q.hi[axis]) if Q.hi[axis] > strip else None
    target = upper.volume if upper is not None else Fraction(0)
    covered = sum((piece.volume for piece in (D.intersect(Q) for D in cells) if piece is not None), Fraction(0))
    return target - covered


def split_bound(d: int) -> Fraction:
    """Square of the per-atom Whitney coefficient bound, 2^d (2^d - 1)."""
    return Fraction(2 ** d * (2 ** d - 1))


def halfspace_split(atom_list: AtomList, axis: int, mode: str = GLOBAL,
                    config: Optional[AtomsConfig] = None) -> AtomList:
    """Split (I0, I1, A/B)-atoms across x_axis = 0 into (I0, I1 + {axis}, A/B)-atoms."""
    config = config or settings.atoms
    if mode not in (GLOBAL, LOCAL):
        raise InvalidArgument(f"Unknown mode {mode!r}")
    header = atom_list.header()
    I0, I1 = header if header is not None else ((), ())
    if axis in I0 or axis in I1:
        raise InvalidArgument(f"Axis {axis} is already in I0={list(I0)} or I1={list(I1)}")
    if not 0 <= axis < atom_list.dimension:
        raise InvalidArgument(f"Axis {axis} outside 0..{atom_list.dimension - 1}")

    new_I1 = tuple(sorted(set(I1) | {axis}))
    b_kind = AtomKind.LOCAL_B if mode == LOCAL else AtomKind.B
    bound = split_bound(atom_list.dimension)
    terms: List[Term] = []
    residual = atom_list.residual.restrict_halfspace(axis, True) if atom_list.residual is not None else None
    cases = {"inside": 0, "near": 0, "whitney": 0, "dropped": 0}
    max_whitney_sum = Fraction(0)

    for c, a in atom_list.terms:
        Q = a.cube
        l = Q.side
        lo_n = Q.lo[axis]
        if Q.hi[axis] <= 0:
            cases["dropped"] += 1
            continue
        if mode == LOCAL and l > 1:
            # large local atoms need no cancellation: restrict and lift the cube
            piece = a.payload.restrict_halfspace(axis, True)
            if len(piece.drop_zeros()) == 0:
                cases["dropped"] += 1
                continue
            cube = Q if lo_n >= 0 else Q.translate([(-lo_n if i == axis else 0) for i in range(Q.dimension)])
            terms.append((c, Atom(piece, cube, I0, new_I1, AtomKind.LOCAL_B)))
            cases["inside" if lo_n >= 0 else "near"] += 1
            continue
        if lo_n >= 3 * l / 2:
            terms.append((c, replace(a, I1=new_I1)))
            cases["inside"] += 1
            continue
        if lo_n >= l / 2:
            terms.append((c, replace(a, I1=new_I1, kind=b_kind)))
            cases["near"] += 1
            continue

        cases["whitney"] += 1
        pieces, strip, total = _whitney_pieces(a, axis, I0, I1, new_I1, b_kind, mode, bound, config)
        max_whitney_sum = max(max_whitney_sum, total)
        terms.extend((c * tau, atom) for tau, atom in pieces)
        if strip is not None:
            residual = strip.scale(c) if residual is None else overlay([(1, residual), (c, strip)], window=residual.window)

    out = atom_list.with_terms(terms, residual=residual)
    entry = {
        "step": "halfspace_split",
        "axis": axis,
        "mode": mode,
        "l1_in": atom_list.l1,
        "l1_out": out.l1,
        "cases": cases,
        "max_whitney_sum": max_whitney_sum,
        "tail_l1": out.tail_l1,
    }
    out.ledger.append(entry)
    logger.info(
        f"ATOMS: split across axis {axis} ({mode}): l1 {float(entry['l1_in']):.6g} -> {float(entry['l1_out']):.6g}, "
        f"cases {cases}, tail {float(entry['tail_l1']):.3g}"
    )
    return out


def _whitney_pieces(a: Atom, axis: int, I0, I1, new_I1, b_kind: AtomKind, mode: str, bound: Fraction,
                    config: AtomsConfig):
    """B-atom pieces of a straddling atom, plus the strip below the last level."""
    Q = a.cube
    G = a.payload.restrict_halfspace(axis, True)
    walls = tuple(sorted(set(I0) | set(I1)))
    m0 = whitney_m0(Q.side)
    top = max(m0, Q.level, a.payload.resolution()) + config.extra_levels
    exact = G.is_exact

    while True:
        cells = whitney_cells(Q, axis, walls, top, refine_walls=I1, config=config)
        pieces: List[Term] = []
        total = Fraction(0) if exact else 0.0
        for D in cells:
            fitted = fit_atom(G.restrict(D), D, I0, new_I1, b_kind, config.sqrt_bits)
            if fitted is not None:
                pieces.append(fitted)
                total += fitted[0]
        height = Fraction(1, 2 ** top)
        strip = G.restrict(Q.with_axis(axis, Fraction(0), min(height, Q.hi[axis]))).drop_zeros()
        if len(strip) == 0:
            return pieces, None, total
        if mode == GLOBAL:
            return pieces, strip, total
        # local: the strip becomes a B-atom on a large cube resting on the wall
        big = Fraction(2) ** (max(_ceil_log2(Q.side), 0) + 1)
        big_cube = DyadicCube.from_corner(tuple(Fraction(0) if i == axis else Q.lo[i] for i in range(Q.dimension)), big)
        fitted = fit_atom(strip, big_cube, I0, new_I1, AtomKind.LOCAL_B, config.sqrt_bits)
        grand = total + fitted[0]
        within = grand * grand <= bound if exact else float(grand) ** 2 <= float(bound) * (1 + config.float_tol)
        if within or top >= MAX_WHITNEY_LEVEL:
            pieces.append(fitted)
            return pieces, None, grand
        top += 1


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def _chamber_axes(dimension: int, eta: EtaVector) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    axes = list(range(dimension - eta.k, dimension))
    plus = tuple(a for a, b in zip(axes, eta.bits) if b == 0)
    minus = tuple(a for a, b in zip(axes, eta.bits) if b == 1)
    return plus, minus


def decomposition_bound(d: int, k: int) -> float:
    """(1 + sqrt(2^d (2^d - 1)))^k."""
    return (1.0 + math.sqrt(2 ** d * (2 ** d - 1))) ** k


def decompose_eta(atom_list: AtomList, eta: EtaVector, mode: str = GLOBAL,
                  config: Optional[AtomsConfig] = None) -> AtomList:
    """Classical atoms supported in the plus-axes cone -> (eta, A/B)-atoms."""
    config = config or settings.atoms
    eta = EtaVector.parse(eta)
    d = atom_list.dimension
    if eta.k > d:
        raise InvalidArgument(f"eta has {eta.k} entries but the dimension is {d}")
    plus, minus = _chamber_axes(d, eta)

    terms: List[Term] = []
    for i, (c, a) in enumerate(atom_list.terms):
        if not a.kind.is_classical:
            raise InvalidInput(f"Expected classical atoms, got kind {a.kind.value}", index=i)
        if mode == GLOBAL and a.kind.is_local:
            raise InvalidInput("Local classical atom in a global decomposition", index=i)
        if any(a.cube.lo[j] < 0 for j in plus):
            raise InvalidInput(f"Atom cube {a.cube} is not inside the plus-axes cone {list(plus)}", index=i)
        if mode == GLOBAL:
            kind = AtomKind.A
        else:
            kind = AtomKind.LOCAL_A if a.cube.side <= 1 else AtomKind.LOCAL_B
        terms.append((c, Atom(a.payload, a.cube, plus, (), kind)))

    current = AtomList(terms, d, eta, mode, atom_list.residual, list(atom_list.ledger))
    l1_in = atom_list.l1
    for axis in minus:
        current = halfspace_split(current, axis, mode, config)

    ratio = float(current.l1 / l1_in) if l1_in else 0.0
    bound = decomposition_bound(d, eta.k)
    current.ledger.append({
        "step": "decompose_eta",
        "eta": str(eta),
        "mode": mode,
        "l1_in": l1_in,
        "l1_out": current.l1,
        "ratio": ratio,
        "bound": bound,
        "tail_l1": current.tail_l1,
    })
    logger.info(f"ATOMS: decomposition eta={eta} ({mode}): l1 ratio {ratio:.6g} (bound {bound:.6g}), "
                f"{len(current)} atoms {current.kinds()}")
    return current


def _images(axes: Sequence[int], minus: set) -> List[Tuple[int, Tuple[int, ...]]]:
    """(sign, flipped axes) for every subset of axes; sign counts minus flips."""
    out = []
    for mask in range(1 << len(axes)):
        flips = tuple(a for j, a in enumerate(axes) if mask >> j & 1)
        sign = -1 if sum(1 for a in flips if a in minus) % 2 else 1
        out.append((sign, flips))
    return out


def extend_atoms(atom_list: AtomList, eta: EtaVector, across: str = "all",
                 config: Optional[AtomsConfig] = None) -> AtomList:
    """(eta, A/B)-atoms -> classical atoms of E_eta f (or of its part over the plus cone)."""
    config = config or settings.atoms
    eta = EtaVector.parse(eta)
    if across not in ("all", "minus"):
        raise InvalidArgument(f"across must be 'all' or 'minus', got {across!r}")
    d = atom_list.dimension
    plus, minus = _chamber_axes(d, eta)
    minus_set = set(minus)
    mode = atom_list.mode
    validator = AtomValidator(ValidationMode(mode))
    classical = AtomKind.LOCAL_CLASSICAL if mode == LOCAL else AtomKind.CLASSICAL
    out_I0 = plus if across == "minus" else ()
    reflect_axes = list(minus) if across == "minus" else sorted(plus + minus)

    terms: List[Term] = []
    scales: List[Dict[str, Any]] = []
    for i, (c, a) in enumerate(atom_list.terms):
        report = validator.validate_atom(a)
        if not report["valid"]:
            raise InvalidInput(f"Invalid {a.kind.value}-atom: {report['errors'][0]}", index=i)
        if a.I0 != plus or a.I1 != minus:
            raise InvalidInput(f"Atom walls I0={list(a.I0)}, I1={list(a.I1)} do not match eta={eta}", index=i)

        quad = a.cube.quadruple()
        J = [j for j in minus if quad.lo[j] < 0]
        no_cancellation = a.kind == AtomKind.LOCAL_B and a.cube.side > 1
        if a.kind in (AtomKind.A, AtomKind.LOCAL_A) or no_cancellation or not J:
            for sign, flips in _images(reflect_axes, minus_set):
                img = a.reflect(flips)
                terms.append((c * sign, Atom(img.payload, img.cube, out_I0, (), classical)))
            continue

        # B-atom: odd extension over J, then the remaining reflections
        parts = []
        for sign, flips in _images(J, minus_set):
            parts.append(a.payload.reflect(flips).scale(sign))
        b_J = concat(parts)
        l = a.cube.side
        s = max(2 * (a.cube.lo[j] + l) for j in J)
        corner = tuple(-s / 2 if j in J else a.cube.lo[j] for j in range(d))
        Q_J = DyadicCube.from_corner(corner, s)
        mean = b_J.integral()
        ratio = Q_J.volume / a.cube.volume
        if (mean != 0) if b_J.is_exact else abs(mean) > config.float_tol * max(1.0, float(b_J.l1())):
            raise InvalidInput(f"Odd extension over J={J} does not have mean zero ({mean})", index=i)
        if not (3 ** d <= ratio < 5 ** d):
            raise InvalidInput(f"|Q_J|/|Q| = {ratio} outside [3^d, 5^d)", index=i)
        fitted = fit_atom(b_J, Q_J, (), (), classical, config.sqrt_bits)
        if fitted is None:
            continue
        scale, atom_J = fitted
        rest = [j for j in reflect_axes if j not in J]
        count = 0
        for sign, flips in _images(rest, minus_set):
            img = atom_J.reflect(flips)
            terms.append((c * scale * sign, Atom(img.payload, img.cube, out_I0, (), classical)))
            count += 1
        scales.append({"index": i, "J": J, "ratio": ratio, "scale": scale, "images": count, "mean": mean})

    residual = None
    if atom_list.residual is not None:
        images = []
        for sign, flips in _images(reflect_axes, minus_set):
            images.append(atom_list.residual.reflect(flips).scale(sign))
        residual = concat(images)

    out = AtomList(terms, d, eta, mode, residual, list(atom_list.ledger))
    out.ledger.append({
        "step": "extend_atoms",
        "across": across,
        "l1_in": atom_list.l1,
        "l1_out": out.l1,
        "b_scales": scales,
    })
    logger.info(f"ATOMS: extension eta={eta} across {across}: {len(atom_list)} -> {len(out)} atoms, "
                f"{len(scales)} B-atom composites")
    return out


def recube_local(atom: Atom, bits: Optional[int] = None) -> Term:
    """View an atom with ||a||_2 <= 1 on a small cube as a multiple of a local B-atom on a side-2 cube."""
    if atom.cube.side >= 1:
        raise InvalidArgument(f"Re-cubing needs a cube side below 1, got {atom.cube.side}")
    if atom.payload.l2_squared() > 1:
        raise InvalidArgument("Re-cubing needs ||a||_2 <= 1")
    big = DyadicCube.from_corner(atom.cube.lo, 2)
    fitted = fit_atom(atom.payload, big, atom.I0, atom.I1, AtomKind.LOCAL_B, bits)
    if fitted is None:
        raise InvalidArgument("Cannot re-cube a zero atom")
    return fitted
