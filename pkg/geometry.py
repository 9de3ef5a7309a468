"""Root systems, reflection groups, simple roots, Weyl chambers and wall signs.

Two arithmetic modes are supported. When every root coordinate is an integer,
a Fraction or a ``"p/q"`` string the system is *exact*: vectors and matrices
are numpy object arrays of ``Fraction`` and every comparison is exact.
Otherwise the system is *float* and comparisons use ``GeometryConfig``
tolerances.
"""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import linprog

from config import GeometryConfig, settings
from errors import (
    DegenerateBasepoint,
    InvalidArgument,
    NotAHomomorphism,
    NotFiniteOrTooLarge,
    UnsupportedGeometry,
)


# ---------------------------------------------------------------------------
# Scalars and vectors
# ---------------------------------------------------------------------------

def to_exact(value) -> Optional[Fraction]:
    """Return value as a Fraction, or None when it is a non-exact number."""
    if isinstance(value, bool):
        raise InvalidArgument(f"Boolean is not a coordinate: {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidArgument(f"Not a rational literal: {value!r}")
    return None


def as_vector(values: Iterable, exact: Optional[bool] = None) -> np.ndarray:
    """Coerce a coordinate list to an exact (object) or float vector.

    ``exact=None`` picks exact mode iff every entry is exact.
    """
    items = list(values.tolist() if isinstance(values, np.ndarray) else values)
    if not items:
        raise InvalidArgument("Empty vector")
    converted = [to_exact(v) for v in items]
    all_exact = all(c is not None for c in converted)
    if exact is None:
        exact = all_exact
    if exact:
        if not all_exact:
            raise InvalidArgument(f"Vector {items} has non-rational coordinates")
        return np.array(converted, dtype=object)
    try:
        return np.array([float(c) if c is not None else float(v) for c, v in zip(converted, items)], dtype=float)
    except (TypeError, ValueError):
        raise InvalidArgument(f"Vector {items} has non-numeric coordinates")


def is_exact_array(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _dot(a: np.ndarray, b: np.ndarray):
    return sum((x * y for x, y in zip(a, b)), Fraction(0)) if is_exact_array(a) and is_exact_array(b) else float(np.dot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def _is_zero(v: np.ndarray, tol: float) -> bool:
    if is_exact_array(v):
        return all(x == 0 for x in v)
    return float(np.linalg.norm(v)) <= tol


def reflect(alpha: Sequence, x: Sequence) -> np.ndarray:
    """Reflect x across the hyperplane orthogonal to alpha."""
    a = alpha if isinstance(alpha, np.ndarray) else as_vector(alpha)
    v = x if isinstance(x, np.ndarray) else as_vector(x)
    if len(a) != len(v):
        raise InvalidArgument(f"Dimension mismatch: alpha has {len(a)} coordinates, x has {len(v)}")
    exact = is_exact_array(a) and is_exact_array(v)
    if not exact:
        a = np.asarray(a, dtype=float)
        v = np.asarray(v, dtype=float)
    if _is_zero(a, 0.0):
        raise InvalidArgument("Cannot reflect across a zero vector")
    coef = 2 * _dot(a, v) / _dot(a, a)
    return v - coef * a


def reflection_matrix(alpha: np.ndarray) -> np.ndarray:
    """Matrix of the reflection sigma_alpha."""
    d = len(alpha)
    if is_exact_array(alpha):
        norm2 = _dot(alpha, alpha)
        m = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                m[i, j] = Fraction(int(i == j)) - 2 * alpha[i] * alpha[j] / norm2
        return m
    a = np.asarray(alpha, dtype=float)
    return np.eye(d) - 2.0 * np.outer(a, a) / float(a @ a)


def _identity(d: int, exact: bool) -> np.ndarray:
    if exact:
        m = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                m[i, j] = Fraction(int(i == j))
        return m
    return np.eye(d)


# ---------------------------------------------------------------------------
# Root systems
# ---------------------------------------------------------------------------

class RootSystem:
    """A reduced root system: nonzero roots closed under their own reflections."""

    def __init__(self, roots: Sequence[Sequence], dimension: Optional[int] = None,
                 config: Optional[GeometryConfig] = None):
        self.config = config or settings.geometry
        if not roots:
            raise InvalidArgument("Root system needs at least one root")
        raw = [list(r) for r in roots]
        exact = all(to_exact(c) is not None for r in raw for c in r)
        vectors = [as_vector(r, exact=exact) for r in raw]
        dims = {len(v) for v in vectors}
        if len(dims) != 1:
            raise InvalidArgument(f"Roots have inconsistent dimensions {sorted(dims)}")
        d = dims.pop()
        if dimension is not None and dimension != d:
            raise InvalidArgument(f"Declared dimension {dimension} but roots have {d} coordinates")

        self.dimension = d
        self.exact = exact
        self.roots = np.array(vectors, dtype=object if exact else float).reshape(len(vectors), d)
        self._index: Dict[tuple, int] = {}
        self._validate()

    # -- construction helpers ------------------------------------------------
    @classmethod
    def orthogonal(cls, d: int, k: int, config: Optional[GeometryConfig] = None) -> "RootSystem":
        """R_k = {+-e_i : i = d-k, ..., d-1} in R^d."""
        if not 1 <= k <= d:
            raise InvalidArgument(f"Need 1 <= k <= d, got d={d}, k={k}")
        roots = []
        for sign in (1, -1):
            for i in range(d - k, d):
                v = [0] * d
                v[i] = sign
                roots.append(v)
        return cls(roots, d, config)

    @classmethod
    def a2(cls, config: Optional[GeometryConfig] = None) -> "RootSystem":
        """Planar A2: three root pairs at mutual angle 60 degrees (float mode)."""
        s = float(np.sqrt(3.0)) / 2.0
        base = [[1.0, 0.0], [0.5, s], [-0.5, s]]
        return cls(base + [[-a, -b] for a, b in base], 2, config)

    # -- lookup ----------------------------------------------------------------
    def key(self, v: np.ndarray) -> tuple:
        if self.exact:
            return tuple(v)
        return tuple(np.rint(np.asarray(v, dtype=float) / self.config.key_tol).astype(np.int64).tolist())

    def find_root(self, v: np.ndarray) -> Optional[int]:
        """Index of the root equal to v, or None."""
        if self.exact and is_exact_array(v):
            return self._index.get(tuple(v))
        diffs = np.linalg.norm(self.roots.astype(float) - np.asarray(v, dtype=float), axis=1)
        i = int(np.argmin(diffs))
        scale = max(1.0, float(np.linalg.norm(np.asarray(v, dtype=float))))
        return i if diffs[i] <= self.config.float_tol * 1e3 * scale else None

    def __len__(self) -> int:
        return len(self.roots)

    def reflection(self, i: int) -> np.ndarray:
        return reflection_matrix(self.roots[i])

    def generator_indices(self) -> List[int]:
        """One root index per +-pair, first occurrence wins."""
        chosen, seen = [], set()
        for i in range(len(self.roots)):
            if i in seen:
                continue
            j = self.find_root(-self.roots[i])
            seen.update({i, j})
            chosen.append(i)
        return chosen

    # -- validation --------------------------------------------------------------
    def _validate(self) -> None:
        tol = self.config.float_tol
        for i, alpha in enumerate(self.roots):
            if _is_zero(alpha, tol):
                raise InvalidArgument(f"Root {i} is zero")
        if self.exact:
            for i, alpha in enumerate(self.roots):
                key = tuple(alpha)
                if key in self._index:
                    raise InvalidArgument(f"Duplicate root {list(map(str, alpha))}")
                self._index[key] = i

        floats = self.roots.astype(float)
        norms = np.linalg.norm(floats, axis=1)
        for i in range(len(self.roots)):
            for j in range(i + 1, len(self.roots)):
                if self.exact:
                    parallel = _exact_parallel_factor(self.roots[i], self.roots[j])
                    if parallel is not None and parallel not in (1, -1):
                        raise InvalidArgument(f"Root system is not reduced: roots {i} and {j} are parallel with factor {parallel}")
                    if parallel == 1:
                        raise InvalidArgument(f"Duplicate roots {i} and {j}")
                else:
                    cosine = float(floats[i] @ floats[j]) / (norms[i] * norms[j])
                    if abs(abs(cosine) - 1.0) <= 1e3 * tol:
                        if abs(norms[i] - norms[j]) > 1e3 * tol * max(norms[i], norms[j]):
                            raise InvalidArgument(f"Root system is not reduced: roots {i} and {j} are parallel")
                        if cosine > 0:
                            raise InvalidArgument(f"Duplicate roots {i} and {j}")

        for i, alpha in enumerate(self.roots):
            for j, beta in enumerate(self.roots):
                image = reflect(alpha, beta)
                if self.find_root(image) is None:
                    raise InvalidArgument(f"Root system is not closed: reflecting root {j} in root {i} leaves the set")


def _exact_parallel_factor(a: np.ndarray, b: np.ndarray) -> Optional[Fraction]:
    """c with b = c*a, or None when not parallel."""
    pivot = next(i for i, x in enumerate(a) if x != 0)
    c = b[pivot] / a[pivot]
    if all(bb == c * aa for aa, bb in zip(a, b)):
        return c
    return None


# ---------------------------------------------------------------------------
# Groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    """An orthogonal matrix with one shortest word and (optionally) its sign."""

    matrix: np.ndarray
    word: Tuple[int, ...] = ()
    sign: int = 1

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    @property
    def flips(self) -> Tuple[int, ...]:
        """Axes negated by a diagonal sign matrix."""
        diag = np.diagonal(self.matrix)
        off = self.matrix - np.diag(diag)
        if any(x != 0 for x in off.ravel()):
            raise UnsupportedGeometry("Group element is not a diagonal sign matrix")
        return tuple(i for i, x in enumerate(diag) if x < 0)

    def is_orthogonal(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        prod = m.T @ m
        if is_exact_array(m):
            d = m.shape[0]
            return all(prod[i, j] == int(i == j) for i in range(d) for j in range(d))
        return bool(np.allclose(prod, np.eye(m.shape[0]), atol=tol, rtol=0.0))


class ReflectionGroup:
    """Finite group of matrices with an identity-first element list."""

    def __init__(self, system: RootSystem, elements: List[GroupElement], generators: List[int]):
        self.system = system
        self.elements = elements
        self.generators = generators
        self._by_key = {system_key(system, g.matrix): i for i, g in enumerate(elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self.elements)

    def __getitem__(self, i: int) -> GroupElement:
        return self.elements[i]

    def index_of(self, matrix: np.ndarray) -> Optional[int]:
        return self._by_key.get(system_key(self.system, matrix))

    def find(self, matrix: np.ndarray) -> Optional[GroupElement]:
        i = self.index_of(matrix)
        return None if i is None else self.elements[i]


def system_key(system: RootSystem, matrix: np.ndarray) -> tuple:
    if system.exact:
        return tuple(matrix.ravel())
    return tuple(np.rint(np.asarray(matrix, dtype=float).ravel() / system.config.key_tol).astype(np.int64).tolist())


def _closure(system: RootSystem, generator_mats: List[np.ndarray], cap: int,
             signs: Optional[Sequence[int]] = None) -> Tuple[List[GroupElement], Dict[tuple, int]]:
    """Breadth-first closure under right multiplication by the generators.

    With ``signs`` the sign of every element is propagated along words and
    every Cayley-graph edge is checked for consistency.
    """
    d = system.dimension
    identity = _identity(d, system.exact)
    elements = [GroupElement(identity, (), 1)]
    index = {system_key(system, identity): 0}
    queue = deque([0])
    while queue:
        gi = queue.popleft()
        g = elements[gi]
        for s, mat in enumerate(generator_mats):
            prod = g.matrix @ mat
            key = system_key(system, prod)
            sign = g.sign * (signs[s] if signs is not None else 1)
            hi = index.get(key)
            if hi is None:
                if len(elements) >= cap:
                    raise NotFiniteOrTooLarge(f"Group closure exceeded the cap of {cap} elements")
                index[key] = len(elements)
                elements.append(GroupElement(prod, g.word + (s,), sign))
                queue.append(len(elements) - 1)
            elif signs is not None and elements[hi].sign != sign:
                raise NotAHomomorphism(
                    f"Wall signs conflict: word {list(elements[hi].word)} has sign {elements[hi].sign} "
                    f"but word {list(g.word + (s,))} gives {sign}",
                    words=[elements[hi].word, g.word + (s,)],
                )
    return elements, index


def generate_group(system: RootSystem, config: Optional[GeometryConfig] = None) -> ReflectionGroup:
    """All elements of W(R), generated by one reflection per root pair."""
    config = config or system.config
    gens = system.generator_indices()
    mats = [system.reflection(i) for i in gens]
    elements, _ = _closure(system, mats, config.closure_cap)
    logger.info(f"GROUP: closure of {len(gens)} reflections in dimension {system.dimension} gives order {len(elements)}")
    return ReflectionGroup(system, elements, gens)


# ---------------------------------------------------------------------------
# Chambers
# ---------------------------------------------------------------------------

def positive_and_simple(system: RootSystem, x0: Sequence) -> Tuple[np.ndarray, np.ndarray]:
    """Positive roots selected by x0 and the simple system inside them."""
    exact = system.exact and all(to_exact(c) is not None for c in (x0.tolist() if isinstance(x0, np.ndarray) else x0))
    base = as_vector(x0, exact=exact)
    if len(base) != system.dimension:
        raise InvalidArgument(f"Basepoint has {len(base)} coordinates, system has dimension {system.dimension}")
    roots = system.roots if exact else system.roots.astype(float)
    products = [_dot(alpha, base) for alpha in roots]
    tol = system.config.float_tol * max(1.0, float(np.linalg.norm(base.astype(float))))
    for i, p in enumerate(products):
        if (p == 0) if exact else abs(p) <= tol:
            raise DegenerateBasepoint(f"Basepoint lies on the reflection hyperplane of root {i}")

    positive_idx = [i for i, p in enumerate(products) if p > 0]
    positive = system.roots[positive_idx]
    if system.exact:
        simple_idx = [i for i in positive_idx if _permutes_other_positives(system, i, set(positive_idx))]
    else:
        simple_idx = [i for i in positive_idx if _not_nonnegative_combination(system.roots.astype(float), i, positive_idx)]

    simple = system.roots[simple_idx]
    rank = np.linalg.matrix_rank(system.roots.astype(float))
    if len(simple_idx) != rank or np.linalg.matrix_rank(simple.astype(float)) != rank:
        raise InvalidArgument(f"Simple system has {len(simple_idx)} roots but the root span has rank {rank}")
    logger.debug(f"GROUP: {len(positive_idx)} positive roots, {len(simple_idx)} simple roots")
    return positive, simple


def _permutes_other_positives(system: RootSystem, i: int, positive: set) -> bool:
    """alpha is simple iff sigma_alpha maps R+ minus {alpha} into R+."""
    alpha = system.roots[i]
    for j in positive:
        if j == i:
            continue
        image = system.find_root(reflect(alpha, system.roots[j]))
        if image not in positive:
            return False
    return True


def _not_nonnegative_combination(roots: np.ndarray, i: int, positive_idx: List[int]) -> bool:
    """Feasibility test: is roots[i] a nonnegative combination of the others?"""
    others = [j for j in positive_idx if j != i]
    if not others:
        return True
    a_eq = roots[others].T
    result = linprog(np.zeros(len(others)), A_eq=a_eq, b_eq=roots[i], bounds=[(0, None)] * len(others), method="highs")
    return result.status != 0


@dataclass
class SignedChamber:
    """Chamber C+ with simple roots, wall signs and the signed group."""

    system: RootSystem
    basepoint: np.ndarray
    positive_roots: np.ndarray
    simple_roots: np.ndarray
    eta_on_generators: Tuple[int, ...]
    elements: List[GroupElement]
    _index: Dict[tuple, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {system_key(self.system, g.matrix): i for i, g in enumerate(self.elements)}

    @property
    def dimension(self) -> int:
        return self.system.dimension

    @property
    def order(self) -> int:
        return len(self.elements)

    def element(self, matrix: np.ndarray) -> Optional[GroupElement]:
        i = self._index.get(system_key(self.system, matrix))
        return None if i is None else self.elements[i]

    def _products(self, x: Sequence) -> list:
        v = as_vector(x, exact=self.system.exact and all(to_exact(c) is not None for c in list(x)))
        if len(v) != self.dimension:
            raise InvalidArgument(f"Point has {len(v)} coordinates, chamber has dimension {self.dimension}")
        return [_dot(a, v) if is_exact_array(v) else _dot(np.asarray(a, dtype=float), v) for a in self.simple_roots]

    def contains(self, x: Sequence) -> bool:
        return all(p > 0 for p in self._products(x))

    def walls_containing(self, x: Sequence) -> List[int]:
        """Indices of the walls through x when x lies in the closed chamber."""
        products = self._products(x)
        tol = 0 if self.system.exact else self.system.config.float_tol
        if any(p < -tol for p in products):
            return []
        return [i for i, p in enumerate(products) if abs(p) <= tol]

    # -- orthogonal systems -------------------------------------------------------
    @property
    def is_orthogonal(self) -> bool:
        return self._axes() is not None

    def _axes(self) -> Optional[List[int]]:
        axes = []
        for alpha in self.simple_roots:
            nonzero = [i for i, x in enumerate(alpha) if x != 0]
            if len(nonzero) != 1 or alpha[nonzero[0]] <= 0:
                return None
            axes.append(nonzero[0])
        return axes if len(set(axes)) == len(axes) else None

    def require_orthogonal(self) -> None:
        if not self.is_orthogonal:
            raise UnsupportedGeometry(
                "Cell-exact operations need an orthogonal chamber R_k; use SampledFunction mode for this chamber"
            )

    @property
    def axes(self) -> Tuple[int, ...]:
        """Chamber axes in ascending order."""
        self.require_orthogonal()
        return tuple(sorted(self._axes()))

    @property
    def eta_bits(self) -> Tuple[int, ...]:
        """Wall signs as bits (1 means sign -1), aligned with ``axes``."""
        raw = self._axes()
        self.require_orthogonal()
        by_axis = {axis: (0 if s == 1 else 1) for axis, s in zip(raw, self.eta_on_generators)}
        return tuple(by_axis[a] for a in sorted(by_axis))

    @property
    def plus_axes(self) -> Tuple[int, ...]:
        return tuple(a for a, b in zip(self.axes, self.eta_bits) if b == 0)

    @property
    def minus_axes(self) -> Tuple[int, ...]:
        return tuple(a for a, b in zip(self.axes, self.eta_bits) if b == 1)

    def images(self) -> List[Tuple[Tuple[int, ...], int]]:
        """(flipped axes, sign) for every element, in group order."""
        self.require_orthogonal()
        return [(g.flips, g.sign) for g in self.elements]


def assign_homomorphism(group: ReflectionGroup, eta_on_generators: Sequence[int],
                        simple_roots: np.ndarray, config: Optional[GeometryConfig] = None) -> List[GroupElement]:
    """Propagate wall signs along simple-reflection words.

    Returns the group re-enumerated by simple reflections, each element carrying
    its sign. Raises NotAHomomorphism with a witnessing word pair on conflict.
    """
    config = config or group.system.config
    signs = list(eta_on_generators)
    if len(signs) != len(simple_roots):
        raise InvalidArgument(f"Expected {len(simple_roots)} wall signs, got {len(signs)}")
    if any(s not in (1, -1) for s in signs):
        raise InvalidArgument(f"Wall signs must be +1 or -1, got {signs}")
    mats = [reflection_matrix(alpha) for alpha in simple_roots]
    elements, _ = _closure(group.system, mats, config.closure_cap, signs)
    if len(elements) != len(group):
        raise InvalidArgument(f"Simple reflections generate {len(elements)} elements, the group has {len(group)}")
    return elements


def build_chamber(system: RootSystem, basepoint: Sequence, eta_on_generators: Optional[Sequence[int]] = None,
                  config: Optional[GeometryConfig] = None) -> SignedChamber:
    """Group, positive/simple roots and signed elements for a basepoint."""
    group = generate_group(system, config)
    positive, simple = positive_and_simple(system, basepoint)
    signs = tuple(eta_on_generators) if eta_on_generators is not None else (1,) * len(simple)
    elements = assign_homomorphism(group, signs, simple, config)
    chamber = SignedChamber(system, as_vector(basepoint, exact=None), positive, simple, signs, elements)
    logger.info(f"GROUP: chamber with {len(simple)} walls, signs {list(signs)}, order {chamber.order}")
    return chamber


def orthogonal_chamber(d: int, k: int, eta_bits: Sequence[int] = (), config: Optional[GeometryConfig] = None) -> SignedChamber:
    """Chamber of R_k with walls on the last k axes; eta given as bits."""
    bits = tuple(eta_bits) if eta_bits else (0,) * k
    if len(bits) != k or any(b not in (0, 1) for b in bits):
        raise InvalidArgument(f"eta must be {k} bits, got {list(bits)}")
    system = RootSystem.orthogonal(d, k, config)
    x0 = [0] * (d - k) + [1] * k
    return build_chamber(system, x0, [1 - 2 * b for b in bits], config)


# ---------------------------------------------------------------------------
# Sign vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EtaVector:
    """eta in Z_2^k as bits; bit 1 means the wall carries sign -1."""

    bits: Tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidArgument(f"eta bits must be 0 or 1, got {list(self.bits)}")

    @classmethod
    def parse(cls, text) -> "EtaVector":
        """Parse ``"1,0"``, ``"10"`` or a list of bits."""
        if isinstance(text, EtaVector):
            return text
        if isinstance(text, str):
            cleaned = text.replace(" ", "")
            parts = cleaned.split(",") if "," in cleaned else list(cleaned)
            try:
                return cls(tuple(int(p) for p in parts if p != ""))
            except ValueError:
                raise InvalidArgument(f"Cannot parse eta {text!r}")
        return cls(tuple(int(b) for b in text))

    @property
    def k(self) -> int:
        return len(self.bits)

    @property
    def signs(self) -> Tuple[int, ...]:
        return tuple(1 - 2 * b for b in self.bits)

    def precedes(self, other: "EtaVector") -> bool:
        """Coordinatewise order: every minus wall of self is a minus wall of other."""
        if self.k != other.k:
            raise InvalidArgument(f"Cannot compare eta vectors of lengths {self.k} and {other.k}")
        return all(a <= b for a, b in zip(self.bits, other.bits))

    def chamber(self, d: int, config: Optional[GeometryConfig] = None) -> SignedChamber:
        return orthogonal_chamber(d, self.k, self.bits, config)

    def __str__(self) -> str:
        return ",".join(str(b) for b in self.bits)


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------

def check_multiplicative(chamber: SignedChamber) -> bool:
    """eta(gh) = eta(g) eta(h) for every pair."""
    for g in chamber.elements:
        for h in chamber.elements:
            gh = chamber.element(g.matrix @ h.matrix)
            if gh is None or gh.sign != g.sign * h.sign:
                return False
    return True


def check_hyperplane_permutation(group: ReflectionGroup) -> bool:
    """g maps every root to a root, so g permutes the reflection hyperplanes."""
    system = group.system
    return all(system.find_root(g.matrix @ alpha) is not None for g in group for alpha in system.roots)


def check_sign_is_determinant(chamber: SignedChamber) -> bool:
    return all(int(np.sign(np.linalg.det(g.matrix.astype(float)))) == g.sign for g in chamber.elements)


def orbit_patterns(chamber: SignedChamber, x: Sequence) -> List[Tuple[int, ...]]:
    """Sign patterns on the chamber axes of every point of the orbit of x."""
    axes = chamber.axes
    v = as_vector(x)
    patterns = []
    for g in chamber.elements:
        y = g.matrix @ v
        patterns.append(tuple(1 if y[a] > 0 else -1 for a in axes))
    return patterns
