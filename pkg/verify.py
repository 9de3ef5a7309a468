"""Acceptance suite: cross-module property checks, the H^1-BMO duality pairing,
the embedding and distinctness probes, and the suite runner.

Every check draws its randomness from ``numpy.random.default_rng`` seeded with
the run seed and the check name, so filtering with ``only`` never changes the
numbers a check sees. Checks run at desk scale: windows of half side 4,
lattice spacing at least 1/4 and ledger families at level at most 4.
"""

import itertools
import math
import zlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from adapters.serialization import dumps, to_jsonable
from atoms import (
    GLOBAL,
    LOCAL,
    AtomList,
    Term,
    decompose_eta,
    decomposition_bound,
    extend_atoms,
    fit_atom,
    reconstruct,
    split_bound,
    whitney_cells,
    whitney_counts,
    whitney_covering_defect,
    whitney_m0,
)
from bmo import (
    BEST,
    MEAN,
    CubeFamily,
    bmo_norm,
    eta_bmo_norm,
    even_extend_bmo,
    intrinsic_M1_M2,
    odd_truncation,
    oscillation,
    psi_sample,
)
from config import RunConfig
from errors import InvalidArgument, InvalidInput
from geometry import (
    EtaVector,
    RootSystem,
    SignedChamber,
    build_chamber,
    check_hyperplane_permutation,
    check_multiplicative,
    check_sign_is_determinant,
    generate_group,
    orbit_patterns,
    orthogonal_chamber,
)
from gridfn import (
    Box,
    DyadicCube,
    PCFunction,
    eta_average,
    eta_extend,
    pairing_identity_defect,
    restrict_to_chamber,
)
from kernels import (
    HEAT,
    POISSON,
    eta_heat_kernel,
    h1_norm_estimate,
    h1_norm_whole_space,
    maximal_transform,
    maximal_via_extension,
    wall_normal_derivative,
)
from validator import AtomKind, AtomValidator, ValidationMode

MODULES = ("geometry", "gridfn", "kernels", "atoms", "bmo", "verify")

DESK_HALF = 4
LEDGER_LEVEL = 4
LATTICE_H = 0.25
WHITNEY_DEPTH = 3
PROBE_LEVELS = (5, 6, 7, 8)
KERNEL_ZERO = 1e-14
DERIVATIVE_ORDER = 1.8
MAXIMAL_RTOL = 1e-10
L1_RTOL = 1e-9
BMO_RTOL = 1e-9
DISTINCTNESS_GROWTH = 0.6
MATCHED_VARIATION = 1.1
DUALITY_CHANGE = 0.2


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class CheckEntry(BaseModel):
    """One verdict of the suite."""

    name: str = Field(..., description="Check name, unique within a report")
    module: str = Field(..., description="Library module the check exercises")
    status: str = Field(..., description="pass, fail or error")
    measured: Optional[float] = Field(default=None, description="Measured ratio or constant")
    bound: Optional[float] = Field(default=None, description="Bound the measurement is held to")
    reference: str = Field(default="", description="Claim the check verifies")
    details: Dict[str, Any] = Field(default_factory=dict)


class SuiteReport(BaseModel):
    """Suite verdicts sorted by check name, with the run fingerprint."""

    fingerprint: str
    seed: int
    modules: List[str]
    desk: Dict[str, Any] = Field(default_factory=dict, description="Desk-scale parameters of the checks")
    entries: List[CheckEntry] = Field(default_factory=list)
    counts: Dict[str, int] = Field(default_factory=dict)
    passed: bool = False

    def to_json(self) -> str:
        return dumps(self.model_dump(mode="json"))

    def to_markdown(self) -> str:
        lines = [
            "# Acceptance suite",
            "",
            f"- fingerprint: `{self.fingerprint}`",
            f"- seed: {self.seed}",
            f"- modules: {', '.join(self.modules)}",
            f"- verdict: {'PASS' if self.passed else 'FAIL'} ({', '.join(f'{k}={v}' for k, v in sorted(self.counts.items()))})",
            "",
            "| check | module | status | measured | bound | reference |",
            "|---|---|---|---|---|---|",
        ]
        for e in self.entries:
            measured = "" if e.measured is None else f"{e.measured:.6g}"
            bound = "" if e.bound is None else f"{e.bound:.6g}"
            lines.append(f"| {e.name} | {e.module} | {e.status} | {measured} | {bound} | {e.reference} |")
        return "\n".join(lines) + "\n"


def _finite(value: Any) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def _entry(name: str, module: str, passed: bool, reference: str, measured: Any = None, bound: Any = None,
           **details: Any) -> CheckEntry:
    if measured is not None and _finite(measured) is None:
        details["measured"] = str(float(measured))
    return CheckEntry(
        name=name,
        module=module,
        status="pass" if passed else "fail",
        measured=_finite(measured),
        bound=_finite(bound),
        reference=reference,
        details=to_jsonable(details),
    )


def _label(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in bits)


# ---------------------------------------------------------------------------
# Random families
# ---------------------------------------------------------------------------

def random_fraction(rng: np.random.Generator, magnitude: int = 4, max_den: int = 3) -> Fraction:
    """Nonzero p/q with |p| <= magnitude and 1 <= q <= max_den."""
    num = int(rng.integers(-magnitude, magnitude + 1)) or 1
    return Fraction(num, int(rng.integers(1, max_den + 1)))


def random_pc_function(rng: np.random.Generator, support: Box, level: int, cells: int, window: Box,
                       value_mode: str = "exact") -> PCFunction:
    """Up to ``cells`` distinct cells of side 2^-level inside support, random nonzero values."""
    scale = 1 << level
    lo = np.array([int(x * scale) for x in support.lo], dtype=np.int64)
    hi = np.array([int(x * scale) for x in support.hi], dtype=np.int64)
    counts = tuple(int(c) for c in hi - lo)
    total = int(np.prod(counts))
    n = max(1, min(cells, total))
    flat = np.sort(rng.choice(total, size=n, replace=False))
    idx = np.stack(np.unravel_index(flat, counts), axis=1).astype(np.int64) + lo
    values = [random_fraction(rng) for _ in range(n)]
    if value_mode == "exact":
        arr = np.empty(n, dtype=object)
        arr[:] = values
    else:
        arr = np.array([float(v) for v in values], dtype=float)
    return PCFunction(level, idx, idx + 1, arr, window, value_mode)


def chamber_support(chamber: SignedChamber, reach: int = 2) -> Box:
    """[0, reach] on the chamber axes, [-reach, reach] on the others."""
    axes = set(chamber.axes)
    d = chamber.dimension
    return Box(tuple(0 if i in axes else -reach for i in range(d)), (reach,) * d)


def random_classical_term(rng: np.random.Generator, d: int, plus_axes: Iterable[int], window: Box,
                          mode: str = GLOBAL, large: bool = False, value_mode: str = "exact") -> Term:
    """(c, classical atom) on a cube resting in the cone of plus_axes.

    Corners sit on the quarter-side grid, so cubes straddle the other
    coordinate hyperplanes often. Payloads are constant on the 2^d half-side
    sub-cubes and have mean zero unless the cube is a large local one.
    """
    plus = set(plus_axes)
    side = Fraction(2) if large else Fraction(1, 2 ** int(rng.integers(0, 3)))
    quarter = side / 4
    corner = [int(rng.integers(0, 4) if axis in plus else rng.integers(-3, 4)) * quarter for axis in range(d)]
    cube = DyadicCube.from_corner(corner, side)

    raw = [Fraction(int(v)) for v in rng.integers(-3, 4, size=2 ** d)]
    if side <= 1:
        mean = sum(raw, Fraction(0)) / len(raw)
        raw = [v - mean for v in raw]
    if not any(raw):
        raw[0], raw[1] = raw[0] + 1, raw[1] - 1
    half = side / 2
    cells = []
    for value, offsets in zip(raw, itertools.product((0, 1), repeat=d)):
        lo = tuple(c + o * half for c, o in zip(corner, offsets))
        cells.append((Box(lo, tuple(x + half for x in lo)), value))
    G = PCFunction.from_cells(cells, window=window, value_mode="exact")
    coefficient: Any = random_fraction(rng)
    if value_mode == "float":
        G = G.as_float()
        coefficient = float(coefficient)
    kind = AtomKind.LOCAL_CLASSICAL if mode == LOCAL else AtomKind.CLASSICAL
    _, atom = fit_atom(G, cube, (), (), kind)
    return coefficient, atom


def random_classical_list(rng: np.random.Generator, d: int, plus_axes: Iterable[int], window: Box,
                          mode: str = GLOBAL, count: Optional[int] = None, large: int = 0) -> AtomList:
    """1-3 random classical atoms (plus ``large`` local atoms of side 2)."""
    plus = tuple(plus_axes)
    count = 1 + int(rng.integers(0, 3)) if count is None else count
    terms = [random_classical_term(rng, d, plus, window, mode) for _ in range(count)]
    terms += [random_classical_term(rng, d, plus, window, mode, large=True) for _ in range(large)]
    return AtomList(terms, d, None, mode)


def random_chamber_point(rng: np.random.Generator, chamber: SignedChamber) -> np.ndarray:
    axes = set(chamber.axes)
    return np.array([rng.uniform(0.25, 2.0) if i in axes else rng.uniform(-2.0, 2.0)
                     for i in range(chamber.dimension)])


def eta_configurations(max_dimension: int = 2) -> List[Tuple[int, int, Tuple[int, ...]]]:
    """Every (d, k, eta bits) with 1 <= k <= d <= max_dimension."""
    out = []
    for d in range(1, max_dimension + 1):
        for k in range(1, d + 1):
            for bits in itertools.product((0, 1), repeat=k):
                out.append((d, k, tuple(bits)))
    return out


# ---------------------------------------------------------------------------
# Duality, embedding, distinctness
# ---------------------------------------------------------------------------

def _default_family(window: Box, run: RunConfig, level: Optional[int] = None) -> CubeFamily:
    return CubeFamily(window=window, max_level=run.max_level if level is None else level,
                      break_point=Fraction(run.break_point), kappa=Fraction(run.kappa))


def duality_pairing(b: PCFunction, f: AtomList, eta: Any = None, mode: Optional[str] = None,
                    family: Optional[CubeFamily] = None, run: Optional[RunConfig] = None,
                    bmo_value: Optional[float] = None, h1_value: Optional[float] = None,
                    h: Optional[float] = None, window: Optional[Box] = None) -> Tuple[Any, float]:
    """L_b(f) = int_{C+} b f and |L_b(f)| / (||b||_BMO_eta * H^1 estimate of f).

    ``bmo_value`` and ``h1_value`` skip the corresponding norm computation when
    the caller already has them.
    """
    run = run or RunConfig()
    if eta is None:
        eta = f.eta
    if eta is None:
        raise InvalidArgument("Pairing needs eta: pass it or store it on the atom list")
    eta = EtaVector.parse(eta)
    mode = mode or f.mode
    if mode not in (GLOBAL, LOCAL):
        raise InvalidArgument(f"Unknown mode {mode!r}")
    d = f.dimension
    if b.dimension != d:
        raise InvalidArgument(f"b has dimension {b.dimension}, atoms have dimension {d}")
    chamber = eta.chamber(d)

    report = AtomValidator(ValidationMode(mode)).validate_list(f.atoms)
    if not report["valid"]:
        raise InvalidInput(f"Invalid atom: {report['errors'][0]}", index=report["first_invalid"])
    for i, a in enumerate(f.atoms):
        if a.I0 != chamber.plus_axes or a.I1 != chamber.minus_axes:
            raise InvalidInput(f"Atom walls I0={list(a.I0)}, I1={list(a.I1)} do not match eta={eta}", index=i)

    window = window or Box.window(run.window_half, d)
    F = reconstruct(f, window)
    value = b.inner(F)
    if bmo_value is None:
        family = family or _default_family(window, run)
        bmo_value = eta_bmo_norm(b, chamber, family, "BMO" if mode == GLOBAL else "bmo").value
    if h1_value is None:
        h1_value = h1_norm_estimate(F, chamber, mode=HEAT, range_=mode, t_grid=run.t_grid,
                                    h=h or run.h, window=window).value

    magnitude = float(abs(value))
    denominator = bmo_value * h1_value
    if denominator > 0:
        ratio = magnitude / denominator
    else:
        ratio = 0.0 if magnitude == 0 else math.inf
    logger.debug(f"VERIFY: pairing eta={eta} ({mode}): |L_b(f)|={magnitude:.6g}, "
                 f"BMO={bmo_value:.6g}, H1={h1_value:.6g}, ratio={ratio:.6g}")
    return value, ratio


def embedding_bound(d: int, k: int) -> float:
    """l1 growth allowed when re-decomposing for a larger eta.

    Extension across the minus walls multiplies l1 by at most
    2^k (5^d 2^k)^(1/2); the decomposition adds its own factor.
    """
    return 2 ** k * math.sqrt(5 ** d * 2 ** k) * decomposition_bound(d, k)


def embedding_check(eta1: Any, eta2: Any, f: AtomList, g: Optional[PCFunction] = None,
                    family: Optional[CubeFamily] = None, name: Optional[str] = None) -> CheckEntry:
    """H^1 side: atoms for eta1 re-decompose into atoms for eta2. BMO side: M1 agrees
    and M2 for eta1 is no larger than M2 for eta2."""
    eta1, eta2 = EtaVector.parse(eta1), EtaVector.parse(eta2)
    if not eta1.precedes(eta2):
        raise InvalidArgument(f"eta {eta1} does not precede {eta2}")
    d = f.dimension
    mode = f.mode
    extended = extend_atoms(f, eta1, across="minus")
    redecomposed = decompose_eta(extended, eta2, mode)
    valid = AtomValidator(ValidationMode(mode)).validate_list(redecomposed.atoms)["valid"]
    preserved = reconstruct(redecomposed).equals(reconstruct(f))
    growth = float(redecomposed.l1 / f.l1) if f.l1 else 0.0
    bound = embedding_bound(d, eta1.k)
    passed = bool(valid and preserved and growth <= bound)
    details: Dict[str, Any] = {
        "eta1": list(eta1.bits),
        "eta2": list(eta2.bits),
        "atoms_in": len(f),
        "atoms_out": len(redecomposed),
        "valid": bool(valid),
        "preserved": bool(preserved),
    }

    if g is not None:
        family = family or CubeFamily.default(g.window)
        r1 = intrinsic_M1_M2(g, eta1.chamber(d), family)
        r2 = intrinsic_M1_M2(g, eta2.chamber(d), family)
        tol = BMO_RTOL * max(1.0, r1.m1, r2.m2)
        bmo_ok = abs(r1.m1 - r2.m1) <= tol and r1.m2 <= r2.m2 + tol
        passed = passed and bool(bmo_ok)
        details.update(m1=r1.m1, m2_eta1=r1.m2, m2_eta2=r2.m2, bmo_side=bool(bmo_ok))

    logger.info(f"VERIFY: embedding {eta1} <= {eta2}: l1 growth {growth:.4g} (bound {bound:.4g}), "
                f"{'ok' if passed else 'FAILED'}")
    return _entry(name or f"embedding_d{d}_{_label(eta1.bits)}_to_{_label(eta2.bits)}", "verify", passed,
                  "H1 for a smaller eta embeds in H1 for a larger one; BMO the other way",
                  measured=growth, bound=bound, **details)


def distinctness_probe(eta1: Any, eta2: Any, d: int, levels: Sequence[int] = PROBE_LEVELS,
                       window: Optional[Box] = None, name: Optional[str] = None) -> CheckEntry:
    """Truncated log centred on the wall where eta1 and eta2 differ.

    Under the eta with a plus sign on that wall the eta-BMO norm stays put as
    the sampling level grows; under the other it grows like log 2 per level.
    """
    eta1, eta2 = EtaVector.parse(eta1), EtaVector.parse(eta2)
    if eta1 == eta2:
        raise InvalidArgument("Distinctness needs two different eta vectors")
    if eta1.k != eta2.k:
        raise InvalidArgument(f"eta vectors have lengths {eta1.k} and {eta2.k}")
    levels = sorted(levels)
    if len(levels) < 2:
        raise InvalidArgument("Distinctness needs at least two levels")
    k = eta1.k
    i = next(j for j in range(k) if eta1.bits[j] != eta2.bits[j])
    matched, mismatched = (eta1, eta2) if eta1.bits[i] == 0 else (eta2, eta1)
    chamber_axes = list(range(d - k, d))
    center = [0] * d
    for j, axis in enumerate(chamber_axes):
        if j != i:
            center[axis] = 2
    window = window or Box.window(DESK_HALF, d)
    good, bad = matched.chamber(d), mismatched.chamber(d)

    norms: Dict[str, List[float]] = {"matched": [], "mismatched": []}
    for level in levels:
        f = psi_sample(level, d, center, window).restrict_cone(chamber_axes)
        family = CubeFamily(window=window, max_level=level)
        norms["matched"].append(eta_bmo_norm(f, good, family, "BMO").value)
        norms["mismatched"].append(eta_bmo_norm(f, bad, family, "BMO").value)

    growth = (norms["mismatched"][-1] - norms["mismatched"][0]) / (levels[-1] - levels[0])
    variation = max(norms["matched"]) / min(norms["matched"]) if min(norms["matched"]) > 0 else math.inf
    passed = growth >= DISTINCTNESS_GROWTH and variation <= MATCHED_VARIATION
    logger.info(f"VERIFY: distinctness d={d} {eta1} vs {eta2}: growth {growth:.4f}/level, "
                f"matched variation {variation:.4f}")
    return _entry(name or f"distinctness_d{d}_{_label(eta1.bits)}_{_label(eta2.bits)}", "verify", passed,
                  "eta-BMO spaces differ: a log broken on a minus wall has unbounded norm",
                  measured=growth, bound=DISTINCTNESS_GROWTH, levels=levels, center=center,
                  matched=list(matched.bits), norms=norms, matched_variation=variation,
                  variation_bound=MATCHED_VARIATION)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass
class _Context:
    config: RunConfig
    window_half: int = DESK_HALF

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, zlib.crc32(name.encode("utf-8"))])

    def window(self, d: int) -> Box:
        return Box.window(self.window_half, d)

    @property
    def ledger_level(self) -> int:
        return min(self.config.max_level, LEDGER_LEVEL)

    @property
    def lattice_h(self) -> float:
        return max(self.config.h, LATTICE_H)

    def family(self, window: Box, level: Optional[int] = None) -> CubeFamily:
        return _default_family(window, self.config, self.ledger_level if level is None else level)


CheckFn = Callable[[_Context], List[CheckEntry]]
CHECKS: List[Tuple[str, str, str, CheckFn]] = []


def _check(module: str, name: str, reference: str):
    def register(fn: CheckFn) -> CheckFn:
        CHECKS.append((module, name, reference, fn))
        return fn
    return register


@_check("geometry", "group_algebra", "W(R_k) has 2^k elements, A2 has 6; eta=sgn is the determinant")
def _group_algebra(ctx: _Context) -> List[CheckEntry]:
    orders: Dict[str, int] = {}
    ok = True
    for k in (1, 2, 3):
        group = generate_group(RootSystem.orthogonal(3, k))
        orders[f"R{k}"] = len(group)
        ok = ok and len(group) == 2 ** k and check_hyperplane_permutation(group)
        all_minus = orthogonal_chamber(3, k, (1,) * k)
        ok = ok and check_sign_is_determinant(all_minus) and check_multiplicative(all_minus)
    a2 = RootSystem.a2()
    group = generate_group(a2)
    orders["A2"] = len(group)
    chamber = build_chamber(a2, [0.3, 1.0], [-1, -1])
    ok = ok and len(group) == 6 and check_hyperplane_permutation(group) and check_sign_is_determinant(chamber)
    return [_entry("group_algebra", "geometry", bool(ok),
                   "W(R_k) has 2^k elements, A2 has 6; eta=sgn is the determinant", orders=orders)]


@_check("geometry", "orbit_transitivity", "W(R_k) carries a chamber point onto every sign pattern exactly once")
def _orbit_transitivity(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("orbit_transitivity")
    failures: List[Dict[str, Any]] = []
    points = 0
    for k in (1, 2, 3):
        chamber = orthogonal_chamber(3, k, (0,) * k)
        every = set(itertools.product((-1, 1), repeat=k))
        for _ in range(ctx.config.verify.orbit_points):
            x = random_chamber_point(rng, chamber)
            patterns = orbit_patterns(chamber, x)
            points += 1
            if len(patterns) != 2 ** k or set(patterns) != every:
                failures.append({"k": k, "point": x.tolist(), "patterns": len(set(patterns))})
    return [_entry("orbit_transitivity", "geometry", not failures,
                   "W(R_k) carries a chamber point onto every sign pattern exactly once",
                   measured=len(failures), bound=0, points=points, failures=failures[:5])]


@_check("gridfn", "extension_identities", "A_eta E_eta = id on the chamber; the pairing identity is exact")
def _extension_identities(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("extension_identities")
    n = ctx.config.verify.random_functions
    failures: List[Dict[str, Any]] = []
    checked = 0
    for d, k, bits in eta_configurations(2):
        chamber = orthogonal_chamber(d, k, bits)
        window = ctx.window(d)
        support = chamber_support(chamber)
        whole = Box.window(2, d)
        for trial in range(n):
            f = random_pc_function(rng, support, 2, 6, window)
            F = random_pc_function(rng, whole, 2, 6, window)
            back = restrict_to_chamber(eta_average(eta_extend(f, chamber), chamber), chamber)
            defect = pairing_identity_defect(f, F, chamber)
            checked += 1
            if not back.equals(f) or defect != 0:
                failures.append({"d": d, "eta": list(bits), "trial": trial, "defect": defect})
    return [_entry("extension_identities", "gridfn", not failures,
                   "A_eta E_eta = id on the chamber; the pairing identity is exact",
                   measured=len(failures), bound=0, checked=checked, failures=failures[:5])]


@_check("kernels", "kernel_boundary", "eta heat kernel vanishes on minus walls and is flat across plus walls")
def _kernel_boundary(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("kernel_boundary")
    worst = 0.0
    for d, k, bits in ((1, 1, (1,)), (2, 2, (1, 0)), (2, 2, (1, 1)), (3, 2, (0, 1))):
        chamber = orthogonal_chamber(d, k, bits)
        for axis in chamber.minus_axes:
            for _ in range(20):
                x, y = random_chamber_point(rng, chamber), random_chamber_point(rng, chamber)
                x[axis] = 0.0
                for t in (1 / 16, 1.0, 4.0):
                    worst = max(worst, abs(eta_heat_kernel(t, x, y, chamber)))
    vanishing = _entry("kernel_minus_wall_zero", "kernels", worst <= KERNEL_ZERO,
                       "eta heat kernel vanishes on minus walls", measured=worst, bound=KERNEL_ZERO)

    steps = (2.0 ** -4, 2.0 ** -5, 2.0 ** -6)
    orders: List[float] = []
    for d, k, bits in ((1, 1, (0,)), (2, 1, (0,)), (2, 2, (0, 1))):
        chamber = orthogonal_chamber(d, k, bits)
        for axis in chamber.plus_axes:
            for _ in range(5):
                x, y = random_chamber_point(rng, chamber), random_chamber_point(rng, chamber)
                x[axis], y[axis] = 0.0, 1.0
                errors = [abs(wall_normal_derivative(eta_heat_kernel, 1.0, x, y, chamber, axis, h)) for h in steps]
                orders.extend(math.log2(a / b) for a, b in zip(errors, errors[1:]))
    order = min(orders)
    flat = _entry("kernel_plus_wall_derivative", "kernels", order >= DERIVATIVE_ORDER,
                  "normal derivative of the eta heat kernel vanishes on plus walls",
                  measured=order, bound=DERIVATIVE_ORDER, steps=list(steps), samples=len(orders))
    return [vanishing, flat]


def _atom_built(rng: np.random.Generator, chamber: SignedChamber, window: Box) -> Tuple[PCFunction, AtomList]:
    eta = EtaVector(chamber.eta_bits)
    out = decompose_eta(random_classical_list(rng, chamber.dimension, chamber.plus_axes, window), eta)
    return reconstruct(out, window), out


@_check("kernels", "maximal_transforms", "M_eta f = M(E_eta f) on the chamber; L1 norms agree up to |W|")
def _maximal_transforms(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("maximal_transforms")
    h = ctx.lattice_h
    t_grid = ctx.config.t_grid
    worst = 0.0
    worst_l1 = 0.0
    for d in (1, 2):
        window = ctx.window(d)
        for trial in range(10):
            chamber = orthogonal_chamber(d, 1, (int(rng.integers(0, 2)),))
            f, _ = _atom_built(rng, chamber, window)
            for mode in (HEAT, POISSON) if trial < 3 else (HEAT,):
                direct = maximal_transform(f, chamber, mode=mode, t_grid=t_grid, h=h, window=window).values
                via = maximal_via_extension(f, chamber, mode=mode, t_grid=t_grid, h=h, window=window).values
                size = np.maximum(np.abs(direct), np.abs(via))
                if size.size and size.max() > 0:
                    mask = size > 1e-12 * size.max()
                    worst = max(worst, float(np.max(np.abs(direct - via)[mask] / size[mask])))
            if trial < 3:
                inside = h1_norm_estimate(f, chamber, mode=HEAT, t_grid=t_grid, h=h, window=window).value
                whole = h1_norm_whole_space(eta_extend(f, chamber), mode=HEAT, t_grid=t_grid, h=h,
                                            window=window).value / chamber.order
                if max(inside, whole) > 0:
                    worst_l1 = max(worst_l1, abs(inside - whole) / max(inside, whole))
    return [
        _entry("maximal_equality", "kernels", worst <= MAXIMAL_RTOL,
               "M_eta f = M(E_eta f) pointwise on the chamber", measured=worst, bound=MAXIMAL_RTOL, h=h,
               modes=[HEAT, POISSON]),
        _entry("maximal_l1_identity", "kernels", worst_l1 <= L1_RTOL,
               "||M_eta f||_L1(C+) = |W|^-1 ||M(E_eta f)||_L1", measured=worst_l1, bound=L1_RTOL, h=h),
    ]


@_check("atoms", "whitney_counting", "j_m = 0 below m0 and j_m <= (2^d - 1) 2^((m - m0)(d - 1))")
def _whitney_counting(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("whitney_counting")
    worst = 0.0
    violations: List[Dict[str, Any]] = []
    for i in range(ctx.config.verify.whitney_cubes):
        d = 1 + i % 3
        side = Fraction(1, 2 ** int(rng.integers(0, 3)))
        quarter = side / 4
        axis = d - 1
        corner = [int(rng.integers(-4, 4)) * quarter for _ in range(d)]
        corner[axis] = int(rng.integers(-3, 2)) * quarter
        Q = DyadicCube.from_corner(corner, side)
        m0 = whitney_m0(side)
        top = m0 + WHITNEY_DEPTH
        cells = whitney_cells(Q, axis, (), top)
        for m, j in whitney_counts(cells).items():
            allowed = (2 ** d - 1) * 2 ** ((m - m0) * (d - 1))
            worst = max(worst, j / allowed)
            if m < m0 or j > allowed:
                violations.append({"cube": Q, "m": m, "count": j, "allowed": allowed})
        defect = whitney_covering_defect(Q, axis, cells, top)
        if defect != 0:
            violations.append({"cube": Q, "uncovered": defect})
    return [_entry("whitney_counting", "atoms", not violations,
                   "j_m = 0 below m0 and j_m <= (2^d - 1) 2^((m - m0)(d - 1))",
                   measured=worst, bound=1, violations=violations[:5])]


@_check("atoms", "whitney_refinement", "refined Whitney pieces keep their doubles off the x_0 wall and still cover Q")
def _whitney_refinement(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("whitney_refinement")
    violations: List[Dict[str, Any]] = []
    configurations = refined = 0
    for d, side, k, lift in itertools.product((2, 3), (Fraction(1), Fraction(1, 2)), range(4), range(-3, 2)):
        quarter = side / 4
        axis = d - 1
        corner = [int(rng.integers(-4, 4)) * quarter for _ in range(d)]
        corner[0] = side / 2 + k * quarter
        corner[axis] = lift * quarter
        Q = DyadicCube.from_corner(corner, side)
        top = whitney_m0(side) + WHITNEY_DEPTH
        cells = whitney_cells(Q, axis, (0,), top, refine_walls=(0,))
        configurations += 1
        if cells != whitney_cells(Q, axis, (0,), top):
            refined += 1
        defect = whitney_covering_defect(Q, axis, cells, top)
        crossing = [D for D in cells if D.double().lo[0] < 0]
        if defect != 0 or crossing:
            violations.append({"cube": Q, "uncovered": defect, "crossing": crossing[:3]})
    return [_entry("whitney_refinement", "atoms", not violations and refined > 0,
                   "refined Whitney pieces keep their doubles off the x_0 wall and still cover Q",
                   measured=len(violations), bound=0, configurations=configurations, refined=refined,
                   violations=violations[:5])]


@_check("atoms", "decomposition", "decompose_eta is exact, valid and l1-bounded; extension splits into classical atoms")
def _decomposition(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("decomposition")
    configs = eta_configurations(2)
    validator = AtomValidator(ValidationMode.GLOBAL)
    worst_ratio = 0.0
    worst_whitney = Fraction(0)
    worst_cube_ratio = Fraction(0)
    failures: Dict[str, List[Dict[str, Any]]] = {"soundness": [], "whitney": [], "extension": [], "no_b": []}
    zero_eta_lists = 0

    for i in range(ctx.config.verify.random_lists):
        d, k, bits = configs[i % len(configs)]
        eta = EtaVector(bits)
        chamber = eta.chamber(d)
        window = ctx.window(d)
        lst = random_classical_list(rng, d, chamber.plus_axes, window)
        out = decompose_eta(lst, eta)
        tag = {"list": i, "d": d, "eta": list(bits)}

        ratio = out.ledger[-1]["ratio"]
        worst_ratio = max(worst_ratio, ratio / decomposition_bound(d, k))
        valid = validator.validate_list(out.atoms)["valid"]
        preserved = reconstruct(out, window).equals(reconstruct(lst, window).restrict_cone(chamber.minus_axes))
        if not (valid and preserved and ratio <= decomposition_bound(d, k)):
            failures["soundness"].append(dict(tag, valid=bool(valid), preserved=bool(preserved), ratio=ratio))

        for step in out.ledger:
            if step.get("step") == "halfspace_split":
                total = Fraction(step["max_whitney_sum"])
                worst_whitney = max(worst_whitney, total * total / split_bound(d))
                if total * total > split_bound(d):
                    failures["whitney"].append(dict(tag, axis=step["axis"], total=total))

        if not any(bits):
            zero_eta_lists += 1
            if any(a.kind == AtomKind.B for a in out.atoms):
                failures["no_b"].append(tag)

        ext = extend_atoms(out, eta, across="all")
        composites = ext.ledger[-1]["b_scales"]
        expected = (len(out) - len(composites)) * 2 ** k + sum(c["images"] for c in composites)
        for c in composites:
            worst_cube_ratio = max(worst_cube_ratio, Fraction(c["ratio"]) / 5 ** d)
        ext_valid = validator.validate_list(ext.atoms)["valid"]
        ext_exact = reconstruct(ext, window).equals(eta_extend(reconstruct(out, window), chamber))
        means_zero = all(c["mean"] == 0 for c in composites)
        if not (ext_valid and ext_exact and means_zero and len(ext) == expected):
            failures["extension"].append(dict(tag, valid=bool(ext_valid), exact=bool(ext_exact),
                                              terms=len(ext), expected=expected))

    n = ctx.config.verify.random_lists
    return [
        _entry("decomposition_soundness", "atoms", not failures["soundness"],
               "decompose_eta output reconstructs the restriction, validates and stays l1-bounded",
               measured=worst_ratio, bound=1, lists=n, failures=failures["soundness"][:5]),
        _entry("whitney_coefficients", "atoms", not failures["whitney"],
               "Whitney coefficient sum per atom <= (2^d (2^d - 1))^(1/2)",
               measured=worst_whitney, bound=1, failures=failures["whitney"][:5]),
        _entry("extension_of_atoms", "atoms", not failures["extension"],
               "E_eta of atoms: 2^k classical images per A-atom, mean-zero composites with |Q_J|/|Q| < 5^d",
               measured=worst_cube_ratio, bound=1, failures=failures["extension"][:5]),
        _entry("zero_eta_has_no_b_atoms", "atoms", not failures["no_b"] and zero_eta_lists > 0,
               "eta = 0 global decompositions contain only A-atoms", lists=zero_eta_lists,
               failures=failures["no_b"][:5]),
    ]


@_check("atoms", "local_large_cubes", "local decompositions for eta = 1 keep cubes of side > 1")
def _local_large_cubes(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("local_large_cubes")
    validator = AtomValidator(ValidationMode.LOCAL)
    failures: List[Dict[str, Any]] = []
    large_seen = 0
    trials = max(4, ctx.config.verify.random_lists // 10)
    for i in range(trials):
        d = 1 + i % 2
        eta = EtaVector((1,))
        chamber = eta.chamber(d)
        window = ctx.window(d)
        lst = random_classical_list(rng, d, chamber.plus_axes, window, mode=LOCAL, count=1, large=1)
        out = decompose_eta(lst, eta, mode=LOCAL)
        valid = validator.validate_list(out.atoms)["valid"]
        preserved = reconstruct(out, window).equals(reconstruct(lst, window).restrict_cone(chamber.minus_axes))
        large_seen += sum(1 for a in out.atoms if a.side > 1)
        if not (valid and preserved and out.residual is None):
            failures.append({"trial": i, "d": d, "valid": bool(valid), "preserved": bool(preserved)})
    return [_entry("local_large_cubes", "atoms", not failures and large_seen > 0,
                   "local decompositions for eta = 1 keep cubes of side > 1",
                   measured=large_seen, trials=trials, failures=failures[:5])]


@_check("bmo", "oscillation_ledger", "best <= mean <= 2 best per cube; the median minimises the oscillation")
def _oscillation_ledger(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("oscillation_ledger")
    failures: List[Dict[str, Any]] = []
    worst = Fraction(0)
    n = 4 * ctx.config.verify.random_functions
    for i in range(n):
        d = 1 + i % 2
        window = ctx.window(d)
        F = random_pc_function(rng, Box.window(1, d), 2, 6, window)
        side = Fraction(2) ** -int(rng.integers(-1, 3))
        corner = [int(rng.integers(-4, 4)) * side / 4 - side / 2 for _ in range(d)]
        Q = DyadicCube.from_corner(corner, side)
        best = oscillation(F, Q, BEST)
        mean = oscillation(F, Q, MEAN)
        if best > 0:
            worst = max(worst, mean / best)
        ok = best <= mean <= 2 * best
        for _ in range(5):
            c = random_fraction(rng)
            G = F.restrict(Q) - PCFunction.indicator(Q, c, window=window)
            ok = ok and G.l1() / Q.volume >= best
        if not ok:
            failures.append({"trial": i, "cube": Q, "best": best, "mean": mean})
    return [_entry("oscillation_ledger", "bmo", not failures,
                   "best <= mean <= 2 best per cube; the median minimises the oscillation",
                   measured=worst, bound=2, trials=n, failures=failures[:5])]


@_check("bmo", "norm_constants", "breaking-point and even-extension constants")
def _norm_constants(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("norm_constants")
    n = 2 * ctx.config.verify.random_functions
    worst_21 = worst_12 = worst_even = 0.0
    bad_break: List[Dict[str, Any]] = []
    bad_even: List[Dict[str, Any]] = []
    for i in range(n):
        d = 1 + i % 2
        window = ctx.window(d)
        family = ctx.family(window)
        F = random_pc_function(rng, Box.window(2, d), 2, 8, window)
        a1 = bmo_norm(F, family, "bmo*", break_point=1).value
        a2 = bmo_norm(F, family, "bmo*", break_point=2).value
        if a1 > 0:
            worst_21 = max(worst_21, a2 / a1 / 2)
        if a2 > 0:
            worst_12 = max(worst_12, a1 / a2 / (2 ** d + 1))
        if a2 > 2 * a1 * (1 + BMO_RTOL) or a1 > (2 ** d + 1) * a2 * (1 + BMO_RTOL):
            bad_break.append({"trial": i, "d": d, "bmo1": a1, "bmo2": a2})

        plain = bmo_norm(F, family, "BMO*").value
        even = bmo_norm(even_extend_bmo(F, d - 1), family, "BMO*").value
        if plain > 0:
            worst_even = max(worst_even, even / plain)
        if even > 2 * plain * (1 + BMO_RTOL):
            bad_even.append({"trial": i, "d": d, "norm": plain, "even": even})
    return [
        _entry("breaking_point_constants", "bmo", not bad_break,
               "||F||_bmo*,2 <= 2 ||F||_bmo*,1 and ||F||_bmo*,1 <= (2^d + 1) ||F||_bmo*,2",
               measured=max(worst_21, worst_12), bound=1, trials=n, failures=bad_break[:5]),
        _entry("even_extension_constant", "bmo", not bad_even,
               "even extension at most doubles the BMO* norm",
               measured=worst_even, bound=2, trials=n, failures=bad_even[:5]),
    ]


@_check("bmo", "equivalence_band", "(M1 + M2) and the eta-BMO norm are equivalent")
def _equivalence_band(ctx: _Context) -> List[CheckEntry]:
    entries = []
    for d, k, bits in ((1, 1, (0,)), (1, 1, (1,)), (2, 1, (1,)), (2, 2, (1, 0))):
        rng = ctx.rng(f"equivalence_band_{d}_{k}_{_label(bits)}")
        chamber = orthogonal_chamber(d, k, bits)
        window = ctx.window(d)
        family = ctx.family(window)
        support = chamber_support(chamber)
        ratios = []
        for _ in range(ctx.config.verify.band_functions):
            f = random_pc_function(rng, support, 2, 8, window)
            intrinsic = intrinsic_M1_M2(f, chamber, family)
            norm = eta_bmo_norm(f, chamber, family, "BMO").value
            if norm > 0:
                ratios.append(intrinsic.total / norm)
        lo, hi = (min(ratios), max(ratios)) if ratios else (0.0, 0.0)
        width = hi / lo if lo > 0 else math.inf
        logger.info(f"VERIFY: band d={d} eta={_label(bits)}: [{lo:.4g}, {hi:.4g}], width {width:.4g}")
        entries.append(_entry(f"equivalence_band_d{d}_{_label(bits)}", "bmo",
                              bool(ratios) and width <= ctx.config.verify.band_width,
                              "(M1 + M2) and the eta-BMO norm are equivalent",
                              measured=width, bound=ctx.config.verify.band_width, low=lo, high=hi,
                              functions=len(ratios)))
    return entries


@_check("bmo", "odd_truncation", "restricting E_eta f to the plus side of the minus walls keeps BMO* within a constant")
def _odd_truncation(ctx: _Context) -> List[CheckEntry]:
    rng = ctx.rng("odd_truncation")
    chamber = orthogonal_chamber(1, 1, (1,))
    window = ctx.window(1)
    family = ctx.family(window)
    ceiling = ctx.config.verify.truncation_bound
    ratios = []
    for _ in range(5):
        f = random_pc_function(rng, chamber_support(chamber), 2, 6, window)
        _, ratio = odd_truncation(f, chamber, family)
        ratios.append(ratio)
    worst = max(ratios)
    return [_entry("odd_truncation_constant", "bmo", math.isfinite(worst) and worst <= ceiling,
                   "restricting E_eta f to the plus side of the minus walls keeps BMO* within a constant",
                   measured=worst, bound=ceiling, reference_bound=1 + 2 ** (chamber.dimension - 1),
                   ratios=ratios)]


@_check("verify", "distinctness", "eta-BMO spaces differ")
def _distinctness(ctx: _Context) -> List[CheckEntry]:
    return [
        distinctness_probe((0,), (1,), 1, window=ctx.window(1)),
        distinctness_probe((0,), (1,), 2, window=ctx.window(2)),
    ]


@_check("verify", "embedding", "H1 for a smaller eta embeds in H1 for a larger one")
def _embedding(ctx: _Context) -> List[CheckEntry]:
    pairs = [(1, (0,), (1,)), (2, (0,), (1,))]
    pairs += [(2, a, b) for a in itertools.product((0, 1), repeat=2) for b in itertools.product((0, 1), repeat=2)
              if a != b and all(x <= y for x, y in zip(a, b))]
    trials = max(3, ctx.config.verify.random_lists // 20)
    entries = []
    for d, bits1, bits2 in pairs:
        name = f"embedding_d{d}_{_label(bits1)}_to_{_label(bits2)}"
        rng = ctx.rng(name)
        eta1 = EtaVector(bits1)
        chamber = eta1.chamber(d)
        window = ctx.window(d)
        results = []
        for _ in range(trials):
            f = decompose_eta(random_classical_list(rng, d, chamber.plus_axes, window), eta1)
            g = random_pc_function(rng, chamber_support(chamber), 2, 8, window)
            results.append(embedding_check(bits1, bits2, f, g, ctx.family(window), name=name))
        worst = max(results, key=lambda e: (e.status != "pass", e.measured or 0.0))
        entries.append(worst.model_copy(update={"details": dict(worst.details, trials=trials)}))
    return entries


@_check("verify", "duality", "L_b(f) = int b f is bounded by ||b||_BMO_eta ||f||_H1_eta")
def _duality(ctx: _Context) -> List[CheckEntry]:
    config = ctx.config
    pairs = config.verify.duality_pairs
    n_b = max(1, math.isqrt(pairs))
    n_f = -(-pairs // n_b)
    levels = (max(config.max_level - 1, 0), config.max_level)
    entries = []
    for d, k, bits in eta_configurations(2):
        name = f"duality_d{d}_{_label(bits)}"
        rng = ctx.rng(name)
        eta = EtaVector(bits)
        chamber = eta.chamber(d)
        window = ctx.window(d)
        bs = [random_pc_function(rng, chamber_support(chamber), 2, 8, window) for _ in range(n_b)]
        fs = [decompose_eta(random_classical_list(rng, d, chamber.plus_axes, window), eta) for _ in range(n_f)]
        h1 = [h1_norm_estimate(reconstruct(f, window), chamber, mode=HEAT, range_=GLOBAL, t_grid=config.t_grid,
                               h=ctx.lattice_h, window=window).value for f in fs]
        maxima: Dict[int, float] = {}
        for level in levels:
            family = ctx.family(window, level)
            norms = [eta_bmo_norm(b, chamber, family, "BMO").value for b in bs]
            ratios = []
            for bi, fi in itertools.islice(itertools.product(range(n_b), range(n_f)), pairs):
                _, ratio = duality_pairing(bs[bi], fs[fi], eta, GLOBAL, run=config, bmo_value=norms[bi],
                                           h1_value=h1[fi], window=window)
                ratios.append(ratio)
            maxima[level] = max(ratios)
        coarse, fine = maxima[levels[0]], maxima[levels[1]]
        top = max(coarse, fine)
        change = abs(fine - coarse) / top if top > 0 else 0.0
        passed = math.isfinite(top) and top <= config.verify.duality_bound and change <= DUALITY_CHANGE
        logger.info(f"VERIFY: duality d={d} eta={_label(bits)}: max ratio {coarse:.4g} (L={levels[0]}), "
                    f"{fine:.4g} (L={levels[1]})")
        entries.append(_entry(name, "verify", passed,
                              "L_b(f) = int b f is bounded by ||b||_BMO_eta ||f||_H1_eta",
                              measured=change, bound=DUALITY_CHANGE, max_ratio=top,
                              ratio_bound=config.verify.duality_bound,
                              maxima={str(level): value for level, value in maxima.items()}, pairs=pairs))
    return entries


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def run_suite(config: Optional[RunConfig] = None, only: Optional[Iterable[str]] = None) -> SuiteReport:
    """Run every registered check of the selected modules and assemble the report."""
    config = config or RunConfig()
    modules = sorted(set(only)) if only else list(MODULES)
    unknown = [m for m in modules if m not in MODULES]
    if unknown:
        raise InvalidArgument(f"Unknown suite modules {unknown}; expected some of {', '.join(MODULES)}")
    ctx = _Context(config)

    entries: List[CheckEntry] = []
    for module, name, reference, check in CHECKS:
        if module not in modules:
            continue
        logger.info(f"VERIFY: running {module}/{name}")
        try:
            entries.extend(check(ctx))
        except Exception as e:
            logger.error(f"VERIFY: {name} raised {type(e).__name__}: {e}")
            entries.append(CheckEntry(name=name, module=module, status="error", reference=reference,
                                      details={"error": f"{type(e).__name__}: {e}"}))

    entries.sort(key=lambda e: e.name)
    counts: Dict[str, int] = {}
    for e in entries:
        counts[e.status] = counts.get(e.status, 0) + 1
    passed = bool(entries) and all(e.status == "pass" for e in entries)
    report = SuiteReport(
        fingerprint=config.fingerprint(),
        seed=config.seed,
        modules=modules,
        desk={"window_half": ctx.window_half, "ledger_level": ctx.ledger_level, "lattice_h": ctx.lattice_h},
        entries=entries,
        counts=counts,
        passed=passed,
    )
    logger.info(f"VERIFY: {len(entries)} checks {counts} -> {'PASS' if passed else 'FAIL'}")
    return report
