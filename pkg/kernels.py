"""Heat and Poisson kernels, their eta-image sums on chambers, maximal transforms
and maximal-function H^1 estimates.

Kernels are integrated exactly against each constant cell where a closed form
exists: products of erf differences for the heat kernel, arctan differences for
the one-dimensional Poisson kernel. The Poisson kernel in d >= 2 falls back to
tensor Gauss-Legendre quadrature on refined sub-cells.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from numpy.polynomial.legendre import leggauss
from scipy.special import erf, gamma

from config import KernelConfig, TGrid, settings
from errors import ConfigError, InvalidArgument
from geometry import SignedChamber
from gridfn import Box, PCFunction, SampledFunction, chamber_box, eta_extend

HEAT = "heat"
POISSON = "poisson"
GLOBAL = "global"
LOCAL = "local"


def _check_t(t: float) -> None:
    if not t > 0:
        raise InvalidArgument(f"Time must be positive, got {t}")


def gauss_kernel(t: float, x) -> Any:
    """(4 pi t)^(-d/2) exp(-|x|^2 / 4t); x may be a batch with the last axis of size d."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    return (4.0 * math.pi * t) ** (-d / 2.0) * np.exp(-r2 / (4.0 * t))


def poisson_constant(d: int) -> float:
    return float(gamma((d + 1) / 2.0) / math.pi ** ((d + 1) / 2.0))


def poisson_kernel(t: float, x) -> Any:
    """c_d t / (t^2 + |x|^2)^((d+1)/2)."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    return poisson_constant(d) * t / (t * t + r2) ** ((d + 1) / 2.0)


KERNELS = {HEAT: gauss_kernel, POISSON: poisson_kernel}


def _image_sum(kernel, t: float, x, y, chamber: SignedChamber) -> float:
    _check_t(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != chamber.dimension or y.shape[-1] != chamber.dimension:
        raise InvalidArgument(f"Points must have {chamber.dimension} coordinates")
    terms = [g.sign * float(kernel(t, g.matrix.astype(float) @ x - y)) for g in chamber.elements]
    return math.fsum(terms)


def eta_heat_kernel(t: float, x, y, chamber: SignedChamber) -> float:
    """sum_g eta(g) p_t(gx - y)."""
    return _image_sum(gauss_kernel, t, x, y, chamber)


def eta_poisson_kernel(t: float, x, y, chamber: SignedChamber) -> float:
    """sum_g eta(g) P_t(gx - y)."""
    return _image_sum(poisson_kernel, t, x, y, chamber)


def wall_normal_derivative(kernel_fn, t: float, x_wall, y, chamber: SignedChamber, axis: int, h: float) -> float:
    """Second-order one-sided difference of x -> K(t, x, y) along +e_axis at a wall point."""
    x0 = np.asarray(x_wall, dtype=float)
    step = np.zeros_like(x0)
    step[axis] = h
    k0 = kernel_fn(t, x0, y, chamber)
    k1 = kernel_fn(t, x0 + step, y, chamber)
    k2 = kernel_fn(t, x0 + 2 * step, y, chamber)
    return (-3.0 * k0 + 4.0 * k1 - k2) / (2.0 * h)


# ---------------------------------------------------------------------------
# Cell integrals
# ---------------------------------------------------------------------------

def _heat_cell_integrals(points: np.ndarray, lo: np.ndarray, hi: np.ndarray, t: float) -> np.ndarray:
    """(n, m) matrix of int_{cell_j} p_t(x_i - y) dy."""
    s = 2.0 * math.sqrt(t)
    out = np.ones((len(points), len(lo)))
    for a in range(points.shape[1]):
        z = points[:, a:a + 1]
        out *= 0.5 * (erf((z - lo[None, :, a]) / s) - erf((z - hi[None, :, a]) / s))
    return out


def _poisson_cell_integrals(points: np.ndarray, lo: np.ndarray, hi: np.ndarray, t: float,
                            quad_points: int, subdivisions: int) -> np.ndarray:
    d = points.shape[1]
    if d == 1:
        z = points[:, 0:1]
        return (np.arctan((z - lo[None, :, 0]) / t) - np.arctan((z - hi[None, :, 0]) / t)) / math.pi
    nodes, weights = leggauss(quad_points)
    # reference nodes/weights on [0, 1] refined into subdivisions pieces
    ref = np.concatenate([(k + (nodes + 1.0) / 2.0) / subdivisions for k in range(subdivisions)])
    ref_w = np.tile(weights / 2.0 / subdivisions, subdivisions)
    grids = np.meshgrid(*([ref] * d), indexing="ij")
    unit_nodes = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([ref_w] * d), indexing="ij")
    unit_w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    out = np.empty((len(points), len(lo)))
    for j in range(len(lo)):
        side = hi[j] - lo[j]
        cell_nodes = lo[j] + unit_nodes * side
        w = unit_w * np.prod(side)
        diffs = points[:, None, :] - cell_nodes[None, :, :]
        out[:, j] = poisson_kernel(t, diffs) @ w
    return out


def cell_integrals(points: np.ndarray, f: PCFunction, t: float, mode: str,
                   config: Optional[KernelConfig] = None) -> np.ndarray:
    """Matrix of kernel integrals of every cell of f seen from every point."""
    config = config or settings.kernel
    scale = float(1 << f.level)
    lo = f.lo.astype(float) / scale
    hi = f.hi.astype(float) / scale
    if mode == HEAT:
        return _heat_cell_integrals(points, lo, hi, t)
    if mode == POISSON:
        return _poisson_cell_integrals(points, lo, hi, t, config.quad_points, config.quad_subdivisions)
    raise InvalidArgument(f"Unknown kernel mode {mode!r}")


# ---------------------------------------------------------------------------
# Lattices and maximal transforms
# ---------------------------------------------------------------------------

def lattice(box: Box, h: float) -> np.ndarray:
    """Cell centers of the h-grid anchored at box.lo."""
    axes = []
    for a, b in zip(box.lo, box.hi):
        n = int(math.floor(float(b - a) / h + 1e-9))
        axes.append(float(a) + h * (np.arange(n) + 0.5))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def chamber_lattice(chamber: SignedChamber, window: Box, h: float) -> Tuple[np.ndarray, Box]:
    if chamber.is_orthogonal:
        box = chamber_box(window, chamber.axes)
        if box is None:
            raise InvalidArgument(f"Window {window} does not meet the chamber")
        return lattice(box, h), box
    pts = lattice(window, h)
    simple = chamber.simple_roots.astype(float)
    keep = np.all(pts @ simple.T > 0, axis=1)
    return pts[keep], window


def t_values(t_grid: Optional[TGrid], range_: str, config: KernelConfig) -> List[float]:
    t_grid = t_grid or TGrid(t_min=config.t_min, ratio=config.t_ratio, t_max=config.t_max)
    if range_ not in (GLOBAL, LOCAL):
        raise InvalidArgument(f"Unknown range {range_!r}")
    values = t_grid.values(upper=config.local_t_max if range_ == LOCAL else None)
    if not values:
        raise ConfigError(f"t-grid {t_grid.as_string()} is empty for the {range_} range")
    return values


def _chunks(n: int, size: int) -> List[slice]:
    return [slice(i, min(n, i + size)) for i in range(0, n, size)]


def _signed_maxima(points: np.ndarray, f: PCFunction, images: List[Tuple[np.ndarray, int]], times: List[float],
                   mode: str, config: KernelConfig) -> np.ndarray:
    values = np.asarray(f.values, dtype=complex if f.is_complex else float)
    best = np.zeros(len(points))
    for t in times:
        total = None
        for mat, sign in images:
            part = sign * (cell_integrals(points @ mat.T, f, t, mode, config) @ values)
            total = part if total is None else total + part
        best = np.maximum(best, np.abs(total))
    return best


def _evaluate(points: np.ndarray, f: PCFunction, images, times, mode: str, config: KernelConfig) -> np.ndarray:
    if len(f) == 0 or len(points) == 0:
        return np.zeros(len(points))
    size = max(1, 200_000 // max(1, len(f)))
    slices = _chunks(len(points), size)
    if config.threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(lambda s: _signed_maxima(points[s], f, images, times, mode, config), slices))
    else:
        parts = [_signed_maxima(points[s], f, images, times, mode, config) for s in slices]
    return np.concatenate(parts)


def maximal_transform(f: PCFunction, chamber: SignedChamber, config: Optional[KernelConfig] = None,
                      mode: str = HEAT, range_: str = GLOBAL, t_grid: Optional[TGrid] = None,
                      h: Optional[float] = None, window: Optional[Box] = None,
                      points: Optional[np.ndarray] = None) -> SampledFunction:
    """max over the t-grid of |int_{C+} K_t^eta(x, y) f(y) dy| on a lattice in the chamber."""
    config = config or settings.kernel
    h = h or config.h
    times = t_values(t_grid, range_, config)
    window = window or f.window
    if points is None:
        points, box = chamber_lattice(chamber, window, h)
    else:
        points, box = np.atleast_2d(np.asarray(points, dtype=float)), window
    images = [(g.matrix.astype(float), g.sign) for g in chamber.elements]
    values = _evaluate(points, f, images, times, mode, config)
    logger.debug(f"KERNEL: {mode}/{range_} maximal transform on {len(points)} points, {len(times)} times")
    return SampledFunction(box, h, points=points, values=values, metadata=_metadata(mode, range_, times, box, h))


def maximal_whole_space(F: PCFunction, config: Optional[KernelConfig] = None, mode: str = HEAT,
                        range_: str = GLOBAL, t_grid: Optional[TGrid] = None, h: Optional[float] = None,
                        window: Optional[Box] = None, points: Optional[np.ndarray] = None) -> SampledFunction:
    """Classical maximal transform with the unsigned whole-space kernel."""
    config = config or settings.kernel
    h = h or config.h
    times = t_values(t_grid, range_, config)
    window = window or F.window
    if points is None:
        points = lattice(window, h)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    identity = [(np.eye(F.dimension), 1)]
    values = _evaluate(points, F, identity, times, mode, config)
    return SampledFunction(window, h, points=points, values=values, metadata=_metadata(mode, range_, times, window, h))


def maximal_via_extension(f: PCFunction, chamber: SignedChamber, config: Optional[KernelConfig] = None,
                          mode: str = HEAT, range_: str = GLOBAL, t_grid: Optional[TGrid] = None,
                          h: Optional[float] = None, window: Optional[Box] = None,
                          points: Optional[np.ndarray] = None) -> SampledFunction:
    """M(E_eta f) evaluated on the chamber lattice; equals the eta maximal transform."""
    config = config or settings.kernel
    h = h or config.h
    window = window or f.window
    if points is None:
        points, _ = chamber_lattice(chamber, window, h)
    return maximal_whole_space(eta_extend(f, chamber), config, mode, range_, t_grid, h, window, points)


def _metadata(mode: str, range_: str, times: List[float], window: Box, h: float) -> Dict[str, Any]:
    return {
        "mode": mode,
        "range": range_,
        "t_grid": times,
        "window": {"lo": [str(x) for x in window.lo], "hi": [str(x) for x in window.hi]},
        "h": h,
    }


# ---------------------------------------------------------------------------
# H^1 estimates
# ---------------------------------------------------------------------------

@dataclass
class H1Estimate:
    """Window-relative lattice L^1 sum of a maximal transform."""

    value: float
    mode: str
    range: str
    h: float
    t_grid: List[float]
    window: Dict[str, List[str]]
    points: int
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "mode": self.mode,
            "range": self.range,
            "h": self.h,
            "t_grid": self.t_grid,
            "window": self.window,
            "points": self.points,
            **self.extra,
        }


def _estimate(sampled: SampledFunction, dimension: int, extra: Optional[Dict[str, Any]] = None) -> H1Estimate:
    meta = sampled.metadata
    value = float(np.sum(sampled.values) * sampled.h ** dimension)
    return H1Estimate(value, meta["mode"], meta["range"], sampled.h, meta["t_grid"], meta["window"],
                      len(sampled.values), extra or {})


def h1_norm_estimate(f: PCFunction, chamber: SignedChamber, config: Optional[KernelConfig] = None,
                     mode: str = HEAT, range_: str = GLOBAL, t_grid: Optional[TGrid] = None,
                     h: Optional[float] = None, window: Optional[Box] = None) -> H1Estimate:
    """||M_eta f||_{L^1(C+)} as a lattice sum over window and chamber."""
    sampled = maximal_transform(f, chamber, config, mode, range_, t_grid, h, window)
    estimate = _estimate(sampled, f.dimension, {"order": chamber.order})
    logger.info(f"KERNEL: H1 estimate ({mode}/{range_}) = {estimate.value:.6g} over {estimate.points} points")
    return estimate


def h1_norm_whole_space(F: PCFunction, config: Optional[KernelConfig] = None, mode: str = HEAT,
                        range_: str = GLOBAL, t_grid: Optional[TGrid] = None, h: Optional[float] = None,
                        window: Optional[Box] = None) -> H1Estimate:
    """||M F||_{L^1(window)} with the classical maximal transform."""
    sampled = maximal_whole_space(F, config, mode, range_, t_grid, h, window)
    return _estimate(sampled, F.dimension)
