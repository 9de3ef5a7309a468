"""JSON and CSV codecs for root systems, cubes, PCFunctions, atom lists and reports.

Exact values travel as ``"p/q"`` strings, floats as numbers and complex
values as ``{"re": .., "im": ..}``. Every dump is canonical (sorted keys,
fixed separators) so emitted JSON re-parses to an equal value.
"""

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from atoms import Atom, AtomList
from config import settings
from errors import InvalidArgument
from geometry import EtaVector, RootSystem, SignedChamber, build_chamber
from gridfn import Box, DyadicCube, PCFunction, SampledFunction
from validator import AtomKind

Scalar = Union[int, float, str]


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

class ComplexValue(BaseModel):
    model_config = ConfigDict(extra="forbid")

    re: float
    im: float


def encode_value(v: Any) -> Any:
    if isinstance(v, bool):
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(Fraction(int(v)))
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(np.real(v)), "im": float(np.imag(v))}
    if isinstance(v, (float, np.floating)):
        return float(v) if np.isfinite(v) else str(float(v))
    raise InvalidArgument(f"Cannot encode value {v!r}")


def decode_value(v: Any) -> Any:
    """JSON value -> Fraction (int or "p/q"), float or complex."""
    if isinstance(v, ComplexValue):
        return complex(v.re, v.im)
    if isinstance(v, dict):
        return complex(float(v["re"]), float(v["im"]))
    if isinstance(v, bool):
        raise InvalidArgument(f"Boolean is not a value: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidArgument(f"Not a rational literal: {v!r}")
    return float(v)


def to_jsonable(obj: Any) -> Any:
    """Recursively convert library objects to JSON-ready data."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, Box):
        return obj.describe()
    if isinstance(obj, EtaVector):
        return list(obj.bits)
    if isinstance(obj, PCFunction):
        return function_to_dict(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, Fraction):
        return int(obj)
    return encode_value(obj)


def dumps(obj: Any, indent: Optional[int] = 2) -> str:
    separators = (",", ": ") if indent else (",", ":")
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent, separators=separators, allow_nan=False)


def write_json(path: Union[str, Path], obj: Any) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")
    logger.debug(f"Wrote JSON to {path}")


def parse_json(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidArgument(f"{source}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}")


def read_json(path: Union[str, Path]) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidArgument(f"Cannot read {path}: {e}")
    return parse_json(text, str(path))


def _validate(model: type, data: Any, what: str):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first["loc"])
        raise InvalidArgument(f"Invalid {what} at {location or '<root>'}: {first['msg']}")


# ---------------------------------------------------------------------------
# Root systems
# ---------------------------------------------------------------------------

class RootSystemDescriptor(BaseModel):
    """{"dimension": d, "roots": [[...], ...], "basepoint": [...], "eta": [+-1, ...]}"""

    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(..., ge=1, le=16, description="Ambient dimension")
    roots: List[List[Scalar]] = Field(..., min_length=1, description="Root vectors")
    basepoint: List[Scalar] = Field(..., description="Point selecting the positive chamber")
    eta: Optional[List[int]] = Field(default=None, description="Wall signs in simple-root order")

    def build(self) -> SignedChamber:
        system = RootSystem(self.roots, self.dimension)
        return build_chamber(system, self.basepoint, self.eta)


def chamber_from_dict(data: Any) -> SignedChamber:
    return _validate(RootSystemDescriptor, data, "root-system descriptor").build()


def load_chamber(path: Union[str, Path]) -> SignedChamber:
    return chamber_from_dict(read_json(path))


def _vector(v: np.ndarray) -> List[Any]:
    return [str(x) if isinstance(x, Fraction) else float(x) for x in v]


def chamber_to_dict(chamber: SignedChamber, elements: bool = False) -> Dict[str, Any]:
    out = {
        "dimension": chamber.dimension,
        "order": chamber.order,
        "exact": chamber.system.exact,
        "simple_roots": [_vector(a) for a in chamber.simple_roots],
        "positive_roots": len(chamber.positive_roots),
        "wall_signs": list(chamber.eta_on_generators),
    }
    if chamber.is_orthogonal:
        out["axes"] = list(chamber.axes)
        out["eta_bits"] = list(chamber.eta_bits)
    if elements:
        out["elements"] = [
            {"matrix": [_vector(row) for row in g.matrix], "word": list(g.word), "sign": g.sign}
            for g in chamber.elements
        ]
    return out


# ---------------------------------------------------------------------------
# Cubes and PCFunctions
# ---------------------------------------------------------------------------

class CubeDescriptor(BaseModel):
    """{"lo": [...], "hi": [...]} or {"corner": [...], "side": s}."""

    model_config = ConfigDict(extra="forbid")

    lo: Optional[List[Scalar]] = None
    hi: Optional[List[Scalar]] = None
    corner: Optional[List[Scalar]] = None
    side: Optional[Scalar] = None

    @model_validator(mode="after")
    def _one_form(self) -> "CubeDescriptor":
        box_form = self.lo is not None and self.hi is not None
        cube_form = self.corner is not None and self.side is not None
        if box_form == cube_form:
            raise ValueError("give either lo/hi or corner/side")
        return self

    def build(self) -> Box:
        if self.corner is not None:
            return DyadicCube.from_corner([decode_value(x) for x in self.corner], decode_value(self.side))
        return Box(tuple(decode_value(x) for x in self.lo), tuple(decode_value(x) for x in self.hi))


class CellDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid")

    corner: List[Scalar]
    level: int = Field(..., ge=0, le=56)
    side_num: Union[int, List[int]] = Field(..., description="Side in units of 2^-level; a list for boxes")
    value: Union[int, float, str, ComplexValue]

    def build(self) -> Box:
        corner = [decode_value(x) for x in self.corner]
        nums = self.side_num if isinstance(self.side_num, list) else [self.side_num] * len(corner)
        if len(nums) != len(corner) or any(n < 1 for n in nums):
            raise InvalidArgument(f"Cell side_num {self.side_num} does not fit corner {self.corner}")
        scale = Fraction(1, 1 << self.level)
        return Box(tuple(corner), tuple(c + n * scale for c, n in zip(corner, nums)))


class PCFunctionDescriptor(BaseModel):
    """{"window": cube, "cells": [{"corner", "level", "side_num", "value"}, ...]}"""

    model_config = ConfigDict(extra="forbid")

    window: Optional[CubeDescriptor] = None
    cells: List[CellDescriptor] = Field(default_factory=list)
    value_mode: Optional[str] = Field(default=None, pattern="^(exact|float)$")
    dimension: Optional[int] = Field(default=None, ge=1)

    def build(self) -> PCFunction:
        window = self.window.build() if self.window is not None else None
        d = self.dimension or (window.dimension if window is not None else None)
        if d is None and self.cells:
            d = len(self.cells[0].corner)
        if d is None:
            raise InvalidArgument("Cannot infer the dimension of an empty function without a window")
        window = window or Box.window(settings.grid.window_half, d)
        cells = [(c.build(), decode_value(c.value)) for c in self.cells]
        if not cells:
            return PCFunction.zero(d, window, self.value_mode or "exact")
        return PCFunction.from_cells(cells, window=window, value_mode=self.value_mode)


def function_from_dict(data: Any) -> PCFunction:
    return _validate(PCFunctionDescriptor, data, "PCFunction").build()


def load_function(path: Union[str, Path]) -> PCFunction:
    return function_from_dict(read_json(path))


def function_to_dict(f: PCFunction) -> Dict[str, Any]:
    scale = 1 << f.level
    cells = []
    for i in range(len(f)):
        nums = [int(x) for x in f.hi[i] - f.lo[i]]
        cells.append({
            "corner": [str(Fraction(int(x), scale)) for x in f.lo[i]],
            "level": f.level,
            "side_num": nums[0] if len(set(nums)) == 1 else nums,
            "value": encode_value(f.values[i]),
        })
    return {"window": f.window.describe(), "value_mode": f.value_mode, "dimension": f.dimension, "cells": cells}


def function_to_frame(f: PCFunction) -> pd.DataFrame:
    """One row per cell: lo_i, hi_i per axis and the value."""
    scale = float(1 << f.level)
    data: Dict[str, Any] = {}
    for a in range(f.dimension):
        data[f"lo_{a}"] = f.lo[:, a] / scale
        data[f"hi_{a}"] = f.hi[:, a] / scale
    if f.is_complex:
        data["value_re"] = np.real(f.values).astype(float)
        data["value_im"] = np.imag(f.values).astype(float)
    else:
        data["value"] = np.asarray(f.values).astype(float) if len(f) else np.zeros(0)
    return pd.DataFrame(data)


def sampled_to_frame(sampled: SampledFunction) -> pd.DataFrame:
    """Lattice samples: x_0..x_{d-1} and value."""
    if sampled.points is None or sampled.values is None:
        raise InvalidArgument("Sampled function carries no lattice samples")
    points = np.atleast_2d(sampled.points)
    data = {f"x_{a}": points[:, a] for a in range(points.shape[1])}
    data["value"] = np.asarray(sampled.values, dtype=float)
    return pd.DataFrame(data)


def frame_to_csv(frame: pd.DataFrame, comment: Optional[str] = None) -> str:
    """CSV text; an optional leading ``# comment`` line (read back with ``comment="#"``)."""
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return (f"# {comment}\n" if comment else "") + body


def write_csv(path: Union[str, Path], frame: pd.DataFrame, comment: Optional[str] = None) -> None:
    Path(path).write_text(frame_to_csv(frame, comment), encoding="utf-8")
    logger.debug(f"Wrote {len(frame)} rows to {path}")


# ---------------------------------------------------------------------------
# Atom lists
# ---------------------------------------------------------------------------

class TermDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid")

    coeff: Union[int, float, str, ComplexValue]
    kind: AtomKind
    I0: List[int] = Field(default_factory=list)
    I1: List[int] = Field(default_factory=list)
    cube: CubeDescriptor
    payload: PCFunctionDescriptor

    def build(self) -> Any:
        cube = self.cube.build()
        if not cube.is_cube:
            raise InvalidArgument(f"Atom support {cube} is not a cube")
        cube = DyadicCube(cube.lo, cube.hi)
        payload = self.payload
        if payload.dimension is None and payload.window is None:
            payload = payload.model_copy(update={"dimension": cube.dimension})
        atom = Atom(payload.build(), cube, tuple(sorted(self.I0)), tuple(sorted(self.I1)), self.kind)
        return decode_value(self.coeff), atom


class AtomListDescriptor(BaseModel):
    """{"eta": [...], "mode": "global|local", "terms": [...]}"""

    model_config = ConfigDict(extra="forbid")

    eta: Optional[List[int]] = None
    mode: str = Field(default="global", pattern="^(global|local)$")
    dimension: Optional[int] = Field(default=None, ge=1)
    terms: List[TermDescriptor] = Field(default_factory=list)
    residual: Optional[PCFunctionDescriptor] = None
    ledger: List[Dict[str, Any]] = Field(default_factory=list)
    l1: Optional[Union[str, float]] = None

    def build(self) -> AtomList:
        terms = [t.build() for t in self.terms]
        d = self.dimension or (terms[0][1].dimension if terms else None)
        if d is None:
            raise InvalidArgument("Cannot infer the dimension of an empty atom list")
        for i, (_, a) in enumerate(terms):
            if a.dimension != d:
                raise InvalidArgument(f"Term {i} has dimension {a.dimension}, expected {d}")
        eta = EtaVector(tuple(self.eta)) if self.eta is not None else None
        residual = self.residual.build() if self.residual is not None else None
        return AtomList(terms, d, eta, self.mode, residual, list(self.ledger))


def atom_list_from_dict(data: Any) -> AtomList:
    return _validate(AtomListDescriptor, data, "AtomList").build()


def load_atom_list(path: Union[str, Path]) -> AtomList:
    return atom_list_from_dict(read_json(path))


def atom_list_to_dict(atom_list: AtomList) -> Dict[str, Any]:
    return {
        "eta": None if atom_list.eta is None else list(atom_list.eta.bits),
        "mode": atom_list.mode,
        "dimension": atom_list.dimension,
        "l1": str(atom_list.l1) if isinstance(atom_list.l1, Fraction) else float(atom_list.l1),
        "terms": [
            {
                "coeff": encode_value(c),
                "kind": a.kind.value,
                "I0": list(a.I0),
                "I1": list(a.I1),
                "cube": a.cube.describe(),
                "payload": function_to_dict(a.payload),
            }
            for c, a in atom_list.terms
        ],
        "residual": None if atom_list.residual is None else function_to_dict(atom_list.residual),
        "ledger": to_jsonable(atom_list.ledger),
    }


def save_atom_list(path: Union[str, Path], atom_list: AtomList) -> None:
    write_json(path, atom_list_to_dict(atom_list))
