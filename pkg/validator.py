"""Atom validator: checks the defining clauses of every atom kind."""

import argparse
import json
import sys
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
from loguru import logger

from config import settings


class AtomKind(Enum):
    """Atom kinds of the decomposition pipelines."""
    A = "A"
    B = "B"
    LOCAL_A = "localA"
    LOCAL_B = "localB"
    CLASSICAL = "classical"
    LOCAL_CLASSICAL = "localClassical"

    @property
    def is_local(self) -> bool:
        return self in (AtomKind.LOCAL_A, AtomKind.LOCAL_B, AtomKind.LOCAL_CLASSICAL)

    @property
    def is_classical(self) -> bool:
        return self in (AtomKind.CLASSICAL, AtomKind.LOCAL_CLASSICAL)


class ValidationMode(Enum):
    """Global atoms or local atoms."""
    GLOBAL = "global"
    LOCAL = "local"


class AtomValidator:
    """Validate atoms and atom lists against their declared kinds."""

    # Clause names, in checking order
    CLAUSES = (
        "walls",
        "support",
        "cone",
        "size",
        "double-cube",
        "quadruple-cube",
        "cancellation",
        "local-side",
        "l1",
    )

    def __init__(self, mode: ValidationMode = ValidationMode.GLOBAL, float_tol: Optional[float] = None):
        """Initialize atom validator."""
        self.mode = mode
        self.float_tol = settings.atoms.float_tol if float_tol is None else float_tol
        logger.debug(f"ATOMS: validator initialized in {mode.value} mode")

    def validate_atom(self, atom) -> Dict[str, Any]:
        """
        Check every clause of the atom's kind.

        Args:
            atom: object with payload, cube, I0, I1 and kind attributes

        Returns:
            Dictionary with ``valid``, the first violated ``clause`` with its
            offending ``quantity``, and all ``errors``/``warnings``
        """
        result = {
            "valid": True,
            "kind": atom.kind.value,
            "clause": None,
            "quantity": None,
            "errors": [],
            "warnings": [],
        }

        try:
            exact = atom.payload.is_exact
            if not exact:
                result["warnings"].append("Float payload: clauses checked with relative tolerance")
            if self.mode == ValidationMode.GLOBAL and atom.kind.is_local:
                self._fail(result, "walls", atom.kind.value, f"Local kind {atom.kind.value} is not a global atom")
                return result

            for clause, check in (
                ("walls", self._validate_walls),
                ("support", self._validate_support),
                ("cone", self._validate_cone),
                ("size", self._validate_size),
                ("double-cube", self._validate_double),
                ("quadruple-cube", self._validate_quadruple),
                ("cancellation", self._validate_cancellation),
                ("local-side", self._validate_local_side),
                ("l1", self._validate_l1),
            ):
                failure = check(atom)
                if failure is not None:
                    quantity, message = failure
                    self._fail(result, clause, quantity, message)

        except Exception as e:
            logger.error(f"Error validating atom: {e}")
            result["valid"] = False
            result["errors"].append(f"Validation error: {str(e)}")

        return result

    def validate_list(self, atoms: Iterable, coefficients: Optional[Iterable] = None) -> Dict[str, Any]:
        """Validate every atom of a list; reports the first invalid index."""
        result = {
            "valid": True,
            "errors": [],
            "warnings": [],
            "first_invalid": None,
            "counts": {},
            "atom_reports": [],
        }
        for i, atom in enumerate(atoms):
            report = self.validate_atom(atom)
            result["atom_reports"].append(report)
            result["counts"][atom.kind.value] = result["counts"].get(atom.kind.value, 0) + 1
            if not report["valid"]:
                if result["valid"]:
                    result["first_invalid"] = i
                result["valid"] = False
                result["errors"].append(f"Atom {i}: {report['errors'][0]}")
        if coefficients is not None:
            result["l1"] = str(sum((abs(c) for c in coefficients), Fraction(0)))
        return result

    @staticmethod
    def _fail(result: Dict[str, Any], clause: str, quantity: Any, message: str) -> None:
        if result["valid"]:
            result["clause"] = clause
            result["quantity"] = _display(quantity)
        result["valid"] = False
        result["errors"].append(message)

    def _le(self, a, b, exact: bool) -> bool:
        if exact:
            return a <= b
        return float(a) <= float(b) * (1.0 + self.float_tol) + self.float_tol

    def _is_zero(self, value, scale, exact: bool) -> bool:
        if exact:
            return value == 0
        return abs(complex(value)) <= self.float_tol * max(1.0, float(scale))

    # -- clauses -----------------------------------------------------------------------
    def _validate_walls(self, atom):
        d = atom.cube.dimension
        overlap = set(atom.I0) & set(atom.I1)
        if overlap:
            return sorted(overlap), f"Wall sets I0 and I1 share axes {sorted(overlap)}"
        bad = [i for i in list(atom.I0) + list(atom.I1) if not 0 <= i < d]
        if bad:
            return bad, f"Wall axes {bad} are outside 0..{d - 1}"
        if not atom.cube.is_cube:
            return [str(s) for s in atom.cube.sides], "Supporting box is not a cube"
        return None

    def _validate_support(self, atom):
        payload = atom.payload.drop_zeros()
        if len(payload) == 0:
            return None
        support = payload.support_box()
        if not atom.cube.contains_box(support):
            return str(support), f"Payload support {support} is not inside the cube {atom.cube}"
        return None

    def _validate_cone(self, atom):
        bad = [i for i in sorted(set(atom.I0) | set(atom.I1)) if atom.cube.lo[i] < 0]
        if bad:
            return [str(atom.cube.lo[i]) for i in bad], f"Cube {atom.cube} leaves the cone across axes {bad}"
        return None

    def _validate_size(self, atom):
        exact = atom.payload.is_exact
        product = atom.payload.l2_squared() * (atom.cube.volume if exact else float(atom.cube.volume))
        if not self._le(product, 1, exact):
            return product, f"Size violated: ||a||_2^2 |Q| = {_display(product)} > 1"
        return None

    def _validate_double(self, atom):
        if atom.kind not in (AtomKind.B, AtomKind.LOCAL_B):
            return None
        if atom.kind == AtomKind.LOCAL_B and atom.cube.side > 1:
            return None
        double = atom.cube.double()
        bad = [i for i in atom.I1 if double.lo[i] < 0]
        if bad:
            return [str(double.lo[i]) for i in bad], f"2Q leaves the cone across I1 axes {bad}"
        return None

    def _validate_quadruple(self, atom):
        quad = atom.cube.quadruple()
        if atom.kind in (AtomKind.A, AtomKind.LOCAL_A):
            bad = [i for i in atom.I1 if quad.lo[i] < 0]
            if bad:
                return [str(quad.lo[i]) for i in bad], f"4Q leaves the cone across I1 axes {bad}"
        elif atom.kind == AtomKind.B or (atom.kind == AtomKind.LOCAL_B and atom.cube.side <= 1):
            if not any(quad.lo[i] < 0 for i in atom.I1):
                return [str(quad.lo[i]) for i in atom.I1], "4Q stays inside the cone; not a B-atom"
        return None

    def _validate_cancellation(self, atom):
        needs_zero = atom.kind in (AtomKind.A, AtomKind.LOCAL_A, AtomKind.CLASSICAL) or (
            atom.kind == AtomKind.LOCAL_CLASSICAL and atom.cube.side <= 1
        )
        if not needs_zero:
            return None
        exact = atom.payload.is_exact
        integral = atom.payload.integral()
        if not self._is_zero(integral, atom.payload.l1(), exact):
            return integral, f"Cancellation violated: integral = {_display(integral)}"
        return None

    def _validate_local_side(self, atom):
        if atom.kind == AtomKind.LOCAL_A and atom.cube.side > 1:
            return str(atom.cube.side), f"Local A-atom cube side {atom.cube.side} exceeds 1"
        return None

    def _validate_l1(self, atom):
        exact = atom.payload.is_exact
        l1 = atom.payload.l1()
        if not self._le(l1, 1, exact):
            return l1, f"L1 norm {_display(l1)} exceeds 1"
        return None


def _display(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(np.real(value)), "im": float(np.imag(value))}
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def validate_atom(atom, mode: str = "global") -> Dict[str, Any]:
    """Validate one atom; never raises."""
    return AtomValidator(ValidationMode(mode)).validate_atom(atom)


def main(argv: Optional[List[str]] = None) -> int:
    """Validate an AtomList JSON file and print the report."""
    from adapters.serialization import load_atom_list

    parser = argparse.ArgumentParser(description="Validate every atom of an AtomList JSON file")
    parser.add_argument("atoms", help="AtomList JSON file")
    parser.add_argument("--mode", choices=[m.value for m in ValidationMode], default=None,
                        help="Override the list's mode (default: the mode stored in the file)")
    args = parser.parse_args(argv)

    atom_list = load_atom_list(args.atoms)
    mode = ValidationMode(args.mode or atom_list.mode)
    result = AtomValidator(mode).validate_list([a for _, a in atom_list.terms], [c for c, _ in atom_list.terms])
    result.pop("atom_reports")
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0 if result["valid"] else 1


if __name__ == "__main__":
    sys.exit(main())
