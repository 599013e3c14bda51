"""JSON documents for every artifact the CLI reads or writes.

Five document kinds, all plain JSON with row-major nested arrays:

  matrix polynomial   {"p": int, "coeffs": [[[...]] ...]}
  moment sequence     {"p": int, "blocks": [[[...]] ...]}
  atomic measure      {"p": int, "atoms": [{"x": float, "weight": [[...]]}]}
  set description     {"kind": "interval_point", "a":, "b":, "c":}
                      {"kind": "halfline_point", "a":, "b":}
  certificate         {"p":, "degree":, "set": {...}, "generators": [[...]],
                       "grams": [[[...]] ...], "basis_degrees": [...]}

Loading validates shapes, finiteness, and symmetry (matrices asymmetric
beyond 1e-12 relative are rejected); any violation raises DocumentError so
the CLI can map it to the invalid-input exit code.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .certificates import Certificate, CertificateTerm
from .errors import InvalidInputError
from .moments import AtomicMatrixMeasure, MomentSequence, SetDescription
from .polynomials import MatrixPolynomial, ScalarPoly

__all__ = [
    "DocumentError",
    "load_json",
    "dump_json",
    "sniff_kind",
    "load_matrix_polynomial",
    "dump_matrix_polynomial",
    "load_moment_sequence",
    "dump_moment_sequence",
    "load_measure",
    "dump_measure",
    "load_set",
    "dump_set",
    "load_certificate",
    "dump_certificate",
]

LOAD_SYM_REL = 1e-12


class DocumentError(InvalidInputError):
    """A JSON document does not match its schema."""


def load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from exc


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DocumentError(msg)


def _number(obj: Any, name: str) -> float:
    _require(isinstance(obj, (int, float)) and not isinstance(obj, bool), f"{name} must be a number")
    x = float(obj)
    _require(np.isfinite(x), f"{name} must be finite")
    return x


def _int(obj: Any, name: str) -> int:
    _require(isinstance(obj, int) and not isinstance(obj, bool), f"{name} must be an integer")
    return obj


def _matrix(obj: Any, p: int, name: str) -> np.ndarray:
    try:
        m = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{name} is not a numeric matrix") from exc
    _require(m.shape == (p, p), f"{name} must be {p}x{p}, got {m.shape}")
    _require(bool(np.all(np.isfinite(m))), f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(m).max()))
    _require(
        float(np.abs(m - m.T).max()) <= LOAD_SYM_REL * scale,
        f"{name} is not symmetric",
    )
    return (m + m.T) / 2.0


def _matrix_list(obj: Any, p: int, name: str) -> np.ndarray:
    _require(isinstance(obj, list) and len(obj) > 0, f"{name} must be a nonempty list")
    return np.array([_matrix(entry, p, f"{name}[{i}]") for i, entry in enumerate(obj)])


def sniff_kind(doc: Any) -> str:
    """Best-effort document kind from the top-level keys."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    keys = set(doc)
    if "grams" in keys:
        return "certificate"
    if "coeffs" in keys:
        return "matrix_polynomial"
    if "blocks" in keys:
        return "moment_sequence"
    if "atoms" in keys:
        return "measure"
    if "kind" in keys:
        return "set"
    raise DocumentError(f"unrecognized document with keys {sorted(keys)}")


def load_matrix_polynomial(doc: Any) -> MatrixPolynomial:
    _require(isinstance(doc, dict), "polynomial document must be an object")
    p = _int(doc.get("p"), "p")
    _require(p >= 1, "p must be positive")
    coeffs = _matrix_list(doc.get("coeffs"), p, "coeffs")
    return MatrixPolynomial(coeffs)


def dump_matrix_polynomial(f: MatrixPolynomial) -> dict:
    return {"p": f.p, "coeffs": f.coeffs.tolist()}


def load_moment_sequence(doc: Any) -> MomentSequence:
    _require(isinstance(doc, dict), "moment document must be an object")
    p = _int(doc.get("p"), "p")
    _require(p >= 1, "p must be positive")
    blocks = _matrix_list(doc.get("blocks"), p, "blocks")
    return MomentSequence(blocks)


def dump_moment_sequence(gamma: MomentSequence) -> dict:
    return {"p": gamma.p, "blocks": gamma.blocks.tolist()}


def load_measure(doc: Any) -> AtomicMatrixMeasure:
    _require(isinstance(doc, dict), "measure document must be an object")
    p = _int(doc.get("p"), "p")
    _require(p >= 1, "p must be positive")
    atoms = doc.get("atoms")
    _require(isinstance(atoms, list), "atoms must be a list")
    if not atoms:
        return AtomicMatrixMeasure.empty(p)
    locs, weights = [], []
    for i, atom in enumerate(atoms):
        _require(isinstance(atom, dict), f"atoms[{i}] must be an object")
        locs.append(_number(atom.get("x"), f"atoms[{i}].x"))
        weights.append(_matrix(atom.get("weight"), p, f"atoms[{i}].weight"))
    try:
        return AtomicMatrixMeasure(locs, weights)
    except InvalidInputError as exc:
        raise DocumentError(str(exc)) from exc


def dump_measure(mu: AtomicMatrixMeasure) -> dict:
    return {
        "p": mu.p,
        "atoms": [
            {"x": float(x), "weight": w.tolist()}
            for x, w in zip(mu.locations, mu.weights)
        ],
    }


def load_set(doc: Any) -> SetDescription:
    _require(isinstance(doc, dict), "set document must be an object")
    kind = doc.get("kind")
    if kind == "interval_point":
        a, b, c = (_number(doc.get(k), k) for k in ("a", "b", "c"))
        try:
            return SetDescription.interval_point(a, b, c)
        except InvalidInputError as exc:
            raise DocumentError(str(exc)) from exc
    if kind == "halfline_point":
        a, b = (_number(doc.get(k), k) for k in ("a", "b"))
        try:
            return SetDescription.halfline_point(a, b)
        except InvalidInputError as exc:
            raise DocumentError(str(exc)) from exc
    raise DocumentError(f"unknown set kind {kind!r}")


def dump_set(kset: SetDescription) -> dict:
    if kset.kind == "interval_point":
        return {"kind": kset.kind, "a": kset.a, "b": kset.b, "c": kset.c}
    return {"kind": kset.kind, "a": kset.a, "b": kset.b}


def load_certificate(doc: Any) -> Certificate:
    _require(isinstance(doc, dict), "certificate document must be an object")
    p = _int(doc.get("p"), "p")
    degree = _int(doc.get("degree"), "degree")
    _require(p >= 1 and degree >= 0, "need p >= 1 and degree >= 0")
    kset = load_set(doc.get("set"))
    gens = doc.get("generators")
    grams = doc.get("grams")
    degrees = doc.get("basis_degrees")
    _require(
        isinstance(gens, list) and isinstance(grams, list) and isinstance(degrees, list),
        "generators, grams and basis_degrees must be lists",
    )
    _require(
        len(gens) == len(grams) == len(degrees),
        "generators, grams and basis_degrees must have equal length",
    )
    terms = []
    for i, (gc, gm, d) in enumerate(zip(gens, grams, degrees)):
        _require(isinstance(gc, list) and gc, f"generators[{i}] must be a coefficient list")
        coeffs = [_number(x, f"generators[{i}][{j}]") for j, x in enumerate(gc)]
        di = _int(d, f"basis_degrees[{i}]")
        _require(di >= 0, f"basis_degrees[{i}] must be nonnegative")
        size = (di + 1) * p
        try:
            gram = np.asarray(gm, dtype=float)
        except (TypeError, ValueError) as exc:
            raise DocumentError(f"grams[{i}] is not a numeric matrix") from exc
        _require(gram.shape == (size, size), f"grams[{i}] must be {size}x{size}")
        _require(bool(np.all(np.isfinite(gram))), f"grams[{i}] has non-finite entries")
        scale = max(1.0, float(np.abs(gram).max()))
        _require(
            float(np.abs(gram - gram.T).max()) <= LOAD_SYM_REL * scale,
            f"grams[{i}] is not symmetric",
        )
        terms.append(CertificateTerm(ScalarPoly(coeffs), gram, di))
    try:
        return Certificate(kset, degree, p, terms)
    except InvalidInputError as exc:
        raise DocumentError(str(exc)) from exc


def dump_certificate(cert: Certificate) -> dict:
    return {
        "p": cert.p,
        "degree": cert.degree,
        "set": dump_set(cert.kset),
        "generators": [t.generator.coeffs.tolist() for t in cert.terms],
        "grams": [t.gram.tolist() for t in cert.terms],
        "basis_degrees": [t.basis_degree for t in cert.terms],
    }
