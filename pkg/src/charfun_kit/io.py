"""JSON tuple and symbol files.

Complex scalars are ``[re, im]`` pairs.  Floats are written with Python's
shortest round-trip repr, so parse then write reproduces a file up to
formatting.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError, UnknownName
from .fock import MultiAnalyticSymbol, word_key
from .tuples import RowContraction, random_ergodic_tuple, scalar_tuple, section7_tuple


def encode_complex(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        z = complex(a)
        return [z.real, z.imag]
    return [encode_complex(x) for x in a]


def decode_complex(obj, field: str, shape: tuple | None = None) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field '{field}': not a nested array of [re, im] pairs") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ParseError(f"field '{field}': complex entries must be [re, im] pairs")
    # set the parts directly: re + 1j * im would lose the sign of a zero
    out = np.empty(arr.shape[:-1], dtype=complex)
    out.real = arr[..., 0]
    out.imag = arr[..., 1]
    if shape is not None and out.shape != tuple(shape):
        raise ParseError(f"field '{field}': expected shape {tuple(shape)}, got {out.shape}")
    return out


def _require(doc: dict, key: str):
    if key not in doc:
        raise ParseError(f"missing field '{key}'")
    return doc[key]


def _int_field(doc: dict, key: str) -> int:
    v = _require(doc, key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ParseError(f"field '{key}': expected a non-negative integer, got {v!r}")
    return v


def loads(text: str, source: str = "<string>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be a JSON object")
    return doc


def tuple_to_doc(A: RowContraction, omega_hint=None, Omega_hint=None) -> dict:
    doc = {"d": A.d, "n": A.n, "matrices": encode_complex(A.A)}
    if omega_hint is not None:
        doc["omega_hint"] = encode_complex(omega_hint)
    if Omega_hint is not None:
        doc["Omega_hint"] = encode_complex(Omega_hint)
    if A.label:
        doc["label"] = A.label
    return doc


def tuple_from_doc(doc: dict) -> tuple[RowContraction, dict]:
    d = _int_field(doc, "d")
    n = _int_field(doc, "n")
    mats = decode_complex(_require(doc, "matrices"), "matrices", (d, n, n))
    hints = {}
    if "omega_hint" in doc:
        hints["omega_hint"] = decode_complex(doc["omega_hint"], "omega_hint", (d,))
    if "Omega_hint" in doc:
        hints["Omega_hint"] = decode_complex(doc["Omega_hint"], "Omega_hint", (n,))
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ParseError("field 'label': expected a string")
    try:
        return RowContraction(mats, label=label), hints
    except ValueError as exc:
        raise ParseError(f"field 'matrices': {exc}") from exc


_CALL = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def builtin(name: str) -> RowContraction:
    """section7 | scalar(d, w1, ..., wd) | random(d, n, seed)"""
    m = _CALL.match(name)
    if not m:
        raise UnknownName(name)
    key, args = m.group(1), m.group(2)
    vals = [a.strip() for a in args.split(",")] if args else []
    try:
        if key == "section7" and not vals:
            return section7_tuple()
        if key == "scalar" and vals:
            d = int(vals[0])
            w = np.array([complex(v.replace(" ", "")) for v in vals[1:]]) if len(vals) > 1 \
                else np.full(d, 1 / np.sqrt(d))
            if w.size != d:
                raise UnknownName(f"scalar({d}, ...) needs {d} entries")
            return scalar_tuple(w / np.linalg.norm(w))
        if key == "random" and len(vals) == 3:
            A, _ = random_ergodic_tuple(int(vals[0]), int(vals[1]), seed=int(vals[2]))
            return RowContraction(A.A, label=f"random({vals[0]},{vals[1]},{vals[2]})")
    except ValueError as exc:
        raise UnknownName(f"bad arguments in {name!r}: {exc}") from exc
    raise UnknownName(f"unknown builtin {name!r}")


def load_tuple(path: str) -> tuple[RowContraction, dict]:
    """Read a tuple file, or a builtin given as ``builtin:NAME``."""
    if path.startswith("builtin:"):
        return builtin(path[len("builtin:"):]), {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return tuple_from_doc(loads(text, path))


def symbol_to_doc(theta: MultiAnalyticSymbol, omega, defect_basis, diagnostics: dict | None = None,
                  extra: dict | None = None) -> dict:
    doc = {
        "d": theta.d,
        "depth": theta.depth,
        "omega": encode_complex(omega),
        "omega_defect_frame": encode_complex(dag_frame(theta.target_frame)),
        "defect_basis": encode_complex(defect_basis),
        "coefficients": [
            {"word": list(w), "matrix": encode_complex(theta.coeffs[w])}
            for w in sorted(theta.coeffs, key=word_key)
        ],
    }
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    if extra:
        doc.update(extra)
    return doc


def dag_frame(F) -> np.ndarray:
    """Frame stored as (d-1) x d rows (the conjugate transpose of the column frame)."""
    return np.conj(np.asarray(F)).T


def symbol_from_doc(doc: dict) -> tuple[MultiAnalyticSymbol, dict]:
    d = _int_field(doc, "d")
    depth = _int_field(doc, "depth")
    omega = decode_complex(_require(doc, "omega"), "omega", (d,))
    rows = decode_complex(_require(doc, "omega_defect_frame"), "omega_defect_frame", (d - 1, d))
    basis = decode_complex(_require(doc, "defect_basis"), "defect_basis")
    if basis.ndim != 2:
        raise ParseError("field 'defect_basis': expected a matrix")
    r = basis.shape[1]
    coeffs = {}
    prev = None
    for k, item in enumerate(_require(doc, "coefficients")):
        if not isinstance(item, dict):
            raise ParseError(f"coefficients[{k}]: expected an object")
        word = tuple(_require(item, "word"))
        if not all(isinstance(a, int) and 1 <= a <= d for a in word):
            raise ParseError(f"coefficients[{k}].word: letters must be integers in 1..{d}")
        if prev is not None and word_key(word) <= word_key(prev):
            raise ParseError(f"coefficients[{k}].word: words must be in canonical order")
        prev = word
        coeffs[word] = decode_complex(_require(item, "matrix"), f"coefficients[{k}].matrix", (d - 1, r))
    try:
        sym = MultiAnalyticSymbol(d=d, depth=depth, source_dim=r, target_dim=d - 1, coeffs=coeffs,
                                  target_frame=dag_frame(rows))
    except (ValueError, DimensionMismatch) as exc:
        raise ParseError(str(exc)) from exc
    return sym, {"omega": omega, "defect_basis": basis, "diagnostics": doc.get("diagnostics")}


def dumps(doc: dict) -> str:
    """One line per top-level field, and one per entry of a coefficient list."""
    lines = []
    for key, val in doc.items():
        if key == "coefficients" and isinstance(val, list):
            body = ",\n".join("  " + json.dumps(item) for item in val)
            text = "[\n" + body + "\n ]" if val else "[]"
        elif isinstance(val, dict):
            text = dumps(val).rstrip("\n").replace("\n", "\n ")
        else:
            text = json.dumps(val)
        lines.append(f" {json.dumps(key)}: {text}")
    return "{\n" + ",\n".join(lines) + "\n}\n"
