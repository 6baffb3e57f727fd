"""JSON formats for matrices, generator words and reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .symplectic import Chirp, Dilation, Fourier, GeneratorWord


def _reject_constant(name):
    raise InvalidInput(f"non-finite number {name} in input")


def load_json(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _real_matrix(obj, what: str) -> np.ndarray:
    try:
        M = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInput(f"{what} must be a rectangular array of numbers") from None
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise InvalidInput(f"{what} must be two-dimensional")
    if not np.all(np.isfinite(M)):
        raise InvalidInput(f"{what} has non-finite entries")
    return M


def parse_matrix(obj) -> np.ndarray:
    """A bare nested list or an object with a "matrix" entry."""
    if isinstance(obj, dict):
        if "matrix" not in obj:
            raise InvalidInput('matrix file needs a "matrix" entry')
        obj = obj["matrix"]
    return _real_matrix(obj, "matrix")


def parse_factor(item: dict, d: int):
    if not isinstance(item, dict) or "type" not in item:
        raise InvalidInput(f"word factor must be an object with a type, got {item!r}")
    kind = item["type"]
    if kind == "J":
        return Fourier(int(item.get("d", d)))
    if kind == "VP":
        return Chirp(_real_matrix(item.get("P"), "P"))
    if kind == "DE":
        return Dilation(_real_matrix(item.get("E"), "E"))
    raise InvalidInput(f"unknown factor type {kind!r}")


def _infer_dim(items) -> int:
    for item in items:
        if isinstance(item, dict):
            if item.get("type") == "VP" and item.get("P") is not None:
                return _real_matrix(item["P"], "P").shape[0]
            if item.get("type") == "DE" and item.get("E") is not None:
                return _real_matrix(item["E"], "E").shape[0]
            if item.get("type") == "J" and "d" in item:
                return int(item["d"])
    return 1


def parse_word(obj) -> GeneratorWord:
    """A list of factors, or {"word": [...], "d": n}.

    Fourier factors take their dimension from "d" or from the other factors,
    falling back to 1.
    """
    d = None
    if isinstance(obj, dict):
        d = obj.get("d")
        obj = obj.get("word")
    if not isinstance(obj, list):
        raise InvalidInput("word must be a JSON list of factors")
    d = int(d) if d is not None else _infer_dim(obj)
    factors = tuple(parse_factor(item, d) for item in obj)
    try:
        return GeneratorWord(factors, d=d)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None


def read_matrix(path) -> np.ndarray:
    return parse_matrix(load_json(path))


def read_word(path) -> GeneratorWord:
    return parse_word(load_json(path))


def word_to_json(w: GeneratorWord) -> dict:
    items = []
    for g in w:
        if isinstance(g, Fourier):
            items.append({"type": "J", "d": int(g.d)})
        elif isinstance(g, Chirp):
            items.append({"type": "VP", "P": to_jsonable(g.P)})
        else:
            items.append({"type": "DE", "E": to_jsonable(g.E)})
    return {"d": int(w.d), "word": items}


def to_jsonable(obj):
    """Plain Python containers and floats; numpy values are converted."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(report) -> str:
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report, path=None, stream=None) -> str:
    text = dumps(report)
    if path is None:
        if stream is not None:
            stream.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
    return text
