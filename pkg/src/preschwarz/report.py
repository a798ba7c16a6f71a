"""Check records and canonical JSON reports.

A report must be byte-for-byte reproducible from its inputs, so it is
serialized by hand: keys sorted, floats printed with 17 significant
digits, complex numbers as ``[re, im]``, non-finite floats as strings.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__

SCHEMA = "preschwarz.report/1"

_RELATIONS = {
    "<=": lambda r, t: r <= t,
    ">": lambda r, t: r > t,
}


@dataclass
class Check:
    """One verdict: ``residual <relation> tolerance``.

    ``error`` holds the machine-readable code of a library error that
    prevented the computation; such a check always fails.
    """

    name: str
    residual: float
    tolerance: float
    relation: str = "<="
    witnesses: dict = field(default_factory=dict)
    error: str | None = None
    criterion: int | None = None

    @property
    def passed(self) -> bool:
        if self.error is not None or math.isnan(self.residual):
            return False
        return _RELATIONS[self.relation](self.residual, self.tolerance)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "verdict": "pass" if self.passed else "fail",
            "witnesses": self.witnesses,
        }
        if self.criterion is not None:
            out["criterion"] = self.criterion
        if self.error is not None:
            out["error"] = self.error
        return out


# ---------------------------------------------------------------------------
# canonical serialization

def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True or obj is False:
        out.append("true" if obj else "false")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if bool(obj) else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _encode([obj.real, obj.imag], out)
    elif isinstance(obj, str):
        out.append(_string(obj))
    elif isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        out.append("{")
        for n, (k, v) in enumerate(items):
            if n:
                out.append(",")
            out.append(_string(k))
            out.append(":")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for n, v in enumerate(obj):
            if n:
                out.append(",")
            _encode(v, out)
        out.append("]")
    elif hasattr(obj, "to_json"):
        _encode(obj.to_json(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _string(s: str) -> str:
    esc = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}
    body = "".join(esc.get(c, c if ord(c) >= 0x20 else f"\\u{ord(c):04x}") for c in s)
    return f'"{body}"'


def canonical_dumps(obj: Any) -> str:
    parts: list[str] = []
    _encode(obj, parts)
    return "".join(parts)


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode("utf-8")).hexdigest()


def make_report(command: str, inputs: Any, checks: list[Check] | None = None,
                seed: int | None = None, results: Any = None) -> dict:
    checks = checks or []
    return {
        "schema": SCHEMA,
        "command": command,
        "engine_version": __version__,
        "seed": seed,
        "input_digest": digest(inputs),
        "inputs": inputs,
        "results": results,
        "checks": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks),
    }
