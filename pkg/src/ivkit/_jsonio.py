"""Byte-stable JSON emission.

Floats are printed with 17 significant digits so equal values always
serialize to the same bytes and round-trip exactly.  Infinite endpoints are
emitted as the strings "inf" / "-inf" (JSON has no infinity literal) and
NaN as null.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np


def _format_float(value: float) -> str:
    if math.isnan(value):
        return "null"
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return format(value, ".17g")


def _escape(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps(obj, indent: int = 0, _level: int = 0) -> str:
    """Serialize to JSON text with stable float formatting."""
    pad = "" if indent == 0 else "\n" + " " * indent * (_level + 1)
    close_pad = "" if indent == 0 else "\n" + " " * indent * _level
    sep = "," if indent == 0 else ","

    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return _escape(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [dumps(v, indent, _level + 1) for v in obj]
        if not items:
            return "[]"
        return "[" + pad + (sep + pad).join(items) + close_pad + "]"
    if isinstance(obj, dict) or hasattr(obj, "items"):
        items = [
            _escape(str(key)) + ": " + dumps(value, indent, _level + 1)
            for key, value in obj.items()
        ]
        if not items:
            return "{}"
        return "{" + pad + (sep + pad).join(items) + close_pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
