"""Runtime values: int, float, bool, str, null (None) and lists (tuples)."""

from __future__ import annotations

import json
import math
import struct

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


def tag(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "string"
    if isinstance(v, tuple):
        return "list"
    raise TypeError(f"not a minilang value: {v!r}")


def values_equal(a, b) -> bool:
    """Structural equality with tags; floats compare bit-for-bit."""
    ta, tb = tag(a), tag(b)
    if ta != tb:
        return False
    if ta == "float":
        return struct.pack("<d", a) == struct.pack("<d", b)
    if ta == "list":
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def is_number(v) -> bool:
    return tag(v) in ("int", "float")


def render_value(v) -> str:
    """Source text for a value (non-finite floats have no literal form)."""
    t = tag(v)
    if t == "null":
        return "null"
    if t == "bool":
        return "true" if v else "false"
    if t == "int":
        return str(v)
    if t == "float":
        if not math.isfinite(v):
            return repr(v)
        text = repr(v)
        return text if any(c in text for c in ".en") else text + ".0"
    if t == "string":
        return json.dumps(v)
    return "[" + ", ".join(render_value(x) for x in v) + "]"


def to_json(v):
    t = tag(v)
    if t == "list":
        return [to_json(x) for x in v]
    if t == "float" and not math.isfinite(v):
        return repr(v)
    return v
