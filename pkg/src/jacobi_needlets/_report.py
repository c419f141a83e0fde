"""JSON output with lossless doubles."""

from __future__ import annotations

import json
import math

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(float(obj))
    if isinstance(obj, complex):
        return [_Float(obj.real), _Float(obj.imag)]
    return obj


class _Float(float):
    def __repr__(self):
        if math.isnan(self):
            return "NaN"
        if math.isinf(self):
            return "Infinity" if self > 0 else "-Infinity"
        text = format(float(self), ".17g")
        return text if any(ch in text for ch in ".en") else text + ".0"


def fmt17(x):
    return repr(_Float(float(x)))


def dumps17(obj, indent=2):
    """``json.dumps`` printing every float with 17 significant digits."""
    return _dump(_plain(obj), indent)


def _dump(obj, indent, level=0):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, float):
        return repr(_Float(obj))
    return json.dumps(obj)
