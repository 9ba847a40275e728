"""JSON helpers shared by the library export functions and the CLI."""

import json
import math

import numpy as np

from .errors import AdmissibilityError


def to_pairs(a):
    """Complex scalar/array to nested ``[re, im]`` lists (row-major)."""
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def from_pairs(data):
    """Inverse of :func:`to_pairs`; plain real numbers are accepted too."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 0:
        return a.astype(np.complex128)
    if a.shape[-1] != 2:
        raise AdmissibilityError("complex values must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def points_from_json(data, dim=None):
    """Parse points given as ``[re, im]`` pairs.

    Shape ``(n, 2)`` is a list of disc points, ``(n, d, 2)`` a list of ball
    points, and a bare ``[re, im]`` a single disc point.
    """
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 1 and a.shape[0] == 2:
        a = a[None, :]
    if a.ndim == 2 and a.shape[1] == 2:
        pts = (a[:, 0] + 1j * a[:, 1])[:, None]
    elif a.ndim == 3 and a.shape[2] == 2:
        pts = a[..., 0] + 1j * a[..., 1]
    else:
        raise AdmissibilityError("points must be [re, im] pairs, shape (n, 2) or (n, d, 2)")
    if dim is not None and pts.shape[1] != dim:
        raise AdmissibilityError(f"points have dimension {pts.shape[1]}, kernel needs {dim}")
    return pts


def points_to_json(pts):
    pts = np.asarray(pts, dtype=np.complex128)
    if pts.ndim == 2 and pts.shape[1] == 1:
        pts = pts[:, 0]
    return to_pairs(pts)


class _Encoder:
    """Serializer with exact round-trip floats and compact numeric rows."""

    def __init__(self, indent=None):
        self.indent = indent

    def encode(self, obj):
        return self._enc(obj, 0)

    def _enc(self, obj, level):
        if obj is None or isinstance(obj, (bool, np.bool_)):
            return json.dumps(None if obj is None else bool(obj))
        if isinstance(obj, (int, np.integer)):
            return str(int(obj))
        if isinstance(obj, (float, np.floating)):
            x = float(obj)
            if not math.isfinite(x):
                return json.dumps(None)
            # repr is the shortest string that round-trips exactly
            return repr(x)
        if isinstance(obj, str):
            return json.dumps(obj, ensure_ascii=False)
        if isinstance(obj, (complex, np.complexfloating)):
            return self._enc([obj.real, obj.imag], level)
        if isinstance(obj, np.ndarray):
            return self._enc(obj.tolist(), level)
        if isinstance(obj, dict):
            items = [f"{json.dumps(str(k), ensure_ascii=False)}: {self._enc(v, level + 1)}" for k, v in obj.items()]
            return self._wrap("{", items, "}", level, True)
        if isinstance(obj, (list, tuple)):
            items = [self._enc(v, level + 1) for v in obj]
            return self._wrap("[", items, "]", level, any(s.startswith(("{", "[")) for s in items))
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    def _wrap(self, open_, items, close, level, nested):
        if not items:
            return open_ + close
        if self.indent is None or not nested:
            return open_ + ", ".join(items) + close
        pad = " " * (self.indent * (level + 1))
        return open_ + "\n" + ",\n".join(pad + s for s in items) + "\n" + " " * (self.indent * level) + close


def dumps(obj, indent=2):
    """Deterministic JSON text; floats round-trip exactly, NaN and inf become null."""
    return _Encoder(indent).encode(obj)
