"""report.json assembly and tolerance-aware comparison.

Every computed number in a report is a *quantity*:

    {"value": v, "tol": t}                 passes when v <= t
    {"value": v, "tol": t, "target": x}    passes when |v - x| <= t
    {"value": v, "tol": t, "min": b}       passes when v >= b

plus a ``"pass"`` flag.  :func:`report_diff` compares two reports field by
field: quantity values must agree within max(tol_a, tol_b), except that
lower-bound (``min``) quantities are compared by their pass flag.  Blocks
named ``info`` and the top-level ``run`` block are ignored.
"""
from __future__ import annotations

import json
import math

from .errors import ConfigError

__all__ = ["SCHEMA", "dumps", "quantity", "report_diff", "ReportSchemaError"]

SCHEMA = "todalab-report/1"
_IGNORED = {"info"}
_TOP_IGNORED = {"run"}


class ReportSchemaError(ConfigError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _finite(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def quantity(value, tol, target=None, minimum=None) -> dict:
    value = float(value)
    q = {"value": _finite(value), "tol": float(tol)}
    if minimum is not None:
        q["min"] = float(minimum)
        ok = value >= minimum
    elif target is not None:
        q["target"] = float(target)
        ok = abs(value - target) <= tol
    else:
        ok = value <= tol
    q["pass"] = bool(ok and math.isfinite(value))
    return q


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    try:
        return _finite(obj)
    except (TypeError, ValueError):
        return str(obj)


def dumps(report: dict) -> str:
    """Canonical serialisation: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _is_quantity(x) -> bool:
    return isinstance(x, dict) and "value" in x and "tol" in x


def _num(x):
    # non-finite values are stored as "nan" / "inf" strings
    return float(x)


def _walk(a, b, path, out):
    if _is_quantity(a) or _is_quantity(b):
        if not (_is_quantity(a) and _is_quantity(b)):
            raise ReportSchemaError(f"field {path} is a quantity in only one report", path)
        if ("min" in a) != ("min" in b) or ("target" in a) != ("target" in b):
            raise ReportSchemaError(f"field {path} has different quantity kinds", path)
        if "min" in a:
            if a["pass"] != b["pass"]:
                out.append(f"{path}: pass {a['pass']} -> {b['pass']} (value {a['value']} -> {b['value']}, min {a['min']})")
            return
        va, vb = _num(a["value"]), _num(b["value"])
        tol = max(float(a["tol"]), float(b["tol"]))
        d = abs(va - vb) if math.isfinite(va) and math.isfinite(vb) else (0.0 if va == vb else math.inf)
        if not d <= tol:
            out.append(f"{path}: {va!r} -> {vb!r} |diff| {d:.3e} > tol {tol:.3e}")
        return
    if isinstance(a, dict) and isinstance(b, dict):
        keys_a = set(a) - _IGNORED
        keys_b = set(b) - _IGNORED
        if keys_a != keys_b:
            missing = sorted(keys_a ^ keys_b)[0]
            raise ReportSchemaError(f"field {path}.{missing} present in only one report".lstrip("."),
                                    f"{path}.{missing}".lstrip("."))
        for k in sorted(keys_a):
            _walk(a[k], b[k], f"{path}.{k}" if path else k, out)
        return
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            raise ReportSchemaError(f"field {path} has lengths {len(a)} and {len(b)}", path)
        for i, (x, y) in enumerate(zip(a, b)):
            _walk(x, y, f"{path}[{i}]", out)
        return
    numeric = (int, float)
    same_kind = type(a) is type(b) or (
        isinstance(a, numeric) and isinstance(b, numeric)
        and not isinstance(a, bool) and not isinstance(b, bool))
    if not same_kind:
        raise ReportSchemaError(f"field {path} changes type", path)
    if a != b:
        out.append(f"{path}: {a!r} -> {b!r}")


def report_diff(a: dict, b: dict) -> tuple[list[str], int]:
    """Differences beyond tolerance as text lines, and a status (0 same, 1 drift).

    Raises :class:`ReportSchemaError` naming the field when the structures
    differ.
    """
    for name, rep in (("first", a), ("second", b)):
        if not isinstance(rep, dict) or rep.get("schema") != SCHEMA:
            raise ReportSchemaError(f"{name} report lacks schema {SCHEMA!r}", "schema")
    out: list[str] = []
    _walk({k: v for k, v in a.items() if k not in _TOP_IGNORED},
          {k: v for k, v in b.items() if k not in _TOP_IGNORED}, "", out)
    return out, (1 if out else 0)
