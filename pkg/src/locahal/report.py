"""Structured verification reports."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__

PASS = "pass"
FAIL = "fail"
MEASURED = "measured"


def _plain(value):
    """Convert numpy scalars/arrays and tuples into JSON-friendly values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if v != v:
            return "nan"
        if v in (float("inf"), float("-inf")):
            return "inf" if v > 0 else "-inf"
        return v
    return value


@dataclass
class Check:
    name: str
    anchor: str
    status: str
    witness: Any = None
    measured: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self):
        return self.status != FAIL

    def to_dict(self, timestamps=True):
        out = {"name": self.name, "anchor": self.anchor, "status": self.status}
        if self.witness is not None:
            out["witness"] = _plain(self.witness)
        vals = self.measured if timestamps else {k: v for k, v in self.measured.items() if k != "wall_time"}
        if vals:
            out["measured"] = _plain(vals)
        if self.detail:
            out["detail"] = self.detail
        return out


def exact(name, anchor, ok, witness=None, **measured):
    """Record for an exact check; a failing record must carry a witness."""
    if not ok and witness is None:
        witness = {"note": "no witness recorded"}
    return Check(name, anchor, PASS if ok else FAIL, None if ok else witness, measured)


def measured(name, anchor, **values):
    return Check(name, anchor, MEASURED, None, values)


@dataclass
class VerificationReport:
    title: str
    checks: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, check):
        self.checks.append(check)
        return check

    def extend(self, checks):
        for c in checks:
            self.add(c)
        return self

    def merge(self, other, prefix=""):
        for c in other.checks:
            name = f"{prefix}{c.name}" if prefix else c.name
            self.checks.append(Check(name, c.anchor, c.status, c.witness, c.measured, c.detail))
        self.inputs.update(other.inputs)
        return self

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def get(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, timestamps=True):
        out = {
            "tool": "locahal",
            "version": __version__,
            "title": self.title,
            "inputs": _plain(self.inputs),
            "ok": self.ok,
            "checks": [c.to_dict(timestamps) for c in self.checks],
        }
        if timestamps:
            out["wall_time"] = round(self.wall_time, 6)
        return out

    def to_json(self, timestamps=True):
        return json.dumps(self.to_dict(timestamps), indent=2, sort_keys=True)

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")


class timed:
    """Context manager that stores elapsed seconds on a report."""

    def __init__(self, report):
        self.report = report

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.wall_time += time.perf_counter() - self._t0
        return False


def digest(obj):
    """sha256 of a JSON-serialisable object or of raw bytes."""
    if isinstance(obj, (bytes, bytearray)):
        data = bytes(obj)
    else:
        data = json.dumps(_plain(obj), sort_keys=True).encode()
    return hashlib.sha256(data).hexdigest()


def within_factor(values, factor):
    """True when max/min over ``values`` is at most ``factor``.

    All-zero collections count as stable; a mix of zero and nonzero does not.
    """
    vals = [float(v) for v in values]
    if any(not np.isfinite(v) for v in vals):
        return False
    if all(v == 0.0 for v in vals):
        return True
    if any(v == 0.0 for v in vals):
        return False
    lo, hi = min(abs(v) for v in vals), max(abs(v) for v in vals)
    return hi <= factor * lo


def spread(values):
    vals = [abs(float(v)) for v in values]
    if all(v == 0.0 for v in vals):
        return 1.0
    if min(vals) == 0.0:
        return float("inf")
    return max(vals) / min(vals)
