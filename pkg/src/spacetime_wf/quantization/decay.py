"""Fitted decay orders: the finite-h stand-in for "= O(h^infinity)"."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_THRESHOLD = 4.0
RELATIVE_FLOOR = 1e-13


class DegenerateDecayError(ValueError):
    """Too few usable (h, norm) pairs for a slope fit."""

    def __init__(self, message, h_values=None, norms=None, floor=None):
        super().__init__(message)
        self.h_values = h_values
        self.norms = norms
        self.floor = floor


@dataclass
class DecayReport:
    h_values: list
    norms: list
    slope: float
    intercept: float
    verdict: str
    threshold: float
    floor: float = 0.0
    used: list = field(default_factory=list)  # mask of pairs entering the fit
    bound: bool = False  # slope is a lower bound from a floor-crossing (see bound_report)

    @property
    def rapid(self):
        return self.verdict == "rapid-decay"

    def to_dict(self):
        return {"h_values": [float(h) for h in self.h_values], "norms": [float(n) for n in self.norms],
                "slope": float(self.slope), "intercept": float(self.intercept), "verdict": self.verdict,
                "threshold": float(self.threshold), "floor": float(self.floor),
                "used": [bool(u) for u in self.used], "slope_is_lower_bound": bool(self.bound)}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "norm"])
        for h, n in zip(self.h_values, self.norms):
            w.writerow([repr(float(h)), repr(float(n))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d):
        return cls(d["h_values"], d["norms"], d["slope"], d["intercept"], d["verdict"], d["threshold"],
                   d.get("floor", 0.0), d.get("used", []), d.get("slope_is_lower_bound", False))


def _verdict(slope, threshold):
    if slope >= threshold:
        return "rapid-decay"
    if slope <= 0.25:
        return "non-decaying"
    return f"finite-order({slope:.2f})"


def _validate(pairs):
    pairs = [(float(h), float(n)) for h, n in pairs]
    if len(pairs) < 6:
        raise ValueError(f"need at least 6 (h, norm) pairs, got {len(pairs)}")
    h = np.array([p[0] for p in pairs])
    n = np.array([p[1] for p in pairs])
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ValueError("h values must be positive and strictly decreasing")
    if np.any(n < 0) or not np.all(np.isfinite(n)):
        raise ValueError("norms must be finite and non-negative")
    return h, n


def decay_order(pairs, threshold=DEFAULT_THRESHOLD, floor=None):
    """Least-squares slope of log(norm) against log(h).

    Norms at or below ``floor`` (default 1e-13 times the largest norm) are
    clamped to it and left out of the fit.  Fewer than four remaining pairs
    raise DegenerateDecayError.
    """
    h, n = _validate(pairs)
    if floor is None:
        floor = RELATIVE_FLOOR * n.max() if n.max() > 0 else np.finfo(float).tiny
    used = n > floor
    clamped = np.maximum(n, floor)
    if used.sum() < 4:
        raise DegenerateDecayError(f"only {int(used.sum())} of {len(n)} norms lie above the floor {floor:.3g}",
                                   h, clamped, floor)
    slope, intercept = np.polyfit(np.log(h[used]), np.log(n[used]), 1)
    return DecayReport(list(h), list(clamped), float(slope), float(intercept), _verdict(slope, threshold),
                       float(threshold), float(floor), list(used))


def bound_report(h, norms, floor, threshold=DEFAULT_THRESHOLD):
    """Report for sequences that reach the floor before four usable pairs exist.

    The slope recorded is the conservative secant bound between the largest
    usable norm and the floor at the first clamped h; with no usable pair at
    all the bound is infinite.  Both mean the norms fall below roundoff faster
    than the threshold power, so the verdict is rapid-decay when the bound
    reaches the threshold.
    """
    h = np.asarray(h, dtype=float)
    norms = np.asarray(norms, dtype=float)
    used = norms > floor
    if not used.any():
        slope = np.inf
        intercept = np.log(floor)
    else:
        i = int(np.argmax(used))  # largest h above the floor
        below = np.nonzero(~used & (np.arange(len(h)) > i))[0]
        j = int(below[0]) if len(below) else len(h) - 1
        slope = float(np.log(norms[i] / floor) / np.log(h[i] / h[j])) if j != i else 0.0
        intercept = float(np.log(norms[i]) - slope * np.log(h[i]))
    return DecayReport(list(h), list(np.maximum(norms, floor)), float(slope), float(intercept),
                       _verdict(slope, threshold), float(threshold), float(floor), list(used), bound=True)


def decay_report(h, norms, threshold=DEFAULT_THRESHOLD, floor=None):
    """decay_order with the floor-crossing fallback used by the detectors."""
    try:
        return decay_order(list(zip(h, norms)), threshold, floor)
    except DegenerateDecayError as e:
        return bound_report(e.h_values, e.norms, e.floor, threshold)
