"""Closed-form metric and potential coefficients with analytic derivatives.

A field is H = 1/2 p_i a_ij(t, x) p_j + V(t, x) with a -> delta and V sublinear
at spatial infinity.  All derivatives are coded analytically: Hermite
polynomials for the Gaussian bump, a monomial recursion for <x>^e.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial import hermite as H


class FieldSpecError(ValueError):
    """Raised for unknown registry tags or inadmissible parameters."""


def _hermite_deriv(u, n, w):
    """n-th derivative of exp(-u^2/w^2) with respect to u."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    return (-1.0 / w) ** n * H.hermval(u / w, c) * np.exp(-(u / w) ** 2)


# ---------------------------------------------------------------- metric parts

class IdentityMetric:
    tag = "identity"

    def __init__(self, dim):
        self.dim = dim
        self.params = {}

    def deriv(self, t, x, kt, alpha):
        shape = np.broadcast(np.asarray(t), x[..., 0]).shape
        out = np.zeros(shape + (self.dim, self.dim))
        if kt == 0 and not any(alpha):
            out[...] = np.eye(self.dim)
        return out


class BumpMetric:
    """a = I + A exp(-(|x - c|^2 + t^2) / w^2) B with B a normalized shear.

    B = ((1 - s) I + s 11^T) / (1 + (d - 1) s) has eigenvalues in (0, 1], so
    a >= (1 - |A|) I is positive definite for |A| < 1.
    """
    tag = "bump-metric"

    def __init__(self, dim, amplitude=0.1, center=0.0, width=1.0, shear=0.0):
        if not abs(amplitude) < 1:
            raise FieldSpecError(f"bump amplitude must satisfy |A| < 1 (got {amplitude})")
        if width <= 0:
            raise FieldSpecError(f"bump width must be positive (got {width})")
        if not 0 <= shear < 1:
            raise FieldSpecError(f"shear must lie in [0, 1) (got {shear})")
        self.dim = dim
        self.amplitude = float(amplitude)
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (dim,)).copy()
        self.width = float(width)
        self.shear = float(shear)
        B = (1 - shear) * np.eye(dim) + shear * np.ones((dim, dim))
        self.B = B / (1 + (dim - 1) * shear)
        self.params = dict(amplitude=self.amplitude, center=self.center.tolist() if dim > 1 else float(self.center[0]),
                           width=self.width, shear=self.shear)

    def profile(self, t, x, kt, alpha):
        g = _hermite_deriv(np.asarray(t, dtype=float), kt, self.width)
        for i in range(self.dim):
            g = g * _hermite_deriv(x[..., i] - self.center[i], alpha[i], self.width)
        return g

    def deriv(self, t, x, kt, alpha):
        g = self.amplitude * self.profile(t, x, kt, alpha)
        out = g[..., None, None] * self.B
        if kt == 0 and not any(alpha):
            out = out + np.eye(self.dim)
        return out


# ------------------------------------------------------------- potential parts

class ZeroPotential:
    tag = "zero"

    def __init__(self, dim):
        self.dim = dim
        self.params = {}
        self.exponent = None

    def deriv(self, t, x, kt, alpha):
        return np.zeros(np.broadcast(np.asarray(t), x[..., 0]).shape)


class RadialPowerPotential:
    """V = c (1 + |x|^2)^(e/2), time independent.

    Derivatives use the exact expansion d^alpha F(q) = sum c_{m,k} x^m F^(k)(q)
    with q = 1 + |x|^2, built by the rule
    d_i [x^m F^(k)] = m_i x^(m - e_i) F^(k) + 2 x^(m + e_i) F^(k+1).
    """
    tag = "sublinear-potential"

    def __init__(self, dim, coefficient=1.0, exponent=0.5, tag=None):
        self.dim = dim
        self.coefficient = float(coefficient)
        self.exponent = float(exponent)
        if tag is not None:
            self.tag = tag
        self.params = dict(coefficient=self.coefficient, exponent=self.exponent)
        self._cache = {}

    def _terms(self, alpha):
        alpha = tuple(alpha)
        if alpha in self._cache:
            return self._cache[alpha]
        terms = {((0,) * self.dim, 0): 1.0}
        for i, n in enumerate(alpha):
            for _ in range(n):
                new = {}
                for (m, k), c in terms.items():
                    if m[i] > 0:
                        m2 = list(m)
                        m2[i] -= 1
                        key = (tuple(m2), k)
                        new[key] = new.get(key, 0.0) + c * m[i]
                    m3 = list(m)
                    m3[i] += 1
                    key = (tuple(m3), k + 1)
                    new[key] = new.get(key, 0.0) + 2.0 * c
                terms = new
        self._cache[alpha] = terms
        return terms

    def deriv(self, t, x, kt, alpha):
        shape = np.broadcast(np.asarray(t), x[..., 0]).shape
        if kt > 0:
            return np.zeros(shape)
        q = 1.0 + np.sum(x ** 2, axis=-1)
        half = self.exponent / 2.0
        out = np.zeros(shape)
        for (m, k), c in self._terms(alpha).items():
            falling = math.prod(half - j for j in range(k))
            mono = np.ones(shape)
            for i, p in enumerate(m):
                if p:
                    mono = mono * x[..., i] ** p
            out = out + c * falling * mono * q ** (half - k)
        return self.coefficient * np.broadcast_to(out, shape)


class QuadraticPotential(RadialPowerPotential):
    """V = c |x|^2.  Not admissible; kept to exercise the validator."""
    tag = "quadratic-potential"

    def __init__(self, dim, coefficient=1.0):
        super().__init__(dim, coefficient, 2.0, tag="quadratic-potential")
        self.params = dict(coefficient=self.coefficient)

    def deriv(self, t, x, kt, alpha):
        # c(1 + |x|^2) - c has the same derivatives of positive order
        out = super().deriv(t, x, kt, alpha)
        if kt == 0 and not any(alpha):
            out = out - self.coefficient
        return out


# ------------------------------------------------------------------- the field

@dataclass(frozen=True)
class CoefficientField:
    """Metric a_ij(t, x) and potential V(t, x) with analytic derivatives.

    Spatial arguments carry a trailing axis of length ``dim``; for ``dim == 1``
    the scalar helpers ``a``, ``da_dx``, ... accept plain arrays.
    """
    dim: int
    metric_part: object
    potential_part: object
    eps: float
    tag: str
    spec: dict = dc_field(default_factory=dict)

    # general-dimension accessors -------------------------------------------
    def _x(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1:] != (1,)):
            x = x[..., None]
        return x

    def metric(self, t, x, kt=0, alpha=None):
        x = self._x(x)
        alpha = tuple(alpha) if alpha is not None else (0,) * self.dim
        return self.metric_part.deriv(t, x, kt, alpha)

    def potential(self, t, x, kt=0, alpha=None):
        x = self._x(x)
        alpha = tuple(alpha) if alpha is not None else (0,) * self.dim
        return self.potential_part.deriv(t, x, kt, alpha)

    def metric_grad(self, t, x):
        """Array (..., k, i, j) of d_k a_ij."""
        unit = np.eye(self.dim, dtype=int)
        return np.stack([self.metric(t, x, 0, unit[k]) for k in range(self.dim)], axis=-3)

    def potential_grad(self, t, x):
        unit = np.eye(self.dim, dtype=int)
        return np.stack([self.potential(t, x, 0, unit[k]) for k in range(self.dim)], axis=-1)

    # one-dimensional scalar helpers ----------------------------------------
    def a(self, t, x):
        return self.metric(t, x)[..., 0, 0]

    def da_dx(self, t, x, order=1):
        return self.metric(t, x, 0, (order,))[..., 0, 0]

    def da_dt(self, t, x):
        return self.metric(t, x, 1)[..., 0, 0]

    def V(self, t, x):
        return self.potential(t, x)

    def dV_dx(self, t, x, order=1):
        return self.potential(t, x, 0, (order,))

    def dV_dt(self, t, x):
        return self.potential(t, x, 1)

    @property
    def is_free(self):
        return isinstance(self.metric_part, IdentityMetric) and isinstance(self.potential_part, ZeroPotential)

    def describe(self):
        return {"tag": self.tag, "dim": self.dim, "eps": self.eps, **self.spec}


# ------------------------------------------------------------------ registry

_CALL = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")
_POSITIONAL = {
    "bump-metric": ["amplitude", "center", "width", "shear"],
    "sublinear-potential": ["coefficient", "exponent"],
    "quadratic-potential": ["coefficient"],
}


def parse_tag(text):
    """Parse ``"bump-metric(0.1, center=0, width=1)"`` into a spec dict."""
    m = _CALL.match(text)
    if not m:
        raise FieldSpecError(f"cannot parse field tag {text!r}")
    name, args = m.group(1), m.group(2)
    spec = {"tag": name}
    if args and args.strip():
        names = _POSITIONAL.get(name, [])
        for pos, item in enumerate(a.strip() for a in args.split(",")):
            if "=" in item:
                key, val = (p.strip() for p in item.split("=", 1))
            else:
                if pos >= len(names):
                    raise FieldSpecError(f"too many positional arguments for {name}")
                key, val = names[pos], item
            spec[key] = float(val)
    return spec


def _metric_from(spec, dim):
    tag = spec.get("tag", "identity")
    kw = {k: v for k, v in spec.items() if k != "tag"}
    if tag == "identity":
        return IdentityMetric(dim)
    if tag == "bump-metric":
        unknown = set(kw) - {"amplitude", "center", "width", "shear"}
        if unknown:
            raise FieldSpecError(f"unknown bump-metric parameters {sorted(unknown)}")
        return BumpMetric(dim, **kw)
    raise FieldSpecError(f"unknown metric tag {tag!r}")


def _potential_from(spec, dim):
    tag = spec.get("tag", "zero")
    kw = {k: v for k, v in spec.items() if k != "tag"}
    if tag in ("zero", "identity"):
        return ZeroPotential(dim)
    if tag == "sublinear-potential":
        e = kw.get("exponent", 0.5)
        if not 0 < e < 1:
            raise FieldSpecError(f"sublinear exponent must lie in (0, 1) (got {e})")
        return RadialPowerPotential(dim, kw.get("coefficient", 1.0), e)
    if tag == "quadratic-potential":
        return QuadraticPotential(dim, kw.get("coefficient", 1.0))
    raise FieldSpecError(f"unknown potential tag {tag!r}")


def build_field(spec, dim=1, eps=None):
    """Build a CoefficientField from a registry tag.

    ``spec`` is a tag string (``"identity"``, ``"bump-metric(0.1)"``,
    ``"sublinear-potential(1, 0.5)"``) or a dict with key ``tag``.  The tag
    ``composite`` takes sub-specs under ``metric`` and ``potential``.
    """
    if isinstance(spec, str):
        spec = parse_tag(spec)
    spec = dict(spec)
    dim = int(spec.pop("dim", dim))
    if dim < 1:
        raise FieldSpecError("dimension must be positive")
    tag = spec.get("tag", "identity")
    if tag == "composite":
        msub = spec.get("metric", {"tag": "identity"})
        psub = spec.get("potential", {"tag": "zero"})
        msub = parse_tag(msub) if isinstance(msub, str) else dict(msub)
        psub = parse_tag(psub) if isinstance(psub, str) else dict(psub)
        metric, pot = _metric_from(msub, dim), _potential_from(psub, dim)
    elif tag in ("identity", "bump-metric"):
        metric, pot = _metric_from(spec, dim), ZeroPotential(dim)
    elif tag in ("sublinear-potential", "quadratic-potential"):
        metric, pot = IdentityMetric(dim), _potential_from(spec, dim)
    else:
        raise FieldSpecError(f"unknown registry tag {tag!r}")
    if eps is None:
        eps = 0.5
        if isinstance(pot, RadialPowerPotential) and not isinstance(pot, QuadraticPotential):
            eps = min(0.5, 1.0 - pot.exponent)
    desc = {"metric": {"tag": metric.tag, **metric.params}, "potential": {"tag": pot.tag, **pot.params}}
    return CoefficientField(dim, metric, pot, float(eps), tag, desc)


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    """Fitted constants of the decay assumption on a sample box.

    ``constants`` maps labels like ``"a[t1,x2]"`` to sup |d^alpha(a - delta)|
    <x>^(1+|alpha'|+eps) (and ``"V[...]"`` to the potential analogue).
    ``growth`` holds the ratio of each constant on the box with doubled spatial
    extent to its value on the box; a bound that only holds because the box is
    finite shows up as growth.
    """
    constants: dict
    growth: dict
    passed: bool
    box: tuple
    resolution: int
    ceiling: float
    growth_limit: float
    eps: float
    failures: list

    def to_dict(self):
        return {
            "constants": self.constants, "growth": self.growth, "pass": self.passed,
            "box": [list(b) for b in self.box], "resolution": self.resolution,
            "ceiling": self.ceiling, "growth_limit": self.growth_limit, "eps": self.eps,
            "failures": self.failures,
        }


def _multi_indices(dim, max_order):
    for total in range(max_order + 1):
        for kt in range(total + 1):
            for alpha in itertools.product(range(total - kt + 1), repeat=dim):
                if sum(alpha) == total - kt:
                    yield kt, alpha


def _sup_constants(field, tbox, xbox, n, max_order):
    d = field.dim
    tt = np.linspace(*tbox, n)
    axes = [np.linspace(*xbox, n)] * d
    mesh = np.meshgrid(tt, *axes, indexing="ij")
    t = mesh[0]
    x = np.stack(mesh[1:], axis=-1)
    jx = np.sqrt(1.0 + np.sum(x ** 2, axis=-1))
    eye = np.eye(d)
    out = {}
    for kt, alpha in _multi_indices(d, max_order):
        na = sum(alpha)
        label = "[t%d,x%s]" % (kt, ",".join(str(a) for a in alpha))
        A = field.metric(t, x, kt, alpha)
        if kt == 0 and na == 0:
            A = A - eye
        amax = np.max(np.abs(A), axis=(-2, -1))
        out["a" + label] = float(np.max(amax * jx ** (1 + na + field.eps)))
        Vd = field.potential(t, x, kt, alpha)
        out["V" + label] = float(np.max(np.abs(Vd) * jx ** (-1 + na + field.eps)))
    return out


def validate_assumption(field, box=((-10.0, 10.0), (-10.0, 10.0)), max_order=3,
                        resolution=None, ceiling=1e6, growth_limit=1.5):
    """Fit the constants of the short-range / sublinear decay bounds on a box.

    Constants are sampled on a tensor grid (``resolution`` points per axis,
    default 200 in d = 1 and 40 otherwise) and again on the box with doubled
    spatial extent.  The field passes when every constant is finite, below
    ``ceiling`` and does not grow by more than ``growth_limit`` under the
    doubling.
    """
    if resolution is None:
        resolution = 200 if field.dim == 1 else 40
    tbox, xbox = tuple(map(float, box[0])), tuple(map(float, box[1]))
    base = _sup_constants(field, tbox, xbox, resolution, max_order)
    wide = _sup_constants(field, tbox, (2 * xbox[0], 2 * xbox[1]), 2 * resolution if field.dim == 1 else resolution,
                          max_order)
    growth, failures = {}, []
    for key, c in base.items():
        cw = wide[key]
        scale = max(c, 1e-300)
        g = cw / scale if c > 1e-12 else (1.0 if cw <= 1e-12 else np.inf)
        growth[key] = float(g)
        if not np.isfinite(c) or c > ceiling:
            failures.append(f"{key}: constant {c:.3g} exceeds ceiling {ceiling:g}")
        elif g > growth_limit:
            failures.append(f"{key}: constant grows by {g:.3g} when the box is doubled")
    return ValidationReport(base, growth, not failures, (tbox, xbox), resolution, ceiling, growth_limit,
                            field.eps, failures)
