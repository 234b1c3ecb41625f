"""Phase-space test symbols.

Symbols are closed-form, vanish outside a stated support box, and are either
products of one-variable factors (``ProductSymbol``), finite sums of such
products (``SumSymbol``) or general callables (``FunctionSymbol``).  Product
structure is what lets Weyl quantization factor into one-dimensional kernels.
"""
from __future__ import annotations

from functools import partial

import numpy as np

from ..smooth import bump1d, chi

VARIABLES = {2: ("x", "xi"), 3: ("t", "x", "xi"), 4: ("t", "x", "tau", "xi")}


class PhaseSymbol:
    """Base class.  ``support`` is an (arity, 2) array of [lo, hi] per variable."""

    arity: int
    support: np.ndarray
    factors = None  # tuple of one-variable callables for product symbols

    def __call__(self, *args):
        raise NotImplementedError

    def evaluate_array(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return self(*[P[:, i] for i in range(self.arity)])

    @property
    def is_product(self):
        return self.factors is not None

    def in_support(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        lo, hi = self.support[:, 0], self.support[:, 1]
        return np.all((P >= lo) & (P <= hi), axis=1)

    def conj(self):
        return FunctionSymbol(self.arity, lambda *a: np.conj(self(*a)), self.support, name=f"conj({self.name})")

    name = "symbol"

    def __repr__(self):
        return f"{type(self).__name__}({self.name}, arity={self.arity})"


class ProductSymbol(PhaseSymbol):
    """a(v_1, ..., v_k) = coeff * prod_i f_i(v_i)."""

    def __init__(self, factors, support, coeff=1.0, name="product"):
        self.factors = tuple(factors)
        self.arity = len(self.factors)
        self.support = np.asarray(support, dtype=float).reshape(self.arity, 2)
        self.coeff = coeff
        self.name = name

    def __call__(self, *args):
        out = self.coeff
        for f, v in zip(self.factors, args):
            out = out * f(np.asarray(v, dtype=float))
        return out

    def conj(self):
        return ProductSymbol(self.factors, self.support, np.conj(self.coeff), name=f"conj({self.name})")

    def scaled_factors(self, scales):
        """Factors of v -> a(s_1 v_1, ..., s_k v_k); coeff is folded into the first."""
        out = []
        for i, (f, s) in enumerate(zip(self.factors, scales)):
            c = self.coeff if i == 0 else 1.0
            out.append(partial(_scaled, f, s, c))
        return out


def _scaled(f, s, c, v):
    return c * f(s * np.asarray(v, dtype=float))


class SumSymbol(PhaseSymbol):
    """Finite sum of product symbols (linear combination)."""

    def __init__(self, terms, name="sum"):
        self.terms = list(terms)
        self.arity = self.terms[0].arity
        lo = np.min([t.support[:, 0] for t in self.terms], axis=0)
        hi = np.max([t.support[:, 1] for t in self.terms], axis=0)
        self.support = np.column_stack([lo, hi])
        self.name = name

    def __call__(self, *args):
        return sum(t(*args) for t in self.terms)

    def conj(self):
        return SumSymbol([t.conj() for t in self.terms], name=f"conj({self.name})")


class FunctionSymbol(PhaseSymbol):
    def __init__(self, arity, fn, support, name="function"):
        self.arity = arity
        self.fn = fn
        self.support = np.asarray(support, dtype=float).reshape(arity, 2)
        self.name = name

    def __call__(self, *args):
        return self.fn(*[np.asarray(a, dtype=float) for a in args])


# ----------------------------------------------------------------- registry

def bump_symbol(center, radius=0.5, shape=0.08):
    """Gaussian-windowed bump product centred at ``center`` with per-variable radii."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    radius = np.broadcast_to(np.asarray(radius, dtype=float), center.shape).copy()
    factors = [partial(bump1d, center=c, radius=r, shape=shape) for c, r in zip(center, radius)]
    support = np.column_stack([center - radius, center + radius])
    label = ",".join(f"{c:g}" for c in center)
    return ProductSymbol(factors, support, name=f"bump[{label}]r{radius.max():g}")


def _one(v):
    return np.ones_like(np.asarray(v, dtype=float))


def constant_symbol(arity, value=1.0, support=None):
    """a == value; the support box is nominal (used for margin checks only)."""
    if support is None:
        support = [[-np.inf, np.inf]] * arity
    return ProductSymbol([_one] * arity, support, coeff=value, name=f"const{value:g}")


def x_only_symbol(g, support):
    """a(x, xi) = g(x): quantizes to multiplication by g."""
    return ProductSymbol([g, _one], [support, [-np.inf, np.inf]], name="x-only")


def xi_only_symbol(g, support):
    """a(x, xi) = g(xi): quantizes to a Fourier multiplier."""
    return ProductSymbol([_one, g], [[-np.inf, np.inf], support], name="xi-only")


def step_cutoff(center, inner, outer=None):
    """Factor equal to 1 for |v - c| <= inner and 0 beyond ``outer`` (default 2 inner)."""
    outer = 2 * inner if outer is None else outer

    def f(v):
        lam = 1.0 + (np.abs(np.asarray(v, dtype=float) - center) - inner) / (outer - inner)
        return chi(np.maximum(lam, 0.0))

    return f


def random_product_symbol(rng, arity, centers_box, radius_range=(0.4, 1.0), shape_range=(0.15, 0.3)):
    """Random bump product, optionally complex, used by the oracle tests."""
    center = np.array([rng.uniform(lo, hi) for lo, hi in centers_box])
    radius = rng.uniform(*radius_range, size=arity)
    shape = rng.uniform(*shape_range)
    s = bump_symbol(center, radius, shape)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    return ProductSymbol(s.factors, s.support, coeff=rng.uniform(0.5, 1.5) * phase, name=s.name)


# ------------------------------------------------------------------ Egorov

def egorov_conjugate(a, t):
    """Free-flow transport (x, xi) -> a(x + t xi, xi) of an arity-2 symbol.

    The support box is updated by the shear: x + t xi in X with xi in Xi gives
    x in X - t Xi.
    """
    if a.arity != 2:
        raise ValueError("egorov_conjugate expects an arity-2 symbol")
    if t == 0:
        return a
    (xlo, xhi), (klo, khi) = a.support
    shifts = np.array([t * klo, t * khi])
    support = [[xlo - shifts.max(), xhi - shifts.min()], [klo, khi]]
    if not np.all(np.isfinite(support[0])):
        support[0] = [-np.inf, np.inf]
    return FunctionSymbol(2, lambda x, xi: a(x + t * xi, xi), support, name=f"egorov({a.name},t={t:g})")
