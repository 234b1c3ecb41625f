"""Mollified step functions shared by symbols, partitions and cutoffs."""
import numpy as np


def _f(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def chi(lam):
    """Smooth step: 1 on [0, 1], 0 on [2, inf), non-increasing in between.

    chi(lam) = f(2 - lam) / (f(2 - lam) + f(lam - 1)) with f(u) = exp(-1/u) for
    u > 0.  Values for negative arguments are 1 (callers pass |.|).
    """
    lam = np.asarray(lam, dtype=float)
    a = _f(2.0 - lam)
    b = _f(lam - 1.0)
    return a / (a + b)


def chi_deriv(lam, order=1, step=1e-3):
    """Derivatives of chi by centered differences (used only in diagnostics)."""
    lam = np.asarray(lam, dtype=float)
    if order == 0:
        return chi(lam)
    return (chi_deriv(lam + step, order - 1, step) - chi_deriv(lam - step, order - 1, step)) / (2 * step)


def bump1d(z, center, radius, shape=0.08):
    """Gaussian-windowed bump with compact support [center - radius, center + radius].

    exp(-u^2 / (2 shape^2)) * chi(2|u|), u = (z - center) / radius.  With the
    default shape the Gaussian is about 3e-9 where the mollified falloff
    starts, so the spectrum follows the Gaussian down to ~1e-14 while the
    profile still vanishes exactly outside the support.
    """
    u = np.abs((np.asarray(z, dtype=float) - center) / radius)
    out = np.zeros(u.shape)
    inside = u < 1.0
    ui = u[inside]
    val = np.exp(-0.5 * (ui / shape) ** 2)
    edge = ui > 0.5  # chi(2|u|) = 1 below
    val[edge] *= chi(2.0 * ui[edge])
    out[inside] = val
    return out
