"""Initial data phi on periodic grids."""
from __future__ import annotations

import numpy as np

from .grids import GridField1D
from .smooth import chi


def _grid(L, N):
    dx = 2 * L / N
    return -L + dx * np.arange(N), dx


def gaussian(L, N, center=0.0, width=1.0, momentum=0.0):
    """exp(-(x - c)^2 / (2 w^2) + i k x)."""
    x, _ = _grid(L, N)
    v = np.exp(-((x - center) ** 2) / (2 * width ** 2) + 1j * momentum * x)
    return GridField1D(L, N, v)


def delta_surrogate(L, N, width_cells=4.0, center=0.0, focus=None):
    """Unit-mass Gaussian of width ``width_cells`` grid spacings standing in for delta(x - center).

    With ``focus = t_f`` the datum is exp(i t_f K) applied to the surrogate,
    so the free solution concentrates at x = center exactly at t = t_f.
    """
    x, dx = _grid(L, N)
    w = width_cells * dx
    g = np.exp(-((x - center) ** 2) / (2 * w ** 2)) / (np.sqrt(2 * np.pi) * w)
    phi = GridField1D(L, N, g, note=f"delta-surrogate(w={w:g})")
    if focus is not None and focus != 0:
        from .propagators import free_propagate
        phi = free_propagate(phi, -float(focus), check=False)
        phi.note = f"delta-surrogate(w={w:g}, focus={focus:g})"
    return phi


def windowed_chirp(L, N, beta=1.0, flat_fraction=0.25):
    """exp(i beta x^2 / 2) times a smooth window equal to 1 on |x| <= flat_fraction L.

    The window falls to 0 at |x| = 2 flat_fraction L. The local frequency is beta x,
    so with the default the datum stays below beta L / 2, which must sit under 80%
    of the grid Nyquist pi N / (2 L).
    """
    x, _ = _grid(L, N)
    win = chi(np.abs(x) / (flat_fraction * L))
    return GridField1D(L, N, np.exp(0.5j * beta * x ** 2) * win, note=f"chirp(beta={beta:g})")


def superposition(*terms):
    """Sum of (coefficient, GridField1D) pairs on a common grid."""
    c0, f0 = terms[0]
    total = c0 * f0.values
    for c, f in terms[1:]:
        if (f.L, f.N) != (f0.L, f0.N):
            raise ValueError("superposition needs a common grid")
        total = total + c * f.values
    return GridField1D(f0.L, f0.N, total, note="superposition")


REGISTRY = {"gaussian": gaussian, "delta-surrogate": delta_surrogate, "windowed-chirp": windowed_chirp}


def build_initial(spec, L, N):
    """Build from a dict {"kind": ..., **params} (scenario files)."""
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in REGISTRY:
        raise ValueError(f"unknown initial datum {kind!r}; known: {sorted(REGISTRY)}")
    return REGISTRY[kind](L, N, **spec)
