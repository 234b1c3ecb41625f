"""Sampled fields: phi(x) on a periodic grid and u(t, x) on a spacetime grid."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np


class GridError(ValueError):
    pass


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class GridField1D:
    """Samples on x_j = -L + j dx, dx = 2L / N (periodic)."""
    L: float
    N: int
    values: np.ndarray
    note: str = "dimensionless"

    def __post_init__(self):
        self.L = float(self.L)
        self.N = int(self.N)
        if self.N < 64 or not _is_pow2(self.N):
            raise GridError(f"N must be a power of two >= 64 (got {self.N})")
        if self.L <= 0:
            raise GridError("L must be positive")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.N,):
            raise GridError(f"expected {self.N} samples, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise GridError("samples must be finite")

    @property
    def dx(self):
        return 2 * self.L / self.N

    @property
    def x(self):
        return -self.L + self.dx * np.arange(self.N)

    @property
    def xi(self):
        return 2 * np.pi * np.fft.fftfreq(self.N, self.dx)

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dx))

    def with_values(self, values):
        return GridField1D(self.L, self.N, values, self.note)

    @classmethod
    def from_function(cls, fn, L, N):
        x = -L + (2 * L / N) * np.arange(N)
        return cls(L, N, fn(x))

    def spectral_mass_below(self, fraction=0.8):
        """Share of discrete L2 mass at |xi| <= fraction * Nyquist."""
        p = np.abs(np.fft.fft(self.values)) ** 2
        total = p.sum()
        if total == 0:
            return 1.0
        nyq = np.pi / self.dx
        return float(p[np.abs(self.xi) <= fraction * nyq].sum() / total)


@dataclass
class SpacetimeField:
    """u(t_k, x_j) on t_k = t0 + k (t1 - t0) / (Nt - 1), k = 0..Nt-1.

    A free field may keep its initial datum in ``source``; slices are then
    exact Fourier-multiplier images and can be synthesised at any time.
    """
    L: float
    N: int
    t0: float
    t1: float
    Nt: int
    data: np.ndarray = None
    provenance: dict = dc_field(default_factory=dict)
    source: GridField1D = None

    def __post_init__(self):
        self.L, self.t0, self.t1 = float(self.L), float(self.t0), float(self.t1)
        self.N, self.Nt = int(self.N), int(self.Nt)
        if self.N < 64 or not _is_pow2(self.N):
            raise GridError(f"N must be a power of two >= 64 (got {self.N})")
        if self.Nt < 16:
            raise GridError(f"N_t must be at least 16 (got {self.Nt})")
        if not self.t1 > self.t0:
            raise GridError("time window must satisfy t1 > t0")
        if self.data is None and self.source is None:
            raise GridError("either data or a free source is required")
        if self.data is not None:
            self.data = np.asarray(self.data, dtype=complex)
            if self.data.shape != (self.Nt, self.N):
                raise GridError(f"data shape {self.data.shape} != ({self.Nt}, {self.N})")

    @property
    def dx(self):
        return 2 * self.L / self.N

    @property
    def x(self):
        return -self.L + self.dx * np.arange(self.N)

    @property
    def dt(self):
        return (self.t1 - self.t0) / (self.Nt - 1)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.Nt)

    @property
    def is_free(self):
        return self.source is not None

    def materialize(self):
        if self.data is None:
            from .propagators import free_propagate_many
            self.data = free_propagate_many(self.source, self.times)
        return self.data

    def slice(self, k):
        return GridField1D(self.L, self.N, self.materialize()[k])

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.materialize()) ** 2) * self.dx * self.dt))
