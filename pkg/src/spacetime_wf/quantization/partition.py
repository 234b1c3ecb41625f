"""Dyadic partition of unity adapted to the free classical flow (d = 1).

    eta(mu, nu)   = chi(|mu| / eps) (chi(nu) - chi(4 nu))
    Y(mu, nu)     = sum_{m,n} eta(mu - eps m 2^-n nu, 2^-n nu)
    chi_{m,n}     = Y(mu + eps m 2^-n nu, nu)^-1 eta(mu, 2^-n nu)

The nu-factor equals 1 on [1/2, 1] and vanishes outside [1/4, 2], so
chi_{m,n}(., nu) = 0 unless nu lies in [2^(n-2), 2^(n+1)], and

    sum_{m,n} chi_{m,n}(mu - eps m 2^-n nu, nu) = 1   on R x (0, inf).

Y(mu, 2 nu) = Y(mu, nu), which is why the nu-derivative constants come out
uniform across dyadic levels after rescaling by 2^(nl).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..smooth import chi


def eta_tilde(mu, nu, eps):
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    return chi(np.abs(mu) / eps) * (chi(nu) - chi(4.0 * nu))


@dataclass(frozen=True)
class PartitionFamily:
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def normalizer(self, mu, nu):
        """Y(mu, nu) for nu > 0 (only the finitely many non-zero summands are visited)."""
        mu, nu = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(nu, dtype=float))
        if np.any(nu <= 0):
            raise ValueError("nu must be positive")
        eps = self.eps
        out = np.zeros(mu.shape)
        ln = np.log2(nu)
        # 2^-n nu in (1/4, 2)  <=>  n in (log2 nu - 1, log2 nu + 2)
        n_lo = np.floor(ln - 1).astype(int)
        for dn in range(0, 4):
            n = n_lo + dn
            s = eps * 2.0 ** (-n) * nu  # shift step in mu
            # |mu - m s| < 2 eps
            m_lo = np.ceil((mu - 2 * eps) / s).astype(int)
            m_hi = np.floor((mu + 2 * eps) / s).astype(int)
            width = int(np.max(m_hi - m_lo)) + 1 if mu.size else 0
            for k in range(max(width, 0)):
                m = m_lo + k
                ok = m <= m_hi
                out += np.where(ok, eta_tilde(mu - m * s, 2.0 ** (-n) * nu, eps), 0.0)
        return out

    def chi_mn(self, m, n, mu, nu):
        """chi_{m,n}(mu, nu); m and n may be integer arrays broadcasting against mu, nu."""
        m, n, mu, nu = np.broadcast_arrays(np.asarray(m), np.asarray(n), np.asarray(mu, dtype=float),
                                           np.asarray(nu, dtype=float))
        out = np.zeros(mu.shape)
        scale = 2.0 ** (-n.astype(float))
        num = eta_tilde(mu, scale * nu, self.eps)
        nz = num != 0
        if np.any(nz):
            shift = self.eps * m[nz] * scale[nz] * nu[nz]
            out[nz] = num[nz] / self.normalizer(mu[nz] + shift, nu[nz])
        return out

    def support_nu(self, n):
        return 2.0 ** (n - 2), 2.0 ** (n + 1)

    def active_indices(self, mu, nu):
        """All (m, n) with chi_{m,n}(mu - eps m 2^-n nu, nu) possibly non-zero at a single point."""
        ln = np.log2(nu)
        out = []
        for n in range(int(np.floor(ln - 1)), int(np.floor(ln - 1)) + 4):
            s = self.eps * 2.0 ** (-n) * nu
            for m in range(int(np.ceil((mu - 2 * self.eps) / s)), int(np.floor((mu + 2 * self.eps) / s)) + 1):
                out.append((m, n))
        return out

    def sum_at(self, mu, nu):
        """sum_{m,n} chi_{m,n}(mu - eps m 2^-n nu, nu), evaluated term by term through chi_mn."""
        mu, nu = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(nu, dtype=float))
        total = np.zeros(mu.shape)
        n_lo = np.floor(np.log2(nu) - 1).astype(int)
        for dn in range(4):
            n = n_lo + dn
            s = self.eps * 2.0 ** (-n) * nu
            m_lo = np.ceil((mu - 2 * self.eps) / s).astype(int)
            m_hi = np.floor((mu + 2 * self.eps) / s).astype(int)
            for k in range(int(np.max(m_hi - m_lo)) + 1):
                m = m_lo + k
                ok = m <= m_hi
                total += np.where(ok, self.chi_mn(m, n, mu - m * s, nu), 0.0)
        return total


def build_partition(eps):
    return PartitionFamily(float(eps))


def derivative_constants(part, n_values, orders=((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2)),
                         m_values=range(-6, 7), samples=400, rng=None):
    """Fitted C_{k,l}(n) = max |d_mu^k d_nu^l chi_{m,n}| 2^(n l) by centred differences.

    Sample points are drawn in the level-n support box with the same relative
    positions at every n, so the constants are comparable across levels.
    Steps scale with the box: eps * 1e-3 in mu and 2^n * 1e-3 in nu.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    u = rng.uniform(-1, 1, samples)
    v = rng.uniform(0, 1, samples)
    out = {}
    for n in n_values:
        lo, hi = part.support_nu(n)
        mu = 2 * part.eps * u
        nu = lo + (hi - lo) * v
        hm = part.eps * 1e-3
        hn = 2.0 ** n * 1e-3
        m = np.asarray(list(m_values))[:, None]
        for k, l in orders:
            d = _mixed_fd(lambda a, b: part.chi_mn(m, n, a, b), mu[None, :], nu[None, :], k, l, hm, hn)
            out[(n, k, l)] = float(np.max(np.abs(d))) * 2.0 ** (n * l)
    return out


_FD = {0: ([0], [1.0]), 1: ([-1, 1], [-0.5, 0.5]), 2: ([-1, 0, 1], [1.0, -2.0, 1.0])}


def _mixed_fd(f, mu, nu, k, l, hm, hn):
    om, cm = _FD[k]
    on, cn = _FD[l]
    acc = 0.0
    for a, ca in zip(om, cm):
        for b, cb in zip(on, cn):
            acc = acc + ca * cb * f(mu + a * hm, nu + b * hn)
    return acc / (hm ** k * hn ** l)
