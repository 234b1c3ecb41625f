"""Cutoff splitting of the technical Hamiltonian and the flow-shifted symbol family.

The technical symbol is taken at principal order,

    l(kappa; t, x, xi) = -1/2 t {a((1-kappa)t, x - kappa t xi) - 1} xi^2 - t V((1-kappa)t, x - kappa t xi),

with xi the unscaled frequency.  Cutoffs (built from the mollified step chi):

    chi_I(t)    = chi(|t| / 2M)                            = 1 for |t| < 2M
    chi_II(xi)  = chi(h|xi| / 2M) (1 - chi(4 h|xi| / eps)) = 1 for eps/2 < h|xi| < 2M
    chi_III(x)  = chi(|x| / 2M)                            = 1 for |x| < 2M

and l = l_I + l_II + l_III + l_IV with l_I = (1 - chi_I) l,
l_II = chi_I (1 - chi_II) l, l_III = chi_I chi_II (1 - chi_III) l and
l_IV = chi_I chi_II chi_III l.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..smooth import chi
from .partition import PartitionFamily
from .symbols import FunctionSymbol


def technical_symbol(field, kappa, t, x, xi):
    """Principal-order symbol l(kappa; t, x, xi) (d = 1, vectorised)."""
    t, x, xi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, xi)))
    T = (1 - kappa) * t
    X = x - kappa * t * xi
    a = field.a(T, X)
    V = field.V(T, X)
    return -0.5 * t * (a - 1.0) * xi ** 2 - t * V


@dataclass
class SplitSymbol:
    field: object
    kappa: float
    h: float
    M: float
    eps_cut: float

    def cut_I(self, t):
        return chi(np.abs(t) / (2 * self.M))

    def cut_II(self, xi):
        z = self.h * np.abs(xi)
        return chi(z / (2 * self.M)) * (1.0 - chi(4.0 * z / self.eps_cut))

    def cut_III(self, x):
        return chi(np.abs(x) / (2 * self.M))

    def full(self, t, x, xi):
        return technical_symbol(self.field, self.kappa, t, x, xi)

    def parts(self, t, x, xi):
        t, x, xi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, xi)))
        l = self.full(t, x, xi)
        c1, c2, c3 = self.cut_I(t), self.cut_II(xi), self.cut_III(x)
        return ((1 - c1) * l, c1 * (1 - c2) * l, c1 * c2 * (1 - c3) * l, c1 * c2 * c3 * l)

    def part(self, i):
        return lambda t, x, xi: self.parts(t, x, xi)[i]

    @property
    def l_I(self):
        return self.part(0)

    @property
    def l_II(self):
        return self.part(1)

    @property
    def l_III(self):
        return self.part(2)

    @property
    def l_IV(self):
        return self.part(3)


def split_symbol_l(field, kappa, h, M, eps_cut):
    """Return (l_I, l_II, l_III, l_IV) evaluators; their sum is the principal-order l."""
    if not M > eps_cut > 0:
        raise ValueError("need M > eps_cut > 0")
    s = SplitSymbol(field, float(kappa), float(h), float(M), float(eps_cut))
    return s.l_I, s.l_II, s.l_III, s.l_IV


def l_IV_bound_probe(field, h_values, M=1.0, eps_cut=0.5, kappas=(0.0, 0.25, 0.5, 0.75, 1.0),
                     orders=((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 2), (1, 0, 1), (2, 0, 0)),
                     samples=300, rng=None):
    """Fitted C(k, alpha, beta; h) = max |d_t^k d_x^alpha d_xi^beta l_IV| h^(2 + k - beta).

    Points fill the cutoff region |t|, |x| < 4M, eps/4 < h|xi| < 4M with the
    same relative positions for each h; finite-difference steps follow the
    natural scales (h in t, 1 in x, 1/h in xi).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ut, ux = rng.uniform(-1, 1, samples), rng.uniform(-1, 1, samples)
    uz = rng.uniform(0, 1, samples) * (4 * M - eps_cut / 4) + eps_cut / 4
    sg = rng.choice([-1.0, 1.0], samples)
    table = {}
    for h in h_values:
        t, x, xi = 4 * M * ut, 4 * M * ux, sg * uz / h
        steps = (1e-3 * h, 1e-3, 1e-3 / h)
        for order in orders:
            best = 0.0
            for kappa in kappas:
                l4 = SplitSymbol(field, kappa, h, M, eps_cut).l_IV
                best = max(best, float(np.max(np.abs(_fd3(l4, (t, x, xi), order, steps)))))
            k, _, beta = order
            table[(h,) + order] = best * h ** (2 + k - beta)
    return table


_C = {0: ((0,), (1.0,)), 1: ((-1, 1), (-0.5, 0.5)), 2: ((-1, 0, 1), (1.0, -2.0, 1.0))}


def _fd3(f, pts, order, steps):
    acc = 0.0
    grids = [_C[o] for o in order]
    for a, ca in zip(*grids[0]):
        for b, cb in zip(*grids[1]):
            for c, cc in zip(*grids[2]):
                acc = acc + ca * cb * cc * f(pts[0] + a * steps[0], pts[1] + b * steps[1], pts[2] + c * steps[2])
    return acc / np.prod([s ** o for s, o in zip(steps, order)])


# ------------------------------------------------------------ shifted family

@dataclass
class ShiftedFamily:
    """b_{m,n}(t, x, xi) = chi_{m,n}((x - y) sgn xi, |xi| / h) a(t + e_mn, h x + e_mn xi, xi), e_mn = eps m 2^-n.

    ``a_mn`` gives the unshifted pieces a_{m,n}(t, x, h xi) of the decomposition
    of a(t, h x, h xi); ``indices`` is the finite set of (m, n) that can be
    non-zero on supp a at this h.
    """
    a: object
    partition: PartitionFamily
    h: float
    y: float
    eta_sign: float
    indices: list

    def shift(self, m, n):
        return self.partition.eps * m * 2.0 ** (-n)

    def b(self, m, n, t, x, xi):
        t, x, xi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, xi)))
        e = self.shift(m, n)
        c = self.partition.chi_mn(m, n, (x - self.y) * np.sign(xi), np.abs(xi) / self.h)
        return c * self.a(t + e, self.h * x + e * xi, xi)

    def a_mn(self, m, n, t, x, xi_scaled):
        """a_{m,n}(t, x, h xi) with xi_scaled = h xi."""
        t, x, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, xi_scaled)))
        nu = np.abs(z) / self.h
        e = self.shift(m, n)
        c = self.partition.chi_mn(m, n, (x - self.y) * np.sign(z) - e * nu, nu)
        return c * self.a(t, self.h * x, z)

    def reconstruct(self, t, x, xi_scaled, chunk=256):
        """sum over the active indices of a_{m,n}(t, x, h xi)."""
        t, x, z = (np.asarray(v, dtype=float).ravel() for v in (t, x, xi_scaled))
        idx = np.asarray(self.indices)
        total = np.zeros(t.shape)
        for i in range(0, len(idx), chunk):
            m, n = idx[i:i + chunk, :1], idx[i:i + chunk, 1:]
            total += self.a_mn(m, n, t[None], x[None], z[None]).sum(axis=0)
        return total

    def symbol(self, m, n):
        sup = self.a.support.copy()
        return FunctionSymbol(3, lambda t, x, xi: self.b(m, n, t, x, xi), sup, name=f"b[{m},{n}]")


def shifted_symbol_family(a, partition, h, y, eta_sign):
    """Shifted family for an arity-3 symbol a(t, x, xi) whose xi-support avoids 0."""
    if a.arity != 3:
        raise ValueError("shifted_symbol_family expects an arity-3 symbol")
    (_, _), (xlo, xhi), (klo, khi) = a.support
    if klo <= 0 <= khi:
        raise ValueError("the xi-support of a must stay away from 0")
    sgn = float(np.sign(eta_sign))
    if np.sign(klo) != sgn:
        raise ValueError("eta_sign disagrees with the xi-support of a")
    kmin, kmax = sorted((abs(klo), abs(khi)))
    # |xi| / h = nu in [kmin, kmax] / h; chi_{m,n} needs nu in [2^(n-2), 2^(n+1)]
    nu_lo, nu_hi = kmin / h, kmax / h
    n_range = range(int(np.floor(np.log2(nu_lo))) - 1, int(np.ceil(np.log2(nu_hi))) + 3)
    # first argument mu = (x - y) sgn with h x in [xlo, xhi]
    mus = sorted(((xlo / h - y) * sgn, (xhi / h - y) * sgn))
    eps = partition.eps
    idx = []
    for n in n_range:
        lo_n, hi_n = max(nu_lo, 2.0 ** (n - 2)), min(nu_hi, 2.0 ** (n + 1))
        if lo_n > hi_n:
            continue
        # |mu - eps m 2^-n nu| <= 2 eps for some mu, nu in range
        c_lo, c_hi = eps * 2.0 ** (-n) * lo_n, eps * 2.0 ** (-n) * hi_n
        m_lo = int(np.floor(min((mus[0] - 2 * eps) / c_lo, (mus[0] - 2 * eps) / c_hi)))
        m_hi = int(np.ceil(max((mus[1] + 2 * eps) / c_lo, (mus[1] + 2 * eps) / c_hi)))
        idx.extend((m, n) for m in range(m_lo, m_hi + 1))
    return ShiftedFamily(a, partition, float(h), float(y), sgn, idx)


def family_derivative_ceiling(family, samples=64, step=1e-4, rng=None, chunk=256):
    """Max over active (m, n) of first and second centred differences of b_{m,n}.

    Points are drawn where b_{m,n} can be non-zero: x within 2 eps of y, xi
    in the xi-support of a and t in the t-support of a moved back by the shift.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    (tlo, thi), _, (klo, khi) = family.a.support
    eps = family.partition.eps
    u = rng.uniform(0, 1, (3, samples))
    idx = np.asarray(family.indices)
    best = 0.0
    for i in range(0, len(idx), chunk):
        m, n = idx[i:i + chunk, :1], idx[i:i + chunk, 1:]
        e = family.shift(m, n)
        base = np.stack(np.broadcast_arrays(tlo - e + (thi - tlo) * u[0], family.y + eps * (4 * u[1] - 2),
                                            klo + (khi - klo) * u[2]))
        f0 = family.b(m, n, *base)
        for k in range(3):
            d = np.zeros((3, 1, 1))
            d[k] = step
            fp, fm = family.b(m, n, *(base + d)), family.b(m, n, *(base - d))
            best = max(best, float(np.max(np.abs(fp - fm))) / (2 * step),
                       float(np.max(np.abs(fp - 2 * f0 + fm))) / step ** 2)
    return best
