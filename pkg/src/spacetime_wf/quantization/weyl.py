"""Discrete Weyl quantization on uniform periodic grids.

For a grid x_j = x0 + j dx (j < n) with dual frequencies zeta = 2 pi k / (n dx),
the kernel is

    K[j, k] = (1/n) sum_zeta exp(i zeta d dx) b(m, zeta),

d = j - k wrapped into [-n/2, n/2) and m the midpoint x0 + ((2k + d) mod 2n) dx/2,
i.e. the midpoint of x_j and x_k along the short way round.  Midpoints live on
the doubled grid, so G[q, :] = ifft(b(x0 + q dx/2, zeta)) gives every kernel
entry as K[j, k] = G[(2j - d) mod 2n, d mod n].  For a product symbol
f(x) g(zeta) this collapses to K[j, k] = f(m) gcheck(d).
"""
from __future__ import annotations

import warnings

import numpy as np

from ..grids import GridField1D, SpacetimeField
from .symbols import ProductSymbol, SumSymbol

MODES = {
    "spatial:(hx,hp)": (2, lambda h: (h, h)),
    "spatial:(x,hp)": (2, lambda h: (1.0, h)),
    "spacetime:(t,x,h2pt,hpx)": (4, lambda h: (1.0, 1.0, h * h, h)),
    "spacetime:(t,x,hpx)": (3, lambda h: (1.0, 1.0, h)),
    "spacetime:(t,hx,hpx)": (3, lambda h: (1.0, h, h)),
}
MARGIN_FRACTION = 0.25


class MarginError(ValueError):
    """Symbol support leaves the inner region of the periodic box."""

    def __init__(self, message, h=None):
        super().__init__(message)
        self.h = h


class AliasingWarning(UserWarning):
    pass


# ------------------------------------------------------------------ kernels

def dual_frequencies(n, dx):
    return 2 * np.pi * np.fft.fftfreq(n, dx)


def wrap_offset(d, n):
    return (d + n // 2) % n - n // 2


def _index_arrays(n, rows, cols):
    rows = np.arange(n) if rows is None else np.asarray(rows)
    cols = np.arange(n) if cols is None else np.asarray(cols)
    d = wrap_offset(rows[:, None] - cols[None, :], n)
    q = (2 * rows[:, None] - d) % (2 * n)
    return rows, cols, d, q


def product_kernel(f, g, x0, dx, n, rows=None, cols=None):
    """Kernel block of the Weyl quantization of f(x) g(zeta)."""
    gcheck = np.fft.ifft(g(dual_frequencies(n, dx)))
    rows, cols, d, q = _index_arrays(n, rows, cols)
    return f(x0 + q * dx / 2) * gcheck[d % n]


def midpoint_table(sym, x0, dx, n):
    """G[q, :] = ifft_zeta b(x0 + q dx / 2, zeta) for every doubled-grid midpoint q < 2n."""
    zeta = dual_frequencies(n, dx)
    m = x0 + np.arange(2 * n) * dx / 2
    return np.fft.ifft(np.asarray(sym(m[:, None], zeta[None, :]), dtype=complex), axis=1)


def weyl_kernel(sym, x0, dx, n, rows=None, cols=None, table=None):
    """Kernel block of the Weyl quantization of a general b(x, zeta) via the doubled grid."""
    rows, cols, d, q = _index_arrays(n, rows, cols)
    if table is not None:
        return table[q, d % n]
    zeta = dual_frequencies(n, dx)
    qs, inv = np.unique(q, return_inverse=True)
    m = x0 + qs * dx / 2
    G = np.fft.ifft(np.asarray(sym(m[:, None], zeta[None, :]), dtype=complex), axis=1)
    return G[inv.reshape(q.shape), d % n]


def weyl_kernel_dense(sym, x0, dx, n):
    """O(n^3) midpoint quadrature, the reference for the FFT routes.

    The symbol is tabulated once on the doubled midpoint grid; every entry is
    then an explicit sum over zeta of exp(i zeta d dx) b(m, zeta).
    """
    zeta = dual_frequencies(n, dx)
    A = np.asarray(sym((x0 + np.arange(2 * n) * dx / 2)[:, None], zeta[None, :]), dtype=complex)
    A = np.broadcast_to(A, (2 * n, n))
    offs = np.arange(-(n // 2), n - n // 2)
    P = np.exp(1j * np.outer(offs * dx, zeta))
    K = np.empty((n, n), dtype=complex)
    k = np.arange(n)
    for j in range(n):
        d = wrap_offset(j - k, n)
        q = (2 * k + d) % (2 * n)
        K[j] = np.sum(P[d + n // 2] * A[q], axis=1) / n
    return K


def weyl_kernel_dense_2d(sym, t0, dt, nt, x0, dx, nx):
    """Dense spacetime kernel ((nt nx) x (nt nx)) by direct quadrature (tiny grids only)."""
    om = dual_frequencies(nt, dt)
    ze = dual_frequencies(nx, dx)
    mt = t0 + np.arange(2 * nt) * dt / 2
    mx = x0 + np.arange(2 * nx) * dx / 2
    A = np.asarray(sym(mt[:, None, None, None], mx[None, :, None, None], om[None, None, :, None],
                       ze[None, None, None, :]), dtype=complex)
    A = np.broadcast_to(A, (2 * nt, 2 * nx, nt, nx))
    I, J = np.meshgrid(np.arange(nt), np.arange(nx), indexing="ij")
    I, J = I.ravel(), J.ravel()
    K = np.empty((nt * nx, nt * nx), dtype=complex)
    for r in range(nt * nx):
        dT = wrap_offset(I[r] - I, nt)
        dX = wrap_offset(J[r] - J, nx)
        qt = (2 * I + dT) % (2 * nt)
        qx = (2 * J + dX) % (2 * nx)
        ph = np.exp(1j * (dT[:, None, None] * dt * om[None, :, None] + dX[:, None, None] * dx * ze[None, None, :]))
        K[r] = np.sum(ph * A[qt, qx], axis=(1, 2)) / (nt * nx)
    return K


def apply_kernel_axis(K, U, axis=-1):
    """Apply a (rows x cols) kernel along ``axis`` of U."""
    U = np.moveaxis(U, axis, -1)
    out = U @ K.T
    return np.moveaxis(out, -1, axis)


def _apply_product_1d(f, g, U, x0, dx, axis=-1, block=1024):
    n = U.shape[axis]
    out = np.empty(U.shape, dtype=complex)
    Um = np.moveaxis(U, axis, -1)
    Om = np.moveaxis(out, axis, -1)
    for start in range(0, n, block):
        rows = np.arange(start, min(n, start + block))
        Om[..., rows] = Um @ product_kernel(f, g, x0, dx, n, rows).T
    return out


def _apply_general_1d(sym, u, x0, dx, block=512):
    n = u.shape[-1]
    out = np.empty(u.shape, dtype=complex)
    G = midpoint_table(sym, x0, dx, n)
    for start in range(0, n, block):
        rows = np.arange(start, min(n, start + block))
        out[..., rows] = u @ weyl_kernel(sym, x0, dx, n, rows, table=G).T
    return out


def _apply_general_2d(sym, U, t0, dt, x0, dx):
    """General arity-4 spacetime action, chunked over doubled-grid time midpoints."""
    nt, nx = U.shape
    om = dual_frequencies(nt, dt)
    ze = dual_frequencies(nx, dx)
    mx = x0 + np.arange(2 * nx) * dx / 2
    j = np.arange(nx)
    dxo = wrap_offset(j[:, None] - j[None, :], nx)
    qx = (2 * j[:, None] - dxo) % (2 * nx)
    out = np.zeros(U.shape, dtype=complex)
    for qt in range(2 * nt):
        mt = t0 + qt * dt / 2
        A = np.asarray(sym(mt, mx[:, None, None], om[None, :, None], ze[None, None, :]), dtype=complex)
        A = np.broadcast_to(A, (2 * nx, nt, nx))
        G = np.fft.ifft2(A, axes=(1, 2))
        for dto in range(-(nt // 2), nt - nt // 2):
            if (qt + dto) % 2:
                continue
            i = ((qt + dto) // 2) % nt
            k = (i - dto) % nt
            Kx = G[qx, dto % nt, dxo % nx]
            out[i] += Kx @ U[k]
    return out


# ----------------------------------------------------------- public action

def _check_mode(mode, arity):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(MODES)}")
    want = MODES[mode][0]
    if arity != want:
        raise ValueError(f"mode {mode} needs an arity-{want} symbol (got {arity})")


def check_margin(lo, hi, L, h=None, axis_name="x"):
    """The support [lo, hi] (grid coordinates) must avoid the outer 25% of [-L, L] on each side."""
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return
    inner = L - MARGIN_FRACTION * 2 * L
    if lo < -inner or hi > inner:
        raise MarginError(f"symbol {axis_name}-support [{lo:.4g}, {hi:.4g}] leaves the inner region "
                          f"[{-inner:.4g}, {inner:.4g}]" + (f" at h={h:g}" if h is not None else ""), h)


def _check_alias(xi_lo, xi_hi, xi_scale, dx, h):
    if not (np.isfinite(xi_lo) and np.isfinite(xi_hi)):
        return
    reach = xi_scale * np.pi / dx
    if reach < max(abs(xi_lo), abs(xi_hi)):
        warnings.warn(f"grid frequencies reach only {reach:.4g} in symbol units, below the xi-support "
                      f"bound {max(abs(xi_lo), abs(xi_hi)):.4g} (h={h:g})", AliasingWarning, stacklevel=3)


def _terms(a):
    if isinstance(a, SumSymbol):
        return a.terms
    return [a]


def weyl_apply(a, mode, u, h, check=True, force_general=False):
    """Discrete Weyl action of the scaled symbol on a GridField1D or SpacetimeField.

    Modes follow the scaling conventions: ``spatial:(hx,hp)`` quantizes
    (x, zeta) -> a(hx, h zeta); ``spatial:(x,hp)`` uses a(x, h zeta);
    ``spacetime:(t,x,h2pt,hpx)`` uses a(t, x, h^2 omega, h zeta); the arity-3
    spacetime modes leave t unquantized (exactly multiplication in t).
    """
    _check_mode(mode, a.arity)
    scales = MODES[mode][1](h)
    spatial = mode.startswith("spatial")
    ix = 0 if spatial else 1
    if check:
        xs = a.support[ix] / scales[ix]
        check_margin(min(xs), max(xs), u.L, h)
        _check_alias(*a.support[-1], scales[-1], u.dx, h)
        if not spatial and np.all(np.isfinite(a.support[0])):
            if a.support[0][0] < u.t0 or a.support[0][1] > u.t1:
                raise MarginError(f"symbol t-support {a.support[0].tolist()} leaves the time window "
                                  f"[{u.t0:g}, {u.t1:g}]", h)
    if spatial:
        x0 = -u.L
        out = np.zeros(u.N, dtype=complex)
        for term in _terms(a):
            if isinstance(term, ProductSymbol) and not force_general:
                f, g = term.scaled_factors(scales)
                out += _apply_product_1d(f, g, u.values, x0, u.dx)
            else:
                sym = (lambda s: (lambda m, z: term(s[0] * m, s[1] * z)))(scales)
                out += _apply_general_1d(sym, u.values, x0, u.dx)
        return u.with_values(out)
    U = u.materialize()
    x0 = -u.L
    out = np.zeros(U.shape, dtype=complex)
    t = u.times
    for term in _terms(a):
        if isinstance(term, ProductSymbol) and not force_general:
            fac = term.scaled_factors(scales)
            if term.arity == 4:
                V = _apply_product_1d(fac[1], fac[3], U, x0, u.dx, axis=1)
                out += _apply_product_1d(fac[0], fac[2], V, u.t0, u.dt, axis=0)
            else:
                V = _apply_product_1d(fac[1], fac[2], U, x0, u.dx, axis=1)
                out += fac[0](t)[:, None] * V
        elif term.arity == 4:
            sym = (lambda s: (lambda tt, m, w, z: term(s[0] * tt, s[1] * m, s[2] * w, s[3] * z)))(scales)
            out += _apply_general_2d(sym, U, u.t0, u.dt, x0, u.dx)
        else:
            for i, ti in enumerate(t):
                sym = (lambda s, ti: (lambda m, z: term(ti, s[1] * m, s[2] * z)))(scales, ti)
                out[i] += _apply_general_1d(sym, U[i], x0, u.dx)
    return SpacetimeField(u.L, u.N, u.t0, u.t1, u.Nt, out, dict(u.provenance, weyl=mode))


def weyl_apply_dense(a, mode, u, h):
    """Oracle counterpart of weyl_apply by direct quadrature.

    Spatial modes and the arity-3 spacetime modes use the dense 1D kernel.
    Arity-4 sums of products use Kronecker products of dense 1D kernels (the
    action is linear in the symbol); a general arity-4 symbol uses the full
    dense spacetime kernel, which is only feasible on tiny grids.
    """
    _check_mode(mode, a.arity)
    s = MODES[mode][1](h)
    if mode.startswith("spatial"):
        K = weyl_kernel_dense(lambda m, z: a(s[0] * m, s[1] * z), -u.L, u.dx, u.N)
        return u.with_values(K @ u.values)
    U = u.materialize()
    t = u.times
    out = np.zeros(U.shape, dtype=complex)
    if a.arity == 3:
        for i, ti in enumerate(t):
            K = weyl_kernel_dense(lambda m, z: a(ti, s[1] * m, s[2] * z), -u.L, u.dx, u.N)
            out[i] = K @ U[i]
    elif all(isinstance(term, ProductSymbol) for term in _terms(a)):
        for term in _terms(a):
            ft, fx, fw, fz = term.scaled_factors(s)
            Kt = weyl_kernel_dense(lambda m, w: ft(m) * fw(w), u.t0, u.dt, u.Nt)
            Kx = weyl_kernel_dense(lambda m, z: fx(m) * fz(z), -u.L, u.dx, u.N)
            out += Kt @ U @ Kx.T
    else:
        K = weyl_kernel_dense_2d(lambda tt, m, w, z: a(s[0] * tt, s[1] * m, s[2] * w, s[3] * z),
                                 u.t0, u.dt, u.Nt, -u.L, u.dx, u.N)
        out = (K @ U.ravel()).reshape(U.shape)
    return SpacetimeField(u.L, u.N, u.t0, u.t1, u.Nt, out, dict(u.provenance, weyl=mode))
