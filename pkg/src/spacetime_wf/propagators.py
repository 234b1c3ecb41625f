"""Free and perturbed Schroedinger propagation on periodic grids (d = 1).

Free:      u_K(t) = exp(-i t K) phi, K = -1/2 d_x^2, as an exact Fourier multiplier.
Perturbed: i d_t u = H(t) u, H = 1/2 D* a(t, .) D + V(t, .), Crank-Nicolson in time
           with coefficients frozen at the step midpoint.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import GridField1D, SpacetimeField

BANDLIMIT_FRACTION = 0.8
BANDLIMIT_MASS = 1 - 1e-10


class BandLimitError(ValueError):
    pass


class LinearSolveError(RuntimeError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SliceError(RuntimeError):
    def __init__(self, message, time):
        super().__init__(f"{message} (at t={time:g})")
        self.time = time


class CFLWarning(UserWarning):
    pass


def check_bandlimit(phi: GridField1D):
    share = phi.spectral_mass_below(BANDLIMIT_FRACTION)
    if share < BANDLIMIT_MASS:
        raise BandLimitError(f"only a share {share:.12f} of the L2 mass lies below {BANDLIMIT_FRACTION:.0%} "
                             f"of Nyquist (need >= 1 - 1e-10); refine the grid")


def free_propagate(phi: GridField1D, t, check=True):
    if check:
        check_bandlimit(phi)
    xi = phi.xi
    v = np.fft.ifft(np.exp(-0.5j * t * xi ** 2) * np.fft.fft(phi.values))
    return GridField1D(phi.L, phi.N, v, phi.note)


def free_propagate_many(phi: GridField1D, times, x_index=None, check=True):
    """Slices exp(-i t K) phi for every t in ``times``, optionally restricted to columns ``x_index``.

    Restricted columns are synthesised by direct Fourier summation, which is
    the same trigonometric interpolant the FFT evaluates on the full grid.
    """
    if check:
        check_bandlimit(phi)
    times = np.asarray(times, dtype=float)
    xi = phi.xi
    ph = np.fft.fft(phi.values)
    if x_index is None:
        return np.fft.ifft(np.exp(-0.5j * np.outer(times, xi ** 2)) * ph[None, :], axis=1)
    x = phi.x[np.asarray(x_index)] + phi.L  # offset from the grid origin
    keep = ph != 0
    E = np.exp(1j * np.outer(xi[keep], x))
    out = np.empty((len(times), len(x)), dtype=complex)
    for i in range(0, len(times), 256):
        c = np.exp(-0.5j * np.outer(times[i:i + 256], xi[keep] ** 2)) * ph[keep][None, :]
        out[i:i + 256] = (c @ E) / phi.N
    return out


# ------------------------------------------------------------------ perturbed

class DiscreteHamiltonian:
    """H(t) = 1/2 D* a D + V on the periodic grid.

    ``spectral``: D = i xi multiplier with the Nyquist mode removed, a and V
    sampled at grid points.  ``fd``: D the forward difference, a sampled at
    x_{j+1/2}; D* a D is then the usual three-point symmetric stencil.
    """

    def __init__(self, field, L, N, derivative="spectral"):
        if field.dim != 1:
            raise ValueError("the quantum solver is one-dimensional")
        if derivative not in ("spectral", "fd"):
            raise ValueError("derivative must be 'spectral' or 'fd'")
        self.field, self.L, self.N, self.derivative = field, float(L), int(N), derivative
        self.dx = 2 * self.L / self.N
        self.x = -self.L + self.dx * np.arange(self.N)
        xi = 2 * np.pi * np.fft.fftfreq(self.N, self.dx)
        xi[self.N // 2] = 0.0
        self.xi = xi

    def coefficients(self, t):
        xs = self.x + 0.5 * self.dx if self.derivative == "fd" else self.x
        a = np.asarray(self.field.a(np.full_like(xs, t), xs), dtype=float)
        V = np.asarray(self.field.V(np.full_like(self.x, t), self.x), dtype=float)
        return a, V

    def apply(self, t, u, coeffs=None):
        a, V = self.coefficients(t) if coeffs is None else coeffs
        if self.derivative == "spectral":
            du = np.fft.ifft(1j * self.xi * np.fft.fft(u))
            return -0.5 * np.fft.ifft(1j * self.xi * np.fft.fft(a * du)) + V * u
        du = (np.roll(u, -1) - u) / self.dx
        return -0.5 * (a * du - np.roll(a * du, 1)) / self.dx + V * u

    def matrix(self, t):
        """Sparse (fd) or dense (spectral) matrix of H(t)."""
        a, V = self.coefficients(t)
        if self.derivative == "fd":
            n, h2 = self.N, self.dx ** 2
            main = 0.5 * (a + np.roll(a, 1)) / h2 + V
            off = -0.5 * a / h2  # couples j and j+1
            rows = np.r_[np.arange(n), np.arange(n), (np.arange(n) + 1) % n]
            cols = np.r_[np.arange(n), (np.arange(n) + 1) % n, np.arange(n)]
            return sp.csc_matrix((np.r_[main, off, off], (rows, cols)), shape=(n, n)).astype(complex)
        eye = np.eye(self.N, dtype=complex)
        return np.column_stack([self.apply(t, eye[:, k], (a, V)) for k in range(self.N)])

    def hermitian_defect(self, t):
        H = self.matrix(t)
        if sp.issparse(H):
            H = H.toarray()
        return float(np.max(np.abs(H - H.conj().T)) / max(np.max(np.abs(H)), 1e-300))

    def eig_bound(self, t):
        a, V = self.coefficients(t)
        kmax = np.pi / self.dx if self.derivative == "spectral" else 2.0 / self.dx
        return 0.5 * float(np.max(a)) * kmax ** 2 + float(np.max(np.abs(V)))


class CrankNicolson:
    """(1 + i dt/2 H(t_m)) u_{n+1} = (1 - i dt/2 H(t_m)) u_n, t_m = t_n + dt/2.

    The spectral system is solved matrix-free by a fixed-point iteration
    preconditioned with the constant-coefficient kinetic part, which is
    diagonal in Fourier space; the fd system by a sparse LU factorization.
    """

    def __init__(self, ham: DiscreteHamiltonian, dt, tol=1e-14, max_iter=200):
        self.H, self.dt, self.tol, self.max_iter = ham, float(dt), tol, max_iter
        self.iterations = 0
        if self.dt * ham.eig_bound(0.0) > 1:
            warnings.warn(f"dt * max|H| = {self.dt * ham.eig_bound(0.0):.3g} > 1: Crank-Nicolson phase accuracy "
                          f"is poor near the grid cutoff", CFLWarning, stacklevel=2)

    def step(self, t, u):
        tm = t + 0.5 * self.dt
        c = 0.5j * self.dt
        if self.H.derivative == "fd":
            A = self.H.matrix(tm)
            I = sp.identity(self.H.N, dtype=complex, format="csc")
            rhs = (I - c * A) @ u
            try:
                return spla.splu((I + c * A).tocsc()).solve(rhs)
            except RuntimeError as e:
                raise LinearSolveError(str(e), t) from e
        coeffs = self.H.coefficients(tm)
        a, V = coeffs
        a0 = 0.5 * (a.max() + a.min())
        v0 = 0.5 * (V.max() + V.min())
        M = 1.0 + c * (0.5 * a0 * self.H.xi ** 2 + v0)
        rhs = u - c * self.H.apply(tm, u, coeffs)
        nr = np.linalg.norm(rhs)
        w = np.fft.ifft(np.fft.fft(rhs) / M)
        for _ in range(self.max_iter):
            r = rhs - (w + c * self.H.apply(tm, w, coeffs))
            self.iterations += 1
            if np.linalg.norm(r) <= self.tol * nr:
                return w
            w = w + np.fft.ifft(np.fft.fft(r) / M)
        raise LinearSolveError(f"fixed-point solve did not reach tol {self.tol:g} in {self.max_iter} iterations", t)


def perturbed_propagate(field, phi: GridField1D, t_target, dt, derivative="spectral", tol=1e-14, t_start=0.0):
    """U(t_target) phi by Crank-Nicolson; dt is shrunk so the interval holds a whole number of steps."""
    span = float(t_target) - float(t_start)
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(np.ceil(abs(span) / dt - 1e-9))
    if n == 0:
        return GridField1D(phi.L, phi.N, phi.values.copy(), phi.note)
    step = span / n
    cn = CrankNicolson(DiscreteHamiltonian(field, phi.L, phi.N, derivative), step, tol)
    u = phi.values.astype(complex)
    t = float(t_start)
    for k in range(n):
        u = cn.step(t, u)
        t = t_start + (k + 1) * step
    return GridField1D(phi.L, phi.N, u, phi.note)


def decimate(values, n_out):
    """Spectral restriction of periodic samples (last axis) to n_out points (modes beyond the new Nyquist dropped)."""
    n = values.shape[-1]
    if n_out == n:
        return values
    if n_out > n or n % n_out:
        raise ValueError("n_out must divide the sample count")
    c = np.fft.fft(values, axis=-1)
    keep = np.r_[0:n_out // 2, n - n_out // 2:n]
    c = c[..., keep]
    c[..., n_out // 2] = 0.0  # the new Nyquist mode is ambiguous
    return np.fft.ifft(c, axis=-1) * (n_out / n)


def assemble_spacetime(kind, phi: GridField1D, t_window, Nt, field=None, dt=None, derivative="spectral",
                       tol=1e-14, store_N=None):
    """u(t, x) on t_window[0] .. t_window[1] (Nt samples) from phi given at t = 0.

    Free fields keep phi as their source and synthesise slices on demand;
    perturbed fields march Crank-Nicolson from t = 0 to each grid time with a
    step no larger than ``dt`` dividing the grid spacing.  ``store_N`` keeps
    each slice spectrally decimated to that many points (the solve itself runs
    on phi's grid).
    """
    t0, t1 = map(float, t_window)
    if kind == "free":
        check_bandlimit(phi)
        return SpacetimeField(phi.L, phi.N, t0, t1, Nt, source=phi, provenance={"kind": "free"})
    if kind != "perturbed":
        raise ValueError("kind must be 'free' or 'perturbed'")
    if field is None or dt is None:
        raise ValueError("perturbed assembly needs a field and dt")
    check_bandlimit(phi)
    times = t0 + (t1 - t0) / (Nt - 1) * np.arange(Nt)
    grid_dt = times[1] - times[0]
    sub = max(1, int(np.ceil(grid_dt / dt - 1e-9)))
    step = grid_dt / sub
    ham = DiscreteHamiltonian(field, phi.L, phi.N, derivative)
    Ns = phi.N if store_N is None else int(store_N)
    data = np.empty((Nt, Ns), dtype=complex)
    # march from t = 0 to the nearest grid time, then outwards in both directions
    k0 = int(np.clip(np.round(-t0 / grid_dt), 0, Nt - 1))
    try:
        u0 = perturbed_propagate(field, phi, times[k0], dt, derivative, tol).values
    except LinearSolveError as e:
        raise SliceError(str(e), times[k0]) from e
    data[k0] = decimate(u0, Ns)
    for direction, ks in ((1, range(k0 + 1, Nt)), (-1, range(k0 - 1, -1, -1))):
        cn = CrankNicolson(ham, direction * step, tol)
        u = u0.copy()
        for k in ks:
            t = times[k - direction]
            try:
                for j in range(sub):
                    u = cn.step(t + j * direction * step, u)
            except LinearSolveError as e:
                raise SliceError(str(e), times[k]) from e
            data[k] = decimate(u, Ns)
    prov = {"kind": "perturbed", "field": field.describe(), "dt": step, "derivative": derivative,
            "solve_N": phi.N}
    return SpacetimeField(phi.L, Ns, t0, t1, Nt, data=data, provenance=prov)
