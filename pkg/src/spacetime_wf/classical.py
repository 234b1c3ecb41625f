"""Classical flows: frozen-time Hamilton flow, scattering data, and the
rescaled deformation flow Phi_h with its reduced (mu-parametrised) form.

Points are batched where the independent variable is shared, so one
``solve_ivp`` call advances many orbits at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

DEFAULT_METHOD = "DOP853"


class IntegrationError(RuntimeError):
    """The ODE solver failed; ``last_time`` is the furthest time reached."""

    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class ScatteringConvergenceError(RuntimeError):
    pass


# ------------------------------------------------------------------ datatypes

@dataclass(frozen=True)
class PhasePoint:
    y: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, dtype=float)))
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.eta))):
            raise ValueError("phase point entries must be finite")


@dataclass(frozen=True)
class ExtendedPhasePoint:
    """(t, x, tau, xi) in R^{2(1+d)}."""
    t: float
    x: np.ndarray
    tau: float
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if not (np.isfinite(self.t) and np.isfinite(self.tau) and np.all(np.isfinite(self.x))
                and np.all(np.isfinite(self.xi))):
            raise ValueError("extended phase point entries must be finite")

    @property
    def dim(self):
        return self.x.size

    def as_array(self):
        return np.concatenate([[self.t], self.x, [self.tau], self.xi])

    @classmethod
    def from_array(cls, v):
        v = np.asarray(v, dtype=float)
        d = (v.size - 2) // 2
        return cls(v[0], v[1:1 + d], v[1 + d], v[2 + d:])

    def distance(self, other):
        return float(np.max(np.abs(self.as_array() - other.as_array())))


@dataclass
class Trajectory:
    """Accepted solver samples of (x(t), xi(t))."""
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    tol: float
    method: str = DEFAULT_METHOD

    @property
    def steps(self):
        return np.diff(self.t)

    def rows(self):
        d = self.x.shape[1]
        head = ["t"] + [f"x{i}" for i in range(d)] + [f"xi{i}" for i in range(d)]
        return head, [[t, *x, *k] for t, x, k in zip(self.t, self.x, self.xi)]


@dataclass
class ScatteringData:
    direction: int
    x: np.ndarray
    xi: np.ndarray
    horizons: list
    residual: float
    verdict: str
    history: list = dc_field(default_factory=list)

    def to_dict(self):
        return {"direction": "+" if self.direction > 0 else "-", "x": self.x.tolist(), "xi": self.xi.tolist(),
                "horizons": self.horizons, "residual": self.residual, "verdict": self.verdict}


# ------------------------------------------------------------------- helpers

def _quad(dA, v):
    """(dA : v v)_k = d_k a_ij v_i v_j for batched dA (n, k, i, j), v (n, d)."""
    return np.einsum("nkij,ni,nj->nk", dA, v, v)


def _integrate(rhs, t0, t1, y0, tol, method=DEFAULT_METHOD, dense=False, t_eval=None, events=None,
               max_step=np.inf):
    with np.errstate(invalid="ignore"):
        sol = solve_ivp(rhs, (t0, t1), y0, method=method, rtol=tol, atol=tol * 1e-2, dense_output=dense,
                        t_eval=t_eval, events=events, max_step=max_step)
    if sol.status == -1:
        last = sol.t[-1] if sol.t.size else t0
        raise IntegrationError(f"integration failed at t={last:.6g}: {sol.message}", last)
    return sol


def _as_batch(x, d):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, d)


# ---------------------------------------------------------- frozen-time flow

def _hamilton_rhs(field, s, n):
    d = field.dim

    def rhs(t, u):
        x = u[: n * d].reshape(n, d)
        k = u[n * d:].reshape(n, d)
        ts = np.full(n, s)
        A = field.metric(ts, x)
        dx = np.einsum("nij,nj->ni", A, k)
        dk = -0.5 * _quad(field.metric_grad(ts, x), k)
        return np.concatenate([dx.ravel(), dk.ravel()])

    return rhs


def frozen_energy(field, s, x, xi):
    x = _as_batch(x, field.dim)
    xi = _as_batch(xi, field.dim)
    A = field.metric(np.full(len(x), s), x)
    return 0.5 * np.einsum("nij,ni,nj->n", A, xi, xi)


def hamilton_flow(field, s, y, eta, t_end, tol=1e-10, method=DEFAULT_METHOD):
    """Integrate x' = a(s, x) xi, xi_k' = -1/2 d_k a_ij(s, x) xi_i xi_j from t = s."""
    d = field.dim
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t_end == s:
        return Trajectory(np.array([s]), y[None], eta[None], tol, method)
    speed = np.linalg.norm(eta)
    sol = _integrate(_hamilton_rhs(field, s, 1), s, t_end, np.concatenate([y, eta]), tol, method,
                     max_step=0.25 / speed if speed > 0 else np.inf)
    return Trajectory(sol.t, sol.y[:d].T.copy(), sol.y[d:].T.copy(), tol, method)


def metric_support_radius(field):
    """Radius outside which a - delta is below 1e-16 (0 for the identity)."""
    part = field.metric_part
    if getattr(part, "tag", "") == "bump-metric":
        return float(np.linalg.norm(part.center) + 6.1 * part.width)
    return 0.0


def classify_nontrapping(field, s, y, eta, escape_radius=100.0, t_max=1000.0, tol=1e-9):
    """Return 'forward', 'backward', 'both' or 'undetermined'."""
    d = field.dim
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if escape_radius <= metric_support_radius(field) + np.linalg.norm(y):
        raise ValueError("escape_radius must exceed the coefficient support radius plus |y|")
    rhs = _hamilton_rhs(field, s, 1)

    def escape(t, u):
        return float(np.dot(u[:d], u[:d]) - escape_radius ** 2)

    escape.terminal = True
    escape.direction = 1
    ok = {}
    for sign in (+1, -1):
        sol = _integrate(rhs, s, s + sign * t_max, np.concatenate([y, eta]), tol, events=escape)
        hit = sol.t_events[0].size > 0
        if hit:
            u = sol.y_events[0][0]
            A = field.metric(np.array([s]), u[None, :d])[0]
            radial = float(u[:d] @ A @ u[d:])
            hit = radial * sign > 0
        ok[sign] = hit
    if ok[1] and ok[-1]:
        return "both"
    if ok[1]:
        return "forward"
    if ok[-1]:
        return "backward"
    return "undetermined"


def scattering_data(field, s, y, eta, direction=+1, tol=1e-10, horizon=None, max_horizon=1e7,
                    method=DEFAULT_METHOD):
    """Asymptotic data x_pm = lim (x(t) - (t - s) xi(t)), xi_pm = lim xi(t).

    The combination q = x - (t - s) xi is integrated directly,
    q' = (a - 1) xi + (t - s) 1/2 d a : xi xi, so the limit is read off without
    cancellation.  The horizon doubles until successive estimates differ by at
    most ``tol``.
    """
    d = field.dim
    direction = 1 if direction in (+1, "+", "forward") else -1
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    speed = np.linalg.norm(eta)
    if speed == 0:
        raise ScatteringConvergenceError("eta = 0 is a trapped (stationary) point")
    if horizon is None:
        horizon = max(4.0, 2.0 * (metric_support_radius(field) + np.linalg.norm(y)) / speed)
    ts = np.array([s])

    def rhs(t, u):
        q, k = u[:d], u[d:]
        x = q + (t - s) * k
        A = field.metric(ts, x[None])[0]
        g = 0.5 * _quad(field.metric_grad(ts, x[None]), k[None])[0]
        return np.concatenate([(A - np.eye(d)) @ k + (t - s) * g, -g])

    ivp_tol = max(tol * 1e-2, 1e-13)
    u = np.concatenate([y, eta])
    t_now = s
    prev = None
    history = []
    T = horizon
    while True:
        t_next = s + direction * T
        sol = _integrate(rhs, t_now, t_next, u, ivp_tol, method)
        u = sol.y[:, -1]
        t_now = t_next
        history.append((T, u.copy()))
        if prev is not None:
            resid = float(np.max(np.abs(u - prev)))
            if resid <= tol:
                x_end = u[:d] + (t_now - s) * u[d:]
                A = field.metric(ts, x_end[None])[0]
                radial = float(x_end @ A @ u[d:]) * direction
                verdict = "non-trapped" if radial > 0 else "undetermined"
                return ScatteringData(direction, u[:d].copy(), u[d:].copy(), [history[-2][0], T], resid,
                                      verdict, [(h, v.tolist()) for h, v in history])
        prev = u.copy()
        T *= 2.0
        if T > max_horizon:
            raise ScatteringConvergenceError(
                f"horizon doubling stalled: residual above {tol:g} at horizon {T / 2:g}")


# ------------------------------------------------- technical Hamiltonian l0

def eval_l0(field, kappa, point):
    """l0 = -1/2 t {a((1-k)t, x - k t xi) - delta} xi xi - t V((1-k)t, x - k t xi)."""
    p = point if isinstance(point, ExtendedPhasePoint) else ExtendedPhasePoint.from_array(point)
    t, x, xi = p.t, p.x, p.xi
    T = np.array([(1 - kappa) * t])
    X = (x - kappa * t * xi)[None]
    A = field.metric(T, X)[0] - np.eye(field.dim)
    return float(-0.5 * t * xi @ A @ xi - t * field.potential(T, X)[0])


def l0_gradient(field, kappa, t, x, xi):
    """Analytic (d_t l0, d_x l0, d_xi l0) at batched points (t (n,), x, xi (n, d))."""
    d = field.dim
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = _as_batch(x, d)
    xi = _as_batch(xi, d)
    T = (1 - kappa) * t
    X = x - kappa * t[:, None] * xi
    A = field.metric(T, X) - np.eye(d)
    dA = field.metric_grad(T, X)
    dtA = field.metric(T, X, 1)
    V = field.potential(T, X)
    dV = field.potential_grad(T, X)
    dtV = field.potential(T, X, 1)
    Axx = np.einsum("nij,ni,nj->n", A, xi, xi)
    dAxx = _quad(dA, xi)
    dtAxx = np.einsum("nij,ni,nj->n", dtA, xi, xi)
    tc = t[:, None]
    dl_dx = -0.5 * tc * dAxx - tc * dV
    dl_dxi = -tc * np.einsum("nij,nj->ni", A, xi) + 0.5 * kappa * tc ** 2 * dAxx + kappa * tc ** 2 * dV
    xi_dAxx = np.sum(xi * dAxx, axis=1)
    xi_dV = np.sum(xi * dV, axis=1)
    dl_dt = (-0.5 * Axx - V - 0.5 * t * ((1 - kappa) * dtAxx - kappa * xi_dAxx)
             - t * ((1 - kappa) * dtV - kappa * xi_dV))
    return dl_dt, dl_dx, dl_dxi


# ------------------------------------------------------- rescaled flow Phi_h

def _technical_rhs(field, h, s_vec):
    d = field.dim
    n = len(s_vec)
    eye = np.eye(d)
    t = s_vec[:, None]

    def rhs(kappa, u):
        U = u.reshape(n, 2 * d + 1)
        x, tau, xi = U[:, :d], U[:, d], U[:, d + 1:]
        T = (1 - kappa) * s_vec
        X = x - kappa * t * xi / h
        A = field.metric(T, X) - eye
        dA = field.metric_grad(T, X)
        dtA = field.metric(T, X, 1)
        V = field.potential(T, X)
        dV = field.potential_grad(T, X)
        dtV = field.potential(T, X, 1)
        dAxx = _quad(dA, xi)
        Axi = np.einsum("nij,nj->ni", A, xi)
        dx = -t * Axi / h + 0.5 * kappa * t ** 2 * dAxx / h ** 2 + kappa * t ** 2 * dV
        dtau = (0.5 * np.sum(Axi * xi, axis=1)
                + 0.5 * (1 - kappa) * s_vec * np.einsum("nij,ni,nj->n", dtA, xi, xi)
                - 0.5 * kappa * s_vec * np.sum(xi * dAxx, axis=1) / h
                + h ** 2 * V + h ** 2 * (1 - kappa) * s_vec * dtV
                - h * kappa * s_vec * np.sum(xi * dV, axis=1))
        dxi = 0.5 * t * dAxx / h + h * t * dV
        return np.concatenate([dx, dtau[:, None], dxi], axis=1).ravel()

    return rhs


def _points_to_batch(points, d):
    arr = np.atleast_2d(np.asarray([p.as_array() if isinstance(p, ExtendedPhasePoint) else p for p in points],
                                   dtype=float))
    return arr[:, 0].copy(), arr[:, 1:].copy()


def technical_flow_batch(field, h, kappa_from, kappa_to, states, tol=1e-12, method=DEFAULT_METHOD):
    """Advance an (n, 2(1+d)) array of (t, x, tau, xi) from kappa_from to kappa_to.

    The t column is never integrated, so it is returned unchanged.
    """
    if not 0 < h <= 1:
        raise ValueError("h must lie in (0, 1]")
    states = np.atleast_2d(np.asarray(states, dtype=float))
    s_vec = states[:, 0].copy()
    if kappa_from == kappa_to:
        return states.copy()
    # the argument x - kappa t xi / h sweeps a unit length in a kappa-window of
    # width ~ h / |t xi|; cap the step so no coefficient feature is skipped
    d = field.dim
    speed = np.max(np.abs(s_vec) * np.linalg.norm(states[:, 2 + d:], axis=1)) / h
    max_step = 0.25 / speed if speed > 0 else np.inf
    sol = _integrate(_technical_rhs(field, h, s_vec), kappa_from, kappa_to, states[:, 1:].ravel(), tol, method,
                     max_step=max_step)
    out = states.copy()
    out[:, 1:] = sol.y[:, -1].reshape(len(s_vec), -1)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("flow left the numerically resolvable region", kappa_to)
    return out


def technical_flow(field, h, kappa, start, tol=1e-12, method=DEFAULT_METHOD):
    """Image Phi_h(kappa, start) of one or several extended phase points."""
    if not 0 <= kappa <= 1:
        raise ValueError("kappa must lie in [0, 1]")
    single = isinstance(start, ExtendedPhasePoint)
    arr = start.as_array()[None] if single else np.atleast_2d(np.asarray(start, dtype=float))
    out = technical_flow_batch(field, h, 0.0, kappa, arr, tol, method)
    return ExtendedPhasePoint.from_array(out[0]) if single else out


def technical_flow_inverse(field, h, kappa, image, tol=1e-12, method=DEFAULT_METHOD):
    """Phi_h(kappa)^{-1} by integrating the same field from kappa back to 0."""
    single = isinstance(image, ExtendedPhasePoint)
    arr = image.as_array()[None] if single else np.atleast_2d(np.asarray(image, dtype=float))
    out = technical_flow_batch(field, h, kappa, 0.0, arr, tol, method)
    return ExtendedPhasePoint.from_array(out[0]) if single else out


# ---------------------------------------------------------- reduced flow

def _reduced_rhs(field, h):
    d = field.dim

    def rhs(mu, u):
        z, zeta = u[:d][None], u[d:][None]
        m = np.array([mu])
        A = field.metric(m, z)[0]
        dz = A @ zeta[0] / h
        dzeta = -0.5 * _quad(field.metric_grad(m, z), zeta)[0] / h - h * field.potential_grad(m, z)[0]
        return np.concatenate([dz, dzeta])

    return rhs


def reduced_rho(field, h, s, y, sigma, eta):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    A = field.metric(np.array([s]), y[None])[0]
    return float(sigma + 0.5 * eta @ A @ eta + h ** 2 * field.potential(np.array([s]), y[None])[0])


def reduced_flow(field, h, s, y, sigma, eta, mu, tol=1e-12, method=DEFAULT_METHOD, dense=False):
    """Solve dz/dmu = h^-1 a(mu, z) zeta, dzeta/dmu = -1/2 h^-1 da : zeta zeta - h dV.

    Returns (z(mu), rho, zeta(mu)); rho is the conserved value
    sigma + 1/2 a(s, y) eta eta + h^2 V(s, y).  With ``dense=True`` the scipy
    solution object is returned as a fourth element.
    """
    d = field.dim
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    lo, hi = min(s, 0.0), max(s, 0.0)
    if not lo - 1e-14 <= mu <= hi + 1e-14:
        raise ValueError("mu must lie between s and 0")
    rho = reduced_rho(field, h, s, y, sigma, eta)
    if mu == s and not dense:
        return y.copy(), rho, eta.copy()
    speed = np.linalg.norm(eta) / h
    sol = _integrate(_reduced_rhs(field, h), s, mu, np.concatenate([y, eta]), tol, method, dense=dense,
                     max_step=0.25 / speed if speed > 0 else np.inf)
    z, zeta = sol.y[:d, -1].copy(), sol.y[d:, -1].copy()
    if dense:
        return z, rho, zeta, sol
    return z, rho, zeta


def reconstruct_from_reduced(field, h, kappa, s, z, rho, zeta):
    """Map reduced variables back to Phi_h(kappa) = (s, x, tau, xi), mu = (1 - kappa) s."""
    if s == 0:
        raise ValueError("the change of variables needs s != 0")
    mu = (1 - kappa) * s
    z = np.atleast_1d(z)
    zeta = np.atleast_1d(zeta)
    A = field.metric(np.array([mu]), z[None])[0]
    V = field.potential(np.array([mu]), z[None])[0]
    x = z + (s - mu) * zeta / h
    tau = rho - (mu / s) * (0.5 * zeta @ A @ zeta + h ** 2 * V) - ((s - mu) / s) * 0.5 * zeta @ zeta
    return ExtendedPhasePoint(s, x, tau, zeta)


def technical_flow_via_reduced(field, h, kappa, start, tol=1e-12, method=DEFAULT_METHOD):
    """Second route to Phi_h(kappa, start) through the mu-parametrised system."""
    p = start
    mu = (1 - kappa) * p.t
    z, rho, zeta = reduced_flow(field, h, p.t, p.x, p.tau, p.xi, mu, tol, method)
    return reconstruct_from_reduced(field, h, kappa, p.t, z, rho, zeta)


# ------------------------------------------------------- comparison orbit

def comparison_orbit(field, h, s, y, eta, mu, tol=1e-12, method=DEFAULT_METHOD):
    """(x~, xi~)(mu): the frozen-time flow in the scaled variable mu."""
    d = field.dim
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    ts = np.array([s])

    def rhs(m, u):
        x, k = u[:d][None], u[d:][None]
        A = field.metric(ts, x)[0]
        return np.concatenate([A @ k[0] / h, -0.5 * _quad(field.metric_grad(ts, x), k)[0] / h])

    if mu == s:
        return y.copy(), eta.copy()
    speed = np.linalg.norm(eta) / h
    sol = _integrate(rhs, s, mu, np.concatenate([y, eta]), tol, method, max_step=0.25 / speed if speed > 0 else np.inf)
    return sol.y[:d, -1].copy(), sol.y[d:, -1].copy()


# ---------------------------------------------------- high-energy limit

@dataclass
class HighEnergyReport:
    h_values: list
    table: np.ndarray
    extrapolated: np.ndarray
    predicted: np.ndarray
    discrepancy: np.ndarray
    scattering: ScatteringData

    @property
    def max_discrepancy(self):
        return float(np.max(self.discrepancy))

    def to_dict(self):
        return {"h_values": list(map(float, self.h_values)), "table": self.table.tolist(),
                "extrapolated": self.extrapolated.tolist(), "predicted": self.predicted.tolist(),
                "discrepancy": self.discrepancy.tolist(), "scattering": self.scattering.to_dict()}


def richardson(h_values, values, levels=1):
    """Repeated Richardson extrapolation to h = 0 assuming an expansion in powers of h.

    ``levels=1`` is the linear-in-h combination 2 F(h) - F(2h) on the two
    smallest h (ratio 2); higher levels remove successive powers.
    """
    h = np.asarray(h_values, dtype=float)
    F = np.asarray(values, dtype=float)
    order = np.argsort(-h)
    h, F = h[order], F[order]
    table = [F]
    for lev in range(1, levels + 1):
        prev = table[-1]
        ratio = h[:-lev] / h[lev:]
        new = (ratio[:, None] ** lev * prev[1:] - prev[:-1]) / (ratio[:, None] ** lev - 1)
        table.append(new)
    return table[-1][-1]


def highenergy_limit(field, start, h_seq=None, tol=1e-12, levels=1, scatter_tol=1e-11, method=DEFAULT_METHOD):
    """Phi_h(1, start) over h_seq, its extrapolation to h = 0 and the scattering prediction."""
    if h_seq is None:
        h_seq = 2.0 ** -np.arange(3, 8)
    p = start
    if p.t == 0:
        raise ValueError("the high-energy limit needs s != 0")
    direction = +1 if p.t < 0 else -1
    table = np.array([technical_flow(field, h, 1.0, p, tol, method).as_array() for h in h_seq])
    extrap = richardson(h_seq, table, levels)
    sd = scattering_data(field, p.t, p.x, p.xi, direction, tol=scatter_tol, method=method)
    A = field.metric(np.array([p.t]), p.x[None])[0]
    tau_lim = p.tau + 0.5 * p.xi @ A @ p.xi - 0.5 * sd.xi @ sd.xi
    pred = np.concatenate([[p.t], sd.x, [tau_lim], sd.xi])
    return HighEnergyReport(list(h_seq), table, extrap, pred, np.abs(extrap - pred), sd)


# ------------------------------------------------------ Mourre diagnostics

@dataclass
class MourreReport:
    h: float
    radial_constant: float
    c1: float
    C2: float
    energy_drift: float
    C7: float
    energy_start: float

    def to_dict(self):
        return dict(self.__dict__)


def mourre_diagnostics(field, h, s, y, eta, n_samples=400, tol=1e-12, method=DEFAULT_METHOD):
    """Radial and energy bounds along the reduced flow from mu = s to mu = 0.

    radial_constant = max | |z(mu)| -/+ h^-1 (mu - s) (a(s,y) eta eta)^(1/2) |;
    c1, C2 bracket a(mu, z) zeta zeta; energy_drift = max |E(mu) - E(s)| and
    C7 = drift / (h E(s) + h^(1+eps)).
    """
    d = field.dim
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    sign = 1.0 if s < 0 else -1.0
    *_, sol = reduced_flow(field, h, s, y, 0.0, eta, 0.0, tol, method, dense=True)
    mus = np.linspace(s, 0.0, n_samples)
    U = sol.sol(mus)
    z, zeta = U[:d].T, U[d:].T
    A0 = field.metric(np.array([s]), y[None])[0]
    E0 = float(eta @ A0 @ eta)
    radial = np.abs(np.linalg.norm(z, axis=1) - sign * (mus - s) / h * np.sqrt(E0))
    E = np.einsum("nij,ni,nj->n", field.metric(mus, z), zeta, zeta)
    if not np.all(np.isfinite(E)):
        return MourreReport(h, np.inf, np.inf, np.inf, np.inf, np.inf, E0)
    drift = float(np.max(np.abs(E - E0)))
    C7 = drift / (h * E0 + h ** (1 + field.eps))
    return MourreReport(h, float(np.max(radial)), float(E.min()), float(E.max()), drift, C7, E0)


# ------------------------------------------------------ transport residual

def transported_symbol(field, b, h, kappa, points, tol=1e-13, method=DEFAULT_METHOD):
    """b0(kappa) = b o Phi_h(kappa)^{-1} evaluated at an (n, 2(1+d)) array."""
    pre = technical_flow_batch(field, h, kappa, 0.0, points, tol, method)
    return b.evaluate_array(pre)


def transport_residual(field, b, h, kappa, point, step=1e-4, tol=1e-13, method=DEFAULT_METHOD):
    """|d_k b0 + d_xi l0 . d_x b0 - h^2 d_t l0 d_tau b0 - h d_x l0 . d_xi b0| at one point.

    The point is in scaled coordinates (t, x, h^2 tau, h xi); l0 derivatives are
    taken at xi = xi'/h.  b0 = b o Phi_h(kappa)^{-1} comes from backward
    integration, its derivatives from centered differences with ``step``.
    """
    p = point.as_array() if isinstance(point, ExtendedPhasePoint) else np.asarray(point, dtype=float)
    d = (p.size - 2) // 2
    if kappa - step < 0:
        raise ValueError("kappa must exceed the finite-difference step")
    # coordinate offsets for x (1..d), tau (d+1), xi (d+2..)
    offsets = []
    for j in range(1, p.size):
        e = np.zeros(p.size)
        e[j] = step
        offsets.append(e)
    stencil = np.array([p + e for e in offsets] + [p - e for e in offsets])
    vals = transported_symbol(field, b, h, kappa, stencil, tol, method)
    m = len(offsets)
    grad = (vals[:m] - vals[m:]) / (2 * step)
    dk = (transported_symbol(field, b, h, kappa + step, p[None], tol, method)[0]
          - transported_symbol(field, b, h, kappa - step, p[None], tol, method)[0]) / (2 * step)
    dx_b, dtau_b, dxi_b = grad[:d], grad[d], grad[d + 1:]
    lt, lx, lxi = l0_gradient(field, kappa, p[0], p[1:1 + d][None], (p[2 + d:] / h)[None])
    res = dk + lxi[0] @ dx_b - h ** 2 * lt[0] * dtau_b - h * lx[0] @ dxi_b
    return float(abs(res))


def flow_jacobian(field, h, kappa, point, step=1e-6, tol=1e-13, method=DEFAULT_METHOD):
    """Centered-difference Jacobian of Phi_h(kappa) at a point."""
    p = point.as_array() if isinstance(point, ExtendedPhasePoint) else np.asarray(point, dtype=float)
    n = p.size
    E = np.eye(n) * step
    imgs = technical_flow_batch(field, h, 0.0, kappa, np.vstack([p + E, p - E]), tol, method)
    return ((imgs[:n] - imgs[n:]) / (2 * step)).T
