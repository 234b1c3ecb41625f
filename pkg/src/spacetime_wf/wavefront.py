"""Wave front set detectors and singularity-correspondence checks (d = 1).

A detector evaluates ||a^W u|| for a bump symbol a centred at the query point
over an h sequence and fits a decay order (``decay_report``).  The operator
is the discrete Weyl quantization on the field's own x grid; each evaluation
only touches the part of the grid the symbol can reach:

* the position factor f vanishes outside its support and the kernel of the
  dual factor g(h .) decays below ``KERNEL_TOL`` beyond a reach W, so only a
  window of half-width r + W around the query contributes (the whole periodic
  box when the window is wider);
* kernels are assembled sparsely, either along the band |d| <= W or along the
  midpoints inside supp f, whichever has fewer entries.

In time, sampled fields use their stored grid.  Free fields are synthesised
from the initial datum on a local time grid: only modes whose (tau, xi) lie
within the retained bands of the symbol can contribute (the band is the
dual support widened by the spectral reach of f), so after demodulation by
exp(-i tau0 t) the retained field is band-limited and a coarse grid samples
it exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .grids import GridField1D, SpacetimeField
from .quantization.decay import DEFAULT_THRESHOLD, decay_report
from .quantization.weyl import MarginError, dual_frequencies
from .smooth import bump1d

KERNEL_TOL = 1e-14
_T = math.sqrt(2 * math.log(1 / KERNEL_TOL))  # Gaussian std multiple at the tolerance
RELATIVE_FLOOR = 1e-12
SYNTH_BLOCK = 64


class ResolutionError(ValueError):
    """The grid cannot resolve the frequencies a query needs at some h."""

    def __init__(self, message, h=None):
        super().__init__(message)
        self.h = h


class TrappedPointError(ValueError):
    pass


class SignConstraintError(ValueError):
    pass


def dyadic(k0, k1):
    """h = 2^-k for k = k0..k1 (decreasing h)."""
    return tuple(2.0 ** (-k) for k in range(k0, k1 + 1))


# ------------------------------------------------------------------ queries

@dataclass
class WFQuery:
    """Detector query.

    point: (y, eta) for HWF queries, (s, y, sigma, eta) for quasi-homogeneous
    ones; sigma None means the characteristic value -1/2 a(s, y) eta^2.
    radius / shape: bump radius and Gaussian shape, scalar or per variable.
    """
    point: tuple
    radius: object = 0.5
    shape: object = 0.08
    h_values: tuple = dyadic(2, 7)
    threshold: float = DEFAULT_THRESHOLD
    theta: int = 2
    label: str = ""

    def __post_init__(self):
        self.point = tuple(None if v is None else float(v) for v in self.point)
        self.h_values = tuple(float(h) for h in self.h_values)
        if len(self.point) not in (2, 4):
            raise ValueError("point must be (y, eta) or (s, y, sigma, eta)")
        if self.kind == "hwf" and self.point[0] == 0 and self.point[1] == 0:
            raise ValueError("HWF queries need (y, eta) != 0")
        if self.kind == "qhwf" and self.point[3] == 0:
            raise ValueError("quasi-homogeneous queries need eta != 0")
        if self.theta not in (1, 2, 3):
            raise ValueError("theta must be 1, 2 or 3")
        if len(self.h_values) < 6 or np.any(np.diff(self.h_values) >= 0) or min(self.h_values) <= 0:
            raise ValueError("need at least 6 positive, strictly decreasing h values")

    @property
    def kind(self):
        return "hwf" if len(self.point) == 2 else "qhwf"

    def radii(self):
        return np.broadcast_to(np.asarray(self.radius, dtype=float), (len(self.point),)).copy()

    def shapes(self):
        return np.broadcast_to(np.asarray(self.shape, dtype=float), (len(self.point),)).copy()

    def resolved(self, field=None):
        """Copy with sigma filled in from the characteristic set of ``field`` (free if None)."""
        if self.kind == "hwf" or self.point[2] is not None:
            return self
        s, y, _, eta = self.point
        a = 1.0 if field is None else float(np.asarray(field.a(np.array([s]), np.array([y]))).ravel()[0])
        return self.with_point((s, y, -0.5 * a * eta * eta, eta))

    def with_point(self, point, label=None):
        return WFQuery(tuple(point), self.radius, self.shape, self.h_values, self.threshold, self.theta,
                       self.label if label is None else label)

    def to_dict(self):
        d = asdict(self)
        d["point"] = list(self.point)
        d["radius"] = np.asarray(self.radius).tolist()
        d["shape"] = np.asarray(self.shape).tolist()
        d["h_values"] = list(self.h_values)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["point"] = tuple(d["point"])
        d["h_values"] = tuple(d.get("h_values", dyadic(2, 7)))
        return cls(**d)


# ------------------------------------------------------------- axis plans

@dataclass
class _Axis:
    """One (position, dual) pair of the symbol, in grid units."""
    c: float       # centre of supp f
    r: float       # half-width of supp f
    reach: float   # kernel reach of g
    xi0: float     # centre of supp g
    band: float    # retained |xi - xi0|: supp g widened by half the spectral reach of f
    spec: float    # spectral reach of f
    f: object
    g: object

    @property
    def half(self):
        return self.r + self.reach


def _axis(pos_c, pos_r, pos_sf, dual_c, dual_r, dual_sf, pos_scale, dual_scale):
    """Plan for f(pos_scale z) g(dual_scale zeta) with bumps (centre, radius, shape) in symbol units.

    A bump of radius r and shape sf is Gaussian with std sf r down to ~1e-14,
    so f has spectral reach T / (sf r) and g's kernel has reach T / (sf r),
    both converted to grid units.
    """
    pc, pr, ps = pos_c / pos_scale, pos_r / pos_scale, pos_sf * pos_r / pos_scale
    dc, dr, ds = dual_c / dual_scale, dual_r / dual_scale, dual_sf * dual_r / dual_scale
    f = lambda z: bump1d(pos_scale * np.asarray(z), pos_c, pos_r, pos_sf)
    g = lambda w: bump1d(dual_scale * np.asarray(w), dual_c, dual_r, dual_sf)
    return _Axis(pc, pr, _T / ds, dc, dr + 0.5 * _T / ps, _T / ps, f, g)


def local_kernel(f, g, x0, dx, n, reach=None, dense_fraction=0.3):
    """Weyl kernel of f(x) g(zeta) on the periodic grid x0 + j dx (n points).

    Entries are f(x0 + q dx / 2) g_check(d) with d the wrapped offset and q
    the doubled midpoint index, as in ``product_kernel``; entries with
    |d| > reach (in grid units) are dropped.  Returns a CSR matrix unless
    more than ``dense_fraction`` of the entries survive.
    """
    gcheck = np.fft.ifft(g(dual_frequencies(n, dx)))
    D = n // 2 if reach is None else min(n // 2, int(math.ceil(reach / dx)) + 1)
    qs = np.arange(2 * n)
    fq = f(x0 + qs * dx / 2)
    Q = qs[fq != 0]
    rows_all = np.arange(n)
    if len(Q) < 2 * D + 1:
        j = np.repeat(rows_all, len(Q))
        q = np.tile(Q, n)
        d = (2 * j - q + n) % (2 * n) - n
        ok = (d >= -(n // 2)) & (d < n - n // 2) & (np.abs(d) <= D)
        j, q, d = j[ok], q[ok], d[ok]
    else:
        dd = np.arange(max(-D, -(n // 2)), min(D, n - n // 2 - 1) + 1)
        j = np.repeat(rows_all, len(dd))
        d = np.tile(dd, n)
        q = (2 * j - d) % (2 * n)
        ok = fq[q] != 0
        j, q, d = j[ok], q[ok], d[ok]
    k = (j - d) % n
    vals = fq[q] * gcheck[d % n]
    if len(vals) > dense_fraction * n * n:
        K = np.zeros((n, n), dtype=complex)
        K[j, k] = vals
        return K
    return sp.csr_matrix((vals, (j, k)), shape=(n, n))


def _right(U, K):
    """U @ K.T for dense or sparse K."""
    return np.asarray((K @ U.T).T) if sp.issparse(K) else U @ K.T


def _window(ax: _Axis, L, N, dx):
    """Native-grid indices of the window around supp f (the whole box if it does not fit)."""
    nw = int(math.ceil(2 * ax.half / dx)) + 2
    if nw >= N:
        return np.arange(N), -L, N
    i0 = int(math.floor((ax.c - ax.half + L) / dx))
    return (i0 + np.arange(nw)) % N, -L + i0 * dx, nw


def _spectrum(values):
    """Coefficients c with u(x_j) = sum_k c_k exp(i zeta_k (x_j + L))."""
    return np.fft.fft(values, axis=-1) / values.shape[-1]


def _floor(ref_norm):
    return RELATIVE_FLOOR * max(ref_norm, 1e-300)


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1 or len(items) == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _check_resolution(freq, step, h, what="frequency", fraction=0.8):
    if freq > fraction * math.pi / step:
        raise ResolutionError(f"{what} {freq:.4g} exceeds {fraction:.0%} of the grid Nyquist "
                              f"{math.pi / step:.4g} at h={h:g}", h)


# ----------------------------------------------------------------- spatial

def hwf_norm(phi: GridField1D, y, eta, h, radius=0.5, shape=0.08, check=True):
    """||a^W(h x, h p) phi|| for the bump a centred at (y, eta)."""
    r = np.broadcast_to(np.asarray(radius, dtype=float), (2,))
    sf = np.broadcast_to(np.asarray(shape, dtype=float), (2,))
    L = phi.L
    if check:
        lo, hi = (y - r[0]) / h, (y + r[0]) / h
        if lo < -L / 2 or hi > L / 2:
            raise MarginError(f"HWF x-support [{lo:.4g}, {hi:.4g}] leaves [{-L / 2:.4g}, {L / 2:.4g}] at h={h:g}", h)
        _check_resolution((abs(eta) + r[1]) / h, phi.dx, h)
    ax = _axis(y, r[0], sf[0], eta, r[1], sf[1], h, h)
    idx, x0, n = _window(ax, L, phi.N, phi.dx)
    K = local_kernel(ax.f, ax.g, x0, phi.dx, n, ax.reach)
    v = np.asarray(K @ phi.values[idx])
    return float(np.sqrt(np.sum(np.abs(v) ** 2) * phi.dx))


def test_hwf(phi: GridField1D, query: WFQuery, jobs=1, check=True):
    """Decay report for ||a^W(h x, h p) phi|| over the query's h sequence."""
    if query.kind != "hwf":
        raise ValueError("test_hwf needs a (y, eta) query")
    y, eta = query.point
    r, sf = query.radii(), query.shapes()
    hs = list(query.h_values)
    norms = _map(lambda h: hwf_norm(phi, y, eta, h, r, sf, check), hs, jobs)
    return decay_report(hs, norms, query.threshold, _floor(phi.norm()))


# ---------------------------------------------------------------- spacetime

def qhwf_norm(u: SpacetimeField, point, h, radius=0.5, shape=0.08, theta=2, mode="full", check=True):
    """||a^W(t, x, h^theta p_t, h p_x) u|| ("full") or ||a^W(t, x, h p_x) u|| ("reduced").

    ``point`` is (s, y, sigma, eta); the reduced mode ignores sigma.
    """
    if mode not in ("full", "reduced"):
        raise ValueError("mode must be 'full' or 'reduced'")
    s, y, sigma, eta = point
    r = np.broadcast_to(np.asarray(radius, dtype=float), (4,))
    sf = np.broadcast_to(np.asarray(shape, dtype=float), (4,))
    L, dx = u.L, u.dx
    if check:
        if y - r[1] < -L / 2 or y + r[1] > L / 2:
            raise MarginError(f"x-support [{y - r[1]:.4g}, {y + r[1]:.4g}] leaves [{-L / 2:.4g}, {L / 2:.4g}]", h)
        _check_resolution((abs(eta) + r[3]) / h, dx, h)
        if not (u.t0 <= s - r[0] and s + r[0] <= u.t1):
            raise MarginError(f"t-support [{s - r[0]:.4g}, {s + r[0]:.4g}] leaves the time window "
                              f"[{u.t0:.4g}, {u.t1:.4g}]", h)
    ax = _axis(y, r[1], sf[1], eta, r[3], sf[3], 1.0, h)
    idx, x0, nx = _window(ax, L, u.N, dx)
    Kx = local_kernel(ax.f, ax.g, x0, dx, nx, ax.reach)
    at = _axis(s, r[0], sf[0], 0.0 if mode == "reduced" else sigma, r[2], sf[2], 1.0, h ** theta)
    if u.is_free:
        return _free_norm(u, ax, at, idx, Kx, mode)
    if check and mode == "full":
        _check_resolution((abs(sigma) + r[2]) / h ** theta, u.dt, h, "time frequency", 1.0)
    return _sampled_norm(u, at, idx, Kx, mode)


def _free_norm(u, ax, at, idx, Kx, mode):
    phi = u.source
    c = _spectrum(phi.values)
    zeta = phi.xi
    tau = -0.5 * zeta ** 2
    keep = (np.abs(zeta - ax.xi0) <= ax.band) & (c != 0)
    if mode == "full":
        keep &= np.abs(tau - at.xi0) <= at.band
    if not keep.any():
        return 0.0
    if mode == "reduced":
        # |a^W u(t)|^2 f(t)^2 oscillates at differences of retained tau plus the reach of f^2
        tk = tau[keep]
        tau0 = 0.5 * (tk.max() + tk.min())
        dt = math.pi / (1.2 * (tk.max() - tk.min()) + 2 * at.spec + 1.0)
        t0, nt = at.c - at.r, int(math.ceil(2 * at.r / dt)) + 1
    else:
        tau0 = at.xi0
        dt = math.pi / (1.2 * at.band)
        t0, nt = at.c - at.half, int(math.ceil(2 * at.half / dt)) + 1
    t = t0 + dt * np.arange(nt)
    W = _synth_apply(phi, c, zeta, tau, keep, tau0, t, idx, Kx)
    if mode == "reduced":
        V = at.f(t)[:, None] * W
    else:
        Kt = local_kernel(at.f, lambda w: at.g(np.asarray(w) + tau0), t0, dt, nt, at.reach)
        V = np.asarray(Kt @ W)
    return float(np.sqrt(np.sum(np.abs(V) ** 2) * u.dx * dt))


def _synth_apply(phi, c, zeta, tau, keep, tau0, t, idx, Kx):
    """(u(t_i, x_idx) exp(-i tau0 t_i)) @ Kx.T for the retained modes, block by block in t."""
    N = phi.N
    m = int(keep.sum())
    ck = c[keep]
    dtau = tau[keep] - tau0
    direct = m * len(idx) < 3 * N * math.log2(N)
    if direct:
        E = np.exp(1j * np.outer(zeta[keep], phi.x[idx] + phi.L))
    out = np.empty((len(t), Kx.shape[0]), dtype=complex)
    for i in range(0, len(t), SYNTH_BLOCK):
        tb = t[i:i + SYNTH_BLOCK]
        coef = ck[None, :] * np.exp(1j * np.outer(tb, dtau))
        if direct:
            U = coef @ E
        else:
            full = np.zeros((len(tb), N), dtype=complex)
            full[:, keep] = coef
            U = np.fft.ifft(full, axis=1)[:, idx] * N
        out[i:i + SYNTH_BLOCK] = _right(U, Kx)
    return out


def _sampled_norm(u, at, idx, Kx, mode):
    data = u.materialize()
    times = u.times
    if mode == "reduced":
        sel = np.nonzero(np.abs(times - at.c) <= at.r)[0]
        V = at.f(times[sel])[:, None] * _right(data[np.ix_(sel, idx)], Kx)
        return float(np.sqrt(np.sum(np.abs(V) ** 2) * u.dx * u.dt))
    lo, hi = at.c - at.half, at.c + at.half
    sel = np.nonzero((times >= lo - 1e-12) & (times <= hi + 1e-12))[0]
    if len(sel) == 0 or times[sel[0]] > lo + u.dt or times[sel[-1]] < hi - u.dt:
        sel = np.arange(u.Nt)  # window exceeds the stored interval: periodic operator on all of it
    t = times[sel]
    W = _right(data[np.ix_(sel, idx)], Kx)
    Kt = local_kernel(at.f, at.g, t[0], u.dt, len(t), at.reach)
    V = np.asarray(Kt @ W)
    return float(np.sqrt(np.sum(np.abs(V) ** 2) * u.dx * u.dt))


def _st_reference(u: SpacetimeField, rt):
    """||u|| over a time interval of length 2 rt, the scale of the roundoff floor."""
    if u.is_free:
        return u.source.norm() * math.sqrt(2 * rt)
    return float(np.sqrt(np.mean(np.sum(np.abs(u.materialize()) ** 2, axis=1) * u.dx) * 2 * rt))


def test_qhwf(u: SpacetimeField, query: WFQuery, field=None, mode="full", jobs=1, check=True):
    """Decay report for the quasi-homogeneous test at the query point."""
    if query.kind != "qhwf":
        raise ValueError("test_qhwf needs an (s, y, sigma, eta) query")
    q = query.resolved(field)
    r, sf = q.radii(), q.shapes()
    hs = list(q.h_values)
    norms = _map(lambda h: qhwf_norm(u, q.point, h, r, sf, q.theta, mode, check), hs, jobs)
    return decay_report(hs, norms, q.threshold, _floor(_st_reference(u, r[0])))


# ------------------------------------------------------------ predictions

MODES = {"perturbed->free": "perturbed->free", "perturbed-free": "perturbed->free",
         "free->initial": "free->initial", "free-initial": "free->initial", "corollary": "corollary"}


@dataclass
class HWFSet:
    """Known HWF set of an initial datum: empty, or the line {(c eta, eta): eta != 0}.

    delta at x0 is the line c = 0 (any x0, since HWF forgets bounded shifts),
    exp(i t_f K) delta is c = -t_f, the chirp exp(i beta x^2 / 2) is c = 1 / beta.
    """
    kind: str = "empty"
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in ("empty", "line"):
            raise ValueError("HWF set kind must be 'empty' or 'line'")

    def contains(self, y, eta, tol=1e-9):
        if self.kind == "empty" or eta == 0:
            return False
        return abs(y - self.slope * eta) <= tol * max(1.0, abs(eta))

    def to_dict(self):
        return {"kind": self.kind, "slope": float(self.slope)}


@dataclass
class Prediction:
    """Image of a source point (s, y, eta) under one of the correspondences."""
    source: tuple
    mode: str
    point: tuple           # (s, x, sigma, xi) for perturbed->free, (y', eta') otherwise
    provenance: dict

    @property
    def kind(self):
        return "qhwf" if len(self.point) == 4 else "hwf"

    def to_dict(self):
        return {"source": list(self.source), "mode": self.mode, "point": list(self.point),
                "provenance": self.provenance}


def _direction(s, direction):
    if direction is None:
        if s == 0:
            raise SignConstraintError("s = 0 admits neither direction (need +s < 0 or -s < 0)")
        return 1 if s < 0 else -1
    direction = 1 if direction in (1, "+", "forward") else -1
    if not direction * s < 0:
        raise SignConstraintError(f"direction {'+' if direction > 0 else '-'} needs {'+' if direction > 0 else '-'}s < 0, "
                                  f"got s={s:g}")
    return direction


def _scatter(field, s, y, eta, direction, tol):
    from .classical import ScatteringConvergenceError, scattering_data
    try:
        sd = scattering_data(field, s, y, eta, direction, tol=tol)
    except ScatteringConvergenceError as e:
        raise TrappedPointError(f"({s:g}, {y:g}, {eta:g}): {e}") from e
    if sd.verdict != "non-trapped":
        raise TrappedPointError(f"({s:g}, {y:g}, {eta:g}) is not non-trapping in direction {direction:+d}")
    return sd


def predict_points(field, points, mode, r=None, direction=None, tol=1e-10):
    """Map source points (s, y, eta) to the queries the correspondence pairs them with.

    perturbed->free: (s, x_pm, -xi_pm^2 / 2, xi_pm) on the free solution;
    free->initial:   (-s eta, eta) on the initial datum (field ignored);
    corollary:       ((r - s) xi_pm, xi_pm) on U(r) phi.
    The sign is fixed by pm s < 0 unless ``direction`` is given; the
    corollary also needs pm r > pm s.  ``r`` may be a scalar or one per point.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; known: {sorted(set(MODES.values()))}")
    mode = MODES[mode]
    pts = [tuple(float(v) for v in p) for p in points]
    rs = [None] * len(pts) if r is None else [float(v) for v in np.broadcast_to(np.asarray(r, dtype=float), (len(pts),))]
    out = []
    for (s, y, eta), rr in zip(pts, rs):
        if mode == "free->initial":
            out.append(Prediction((s, y, eta), mode, (-s * eta, eta), {"relation": "free solution vs initial datum"}))
            continue
        if field is None:
            raise ValueError(f"mode {mode} needs a field")
        sign = _direction(s, direction)
        if mode == "corollary":
            if rr is None:
                raise ValueError("the corollary mode needs r")
            if not sign * rr > sign * s:
                raise SignConstraintError(f"direction {sign:+d} needs {'r > s' if sign > 0 else 'r < s'}, "
                                          f"got r={rr:g}, s={s:g}")
        sd = _scatter(field, s, y, eta, sign, tol)
        xp, kp = float(sd.x[0]), float(sd.xi[0])
        prov = {"scattering": sd.to_dict(), "field": field.describe() if hasattr(field, "describe") else str(field)}
        if mode == "perturbed->free":
            prov["relation"] = "perturbed solution vs free solution"
            out.append(Prediction((s, y, eta), mode, (s, xp, -0.5 * kp * kp, kp), prov))
        else:
            prov.update(relation="perturbed solution vs HWF of U(r) phi", r=float(rr))
            out.append(Prediction((s, y, eta), mode, ((rr - s) * kp, kp), prov))
    return out


# ------------------------------------------------------------ verification

@dataclass
class PointRecord:
    source: tuple
    measured_query: dict = None
    measured: object = None       # DecayReport on the solution
    prediction: dict = None
    predicted_report: object = None  # DecayReport on the paired side (None for set descriptions)
    predicted_singular: bool = None
    measured_singular: bool = None
    agree: bool = None
    error: str = None

    def to_dict(self):
        return {"source": list(self.source), "measured_query": self.measured_query,
                "measured": None if self.measured is None else self.measured.to_dict(),
                "prediction": self.prediction,
                "predicted_report": None if self.predicted_report is None else self.predicted_report.to_dict(),
                "predicted_singular": self.predicted_singular, "measured_singular": self.measured_singular,
                "agree": self.agree, "error": self.error}


@dataclass
class CorrespondenceReport:
    relation: str
    records: list

    def summary(self):
        ok = [r for r in self.records if r.error is None]
        agree = sum(r.agree for r in ok)
        return {"relation": self.relation, "points": len(self.records), "evaluated": len(ok),
                "errors": len(self.records) - len(ok), "agree": int(agree),
                "agreement": agree / len(ok) if ok else float("nan"),
                "both_singular": sum(r.predicted_singular and r.measured_singular for r in ok),
                "both_regular": sum(not r.predicted_singular and not r.measured_singular for r in ok),
                "measured_only": sum(r.measured_singular and not r.predicted_singular for r in ok),
                "predicted_only": sum(r.predicted_singular and not r.measured_singular for r in ok)}

    @property
    def agreement(self):
        return self.summary()["agreement"]

    def slopes(self, singular=True):
        """Measured slopes of the evaluated points predicted singular (or regular)."""
        return [r.measured.slope for r in self.records if r.error is None and r.predicted_singular == singular]

    def to_dict(self):
        return {"summary": self.summary(), "records": [r.to_dict() for r in self.records]}

    def to_json(self, **kw):
        import json
        return json.dumps(self.to_dict(), **kw)

    def table(self):
        head = f"{'s':>7} {'y':>7} {'eta':>7}  {'predicted':>9} {'slope':>8} {'measured':>9} agree"
        lines = [head, "-" * len(head)]
        for r in self.records:
            s, y, eta = r.source
            if r.error is not None:
                lines.append(f"{s:7.3f} {y:7.3f} {eta:7.3f}  error: {r.error}")
                continue
            lines.append(f"{s:7.3f} {y:7.3f} {eta:7.3f}  {'singular' if r.predicted_singular else 'regular':>9} "
                         f"{r.measured.slope:8.2f} {'singular' if r.measured_singular else 'regular':>9} "
                         f"{'yes' if r.agree else 'NO'}")
        sm = self.summary()
        lines.append(f"agreement {sm['agree']}/{sm['evaluated']} ({sm['errors']} errors)")
        return "\n".join(lines)

    def decay_csv(self):
        """Long-format CSV: point index, side, h, norm, slope, verdict."""
        rows = ["index,side,h,norm,slope,verdict"]
        for i, r in enumerate(self.records):
            for side, rep in (("measured", r.measured), ("predicted", r.predicted_report)):
                if rep is None:
                    continue
                for h, n in zip(rep.h_values, rep.norms):
                    rows.append(f"{i},{side},{h:.17g},{n:.17g},{rep.slope:.17g},{rep.verdict}")
        return "\n".join(rows) + "\n"


RELATIONS = {"free-initial": "free->initial", "free->initial": "free->initial",
             "perturbed-free": "perturbed->free", "perturbed->free": "perturbed->free",
             "corollary": "corollary"}


def _slice_at(u: SpacetimeField, r, field, phi, dt):
    k = (r - u.t0) / u.dt
    if abs(k - round(k)) < 1e-9 and 0 <= round(k) < u.Nt:
        return u.slice(int(round(k)))
    from .propagators import perturbed_propagate
    return perturbed_propagate(field, phi, r, dt)


def verify_correspondence(phi: GridField1D, points, relation, field=None, u=None, u_free=None, hwf_set=None,
                          query: WFQuery = None, paired_query: WFQuery = None, r=None, direction=None,
                          dt=None, jobs=1, check=True):
    """Measure both sides of a singularity correspondence on a cloud of (s, y, eta).

    The measured side is always the quasi-homogeneous test of u (the free
    solution for free-initial) at (s, y, sigma_char, eta).  The predicted side
    is the paired query: the free solution ``u_free`` (perturbed-free), the
    datum phi or the known set ``hwf_set`` (free-initial), or U(r) phi
    (corollary; read from u when r is a stored time).  ``query`` and
    ``paired_query`` carry symbol radius, shape, h sequence and threshold for
    the two sides.  Errors are recorded per point.
    """
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}; known: {sorted(set(RELATIONS.values()))}")
    rel = RELATIONS[relation]
    query = WFQuery((0.0, 0.0, None, 1.0)) if query is None else query
    paired_query = query if paired_query is None else paired_query
    if rel == "free->initial" and u is None:
        u = u_free
    if u is None:
        raise ValueError("verify_correspondence needs the solution u")
    if rel == "perturbed->free" and u_free is None:
        raise ValueError("the perturbed-free relation needs u_free")
    pts = [tuple(float(v) for v in p) for p in points]
    rs = [None] * len(pts) if r is None else [float(v) for v in np.broadcast_to(np.asarray(r, dtype=float), (len(pts),))]
    measured_field = None if rel == "free->initial" else field

    def one(i):
        rec = PointRecord(pts[i])
        s, y, eta = pts[i]
        try:
            pred = predict_points(field, [pts[i]], rel, None if rs[i] is None else rs[i], direction)[0]
            rec.prediction = pred.to_dict()
            mq = query.with_point((s, y, None, eta)).resolved(measured_field)
            rec.measured_query = mq.to_dict()
            rec.measured = test_qhwf(u, mq, check=check)
            if rel == "free->initial" and hwf_set is not None:
                rec.predicted_singular = bool(hwf_set.contains(*pred.point))
                rec.prediction["hwf_set"] = hwf_set.to_dict()
            else:
                if rel == "perturbed->free":
                    pq = paired_query.with_point(pred.point)
                    rec.predicted_report = test_qhwf(u_free, pq, check=check)
                else:
                    target = phi if rel == "free->initial" else _slice_at(u, rs[i], field, phi, dt)
                    pq = WFQuery(pred.point, paired_query.radius, paired_query.shape, paired_query.h_values,
                                 paired_query.threshold, label=paired_query.label)
                    rec.predicted_report = test_hwf(target, pq, check=check)
                rec.prediction["query"] = pq.to_dict()
                rec.predicted_singular = not rec.predicted_report.rapid
            rec.measured_singular = not rec.measured.rapid
            rec.agree = rec.predicted_singular == rec.measured_singular
        except Exception as e:  # recorded per point, the cloud goes on
            rec.error = f"{type(e).__name__}: {e}"
        return rec

    return CorrespondenceReport(rel, _map(one, list(range(len(pts))), jobs))


def characteristic_scan(u: SpacetimeField, field, point, offsets, thetas=(2,), query: WFQuery = None, jobs=1,
                        check=True):
    """Decay reports at sigma = -1/2 a(s, y) eta^2 + offset for each offset and theta.

    Returns rows (theta, offset, DecayReport or error string).
    """
    s, y, eta = map(float, point)
    base = (WFQuery((s, y, None, eta)) if query is None else query.with_point((s, y, None, eta))).resolved(field)
    sigma0 = base.point[2]
    jobs_list = [(th, float(o)) for th in thetas for o in offsets]

    def one(item):
        th, o = item
        q = WFQuery((s, y, sigma0 + o, eta), base.radius, base.shape, base.h_values, base.threshold, th)
        try:
            return th, o, test_qhwf(u, q, check=check)
        except Exception as e:
            return th, o, f"{type(e).__name__}: {e}"

    return _map(one, jobs_list, jobs)
