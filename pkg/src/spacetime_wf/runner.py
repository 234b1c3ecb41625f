"""Scenario execution: build, assemble, verify, write artifacts and a MANIFEST."""
from __future__ import annotations

import json
import os
import time
from pathlib import Path

import numpy as np

from . import io as sio
from .coefficients import build_field
from .config import Scenario, cloud_points, h_values
from .initial_data import build_initial, superposition
from .propagators import assemble_spacetime, free_propagate_many
from .wavefront import HWFSet, WFQuery, dyadic, verify_correspondence

MARGIN_ERRORS = ("MarginError", "ResolutionError", "BandLimitError")


class StageError(RuntimeError):
    """A numerical failure with the stage that raised it."""

    def __init__(self, stage, exc):
        super().__init__(f"stage '{stage}' failed: {type(exc).__name__}: {exc}")
        self.stage, self.original = stage, exc


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        raise StageError(name, e) from e


def build_phi(sc: Scenario):
    L, N = float(sc.get("grid", "L")), int(sc.get("grid", "N"))
    spec = dict(sc.data["initial"])
    if spec["kind"] == "superposition":
        terms = [(complex(t.pop("coeff", 1.0)), build_initial(t, L, N)) for t in map(dict, spec["terms"])]
        return superposition(*terms)
    return build_initial(spec, L, N)


def build_solution(sc: Scenario, phi, field, kind=None):
    kind = kind or sc.get("solver", "kind")
    tw, Nt = sc.get("grid", "t_window"), int(sc.get("grid", "Nt"))
    if kind == "free":
        return assemble_spacetime("free", phi, tw, Nt)
    return assemble_spacetime("perturbed", phi, tw, Nt, field=field, dt=float(sc.get("solver", "dt")),
                              derivative=sc.get("solver", "derivative", "spectral"),
                              tol=float(sc.get("solver", "tol", 1e-14)), store_N=sc.get("solver", "store_N"))


def detector_query(table, default=None):
    base = default or WFQuery((0.0, 0.0, None, 1.0))
    return WFQuery((0.0, 0.0, None, 1.0), table.get("radius", base.radius), table.get("shape", base.shape),
                   h_values(table, base.h_values), float(table.get("threshold", base.threshold)),
                   int(table.get("theta", base.theta)))


def scenario_points(sc: Scenario):
    v = sc.data["verify"]
    if "points" in v:
        return [tuple(map(float, p)) for p in v["points"]]
    return cloud_points(v["cloud"], sc.seed)


def verify_scenario(sc: Scenario, jobs=1):
    """Build everything a scenario needs and run the correspondence check.

    Returns (report, context dict with field, phi, u, u_free, points, timings).
    """
    timings = {}
    tic = time.time()
    field = _stage("field", build_field, sc.get("field", "spec"))
    phi = _stage("initial", build_phi, sc)
    timings["setup"] = time.time() - tic
    tic = time.time()
    u = _stage("assemble", build_solution, sc, phi, field)
    u_free = None
    rel = sc.get("verify", "relation")
    if rel == "perturbed-free":
        u_free = _stage("assemble-free", build_solution, sc, phi, field, "free")
    timings["assemble"] = time.time() - tic
    q = detector_query(sc.data.get("detector", {}))
    pq = detector_query(sc.data.get("paired_detector", {}), q) if "paired_detector" in sc.data else None
    hs = sc.get("verify", "hwf_set")
    hwf_set = HWFSet(hs["kind"], float(hs.get("slope", 0.0))) if hs else None
    pts = scenario_points(sc)
    tic = time.time()
    report = verify_correspondence(phi, pts, rel, field=field, u=u, u_free=u_free, hwf_set=hwf_set, query=q,
                                   paired_query=pq, r=sc.get("verify", "r"), direction=sc.get("verify", "direction"),
                                   dt=sc.get("solver", "dt"), jobs=jobs)
    timings["verify"] = time.time() - tic
    return report, {"field": field, "phi": phi, "u": u, "u_free": u_free, "points": pts, "timings": timings}


def _heatmap_field(sc, ctx):
    """A coarse copy of u for the |u|^2 figure (free fields are synthesised only where plotted)."""
    u, phi = ctx["u"], ctx["phi"]
    pl = sc.data.get("plots", {})
    nt = int(pl.get("nt", 101))
    xr = pl.get("x_range", [-phi.L / 2, phi.L / 2])
    stride = int(pl.get("x_stride", max(1, u.N // 512)))
    cols = np.arange(0, u.N, stride)
    cols = cols[(u.x[cols] >= xr[0]) & (u.x[cols] <= xr[1])]
    times = np.linspace(u.t0, u.t1, nt)
    if u.is_free:
        data = free_propagate_many(phi, times, cols, check=False)
    else:
        k = np.round((times - u.t0) / u.dt).astype(int)
        data = u.materialize()[np.ix_(k, cols)]
        times = u.times[k]
    return times, u.x[cols], data


def write_outputs(sc: Scenario, report, ctx, out_dir):
    from . import plots

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ts = bool(sc.data.get("timestamp", False))
    doc = {"scenario": sc.name, "seed": sc.seed, "relation": report.relation, **report.to_dict()}
    (out / "report.json").write_text(json.dumps(sio._jsonable(doc), indent=2, sort_keys=True) + "\n")
    (out / "report.txt").write_text(report.table() + "\n")
    (out / "decay.csv").write_text(report.decay_csv())
    ok = [r for r in report.records if r.error is None]
    plots.decay_plot([r.measured for r in ok], [f"({r.source[0]:g},{r.source[1]:g},{r.source[2]:g})" for r in ok],
                     out / "decay.svg", f"{sc.name}: measured test norms", ts)
    pl = sc.data.get("plots", {})
    if pl.get("heatmap", True):
        t, x, data = _heatmap_field(sc, ctx)
        plots.heatmap_plot(_Plain(t, x, data), out / "heatmap.svg", timestamp=ts)
    if pl.get("orbits", True):
        plots.orbit_plot(*_orbits(sc, ctx, report), out / "orbits.svg", timestamp=ts)
    if sc.data.get("save_field", False):
        sio.write_spacetime(out / "field.stwf", ctx["u"])
    return sio.write_manifest(out)


class _Plain:
    """Minimal (times, x, values) stand-in accepted by heatmap_plot."""

    def __init__(self, t, x, data):
        self.times, self.x, self._d = np.asarray(t), np.asarray(x), data

    def materialize(self):
        return self._d


def _orbits(sc, ctx, report):
    from .classical import hamilton_flow

    field, u = ctx["field"], ctx["u"]
    trajs, marks = [], []
    for r in report.records:
        s, y, eta = r.source
        pieces = []
        for t_end in (u.t0, u.t1):
            if t_end == s:
                continue
            try:
                tr = hamilton_flow(field, s, y, eta, t_end)
                pieces.append((tr.t, tr.x[:, 0]))
            except Exception:
                pass
        trajs.extend(pieces)
        if r.error is None:
            marks.append((s, y, bool(r.predicted_singular)))
    return trajs, marks


def output_dir(sc: Scenario, override=None):
    if override:
        return Path(override)
    base = os.environ.get("SPACETIME_WF_OUTPUT")
    if sc.data.get("output") and not base:
        return Path(sc.data["output"])
    return Path(base or "out") / sc.name


def run_scenario(sc: Scenario, out_dir=None, jobs=1):
    """Full run; returns (report, manifest dict, context)."""
    report, ctx = verify_scenario(sc, jobs)
    manifest = write_outputs(sc, report, ctx, output_dir(sc, out_dir))
    return report, manifest, ctx


def record_exit_code(report):
    """0 if every point evaluated; 4 if any point hit a margin/resolution limit; 3 for other failures."""
    errs = [r.error for r in report.records if r.error is not None]
    if not errs:
        return 0
    if any(e.split(":", 1)[0] in MARGIN_ERRORS for e in errs):
        return 4
    return 3


__all__ = ["StageError", "verify_scenario", "run_scenario", "write_outputs", "record_exit_code", "output_dir",
           "build_phi", "build_solution", "detector_query", "scenario_points", "dyadic"]
