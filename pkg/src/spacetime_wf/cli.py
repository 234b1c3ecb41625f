"""Command-line front end.

    spacetime-wf flow | scatter | deform | partition-check | egorov-check | detect | verify | run

Every subcommand accepts --config (a TOML file; subcommand options live in a
table named after the subcommand, scenario subcommands read the whole
scenario), --json / --csv output selection, --jobs, --out (write outputs and
a MANIFEST there) and --check (recompute and compare against the MANIFEST in
--out).  Exit codes: 0 success, 1 check failure or FAIL verdict, 2 schema or
usage error, 3 numerical failure, 4 margin or resolution violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import io as sio
from .config import ConfigError, bundled, load, tomllib

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_MARGIN = 0, 1, 2, 3, 4


# ------------------------------------------------------------------ helpers

def _floats(text, n=None, what="point"):
    try:
        vals = [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError as e:
        raise ConfigError(f"cannot parse {what} {text!r}: {e}") from e
    if n is not None and len(vals) not in (n if isinstance(n, tuple) else (n,)):
        raise ConfigError(f"{what} needs {n} comma-separated numbers, got {len(vals)}")
    return vals


def _table(args, name):
    """Options from the subcommand's table in --config, overridden by explicit flags."""
    opts = {}
    if getattr(args, "config", None):
        try:
            data = tomllib.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}", args.config) from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"TOML syntax error: {e}", args.config) from e
        t = data.get(name, {})
        if not isinstance(t, dict):
            raise ConfigError(f"[{name}] must be a table", args.config)
        opts.update({k.replace("-", "_"): v for k, v in t.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "func", "command"):
            opts[k] = v
    return opts


def _need(opts, key):
    if opts.get(key) is None:
        raise ConfigError(f"missing option --{key.replace('_', '-')}")
    return opts[key]


def _jobs(opts):
    return int(opts.get("jobs") or os.environ.get("SPACETIME_WF_JOBS", 1))


def _emit(result, opts, out_files=None):
    """Print result (dict with 'text', 'json', optional 'rows') and write outputs when --out is set."""
    fmt = "json" if opts.get("json") else "csv" if opts.get("csv") else "text"
    if fmt == "json":
        body = json.dumps(sio._jsonable(result["json"]), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        head, rows = result["rows"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        w.writerows(rows)
        body = buf.getvalue()
    else:
        body = result["text"].rstrip("\n") + "\n"
    return body, fmt


def _write_dir(directory, files):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (d / name).write_text(content)
    return sio.write_manifest(d)


def _finish(opts, body, fmt, files, verdict_ok=True):
    """Print, then write/verify the output directory; returns the exit code."""
    sys.stdout.write(body)
    out = opts.get("out")
    files = dict(files or {})
    files.setdefault("result." + {"json": "json", "csv": "csv", "text": "txt"}[fmt], body)
    if opts.get("check"):
        if not out:
            raise ConfigError("--check needs --out pointing at a previous run")
        with tempfile.TemporaryDirectory() as tmp:
            fresh = _write_dir(tmp, files)
        problems = _verify(out, fresh)
        for rel, what in problems:
            sys.stderr.write(f"check: {rel}: {what}\n")
        if problems:
            return EXIT_FAIL
        sys.stderr.write(f"check: {len(fresh)} files match {Path(out) / sio.MANIFEST}\n")
    elif out:
        _write_dir(out, files)
    return EXIT_OK if verdict_ok else EXIT_FAIL


def _verify(out, fresh):
    """Files on disk against their MANIFEST, then the MANIFEST against a fresh recomputation."""
    if not (Path(out) / sio.MANIFEST).exists():
        raise ConfigError(f"no {sio.MANIFEST} in {out}; run once without --check first")
    return sio.check_manifest(out) + _compare(sio.read_manifest(out), fresh)


def _compare(reference, fresh):
    problems = []
    for rel in sorted(set(reference) | set(fresh)):
        if rel not in fresh:
            problems.append((rel, "not produced by this run"))
        elif rel not in reference:
            problems.append((rel, "not in the reference MANIFEST"))
        elif reference[rel] != fresh[rel]:
            problems.append((rel, "hash mismatch"))
    return problems


# -------------------------------------------------------------- subcommands

def cmd_flow(args):
    from .classical import hamilton_flow
    from .coefficients import build_field

    o = _table(args, "flow")
    field = build_field(o.get("field", "identity"))
    s, y, eta = _floats(_need(o, "point"), 3)
    tr = hamilton_flow(field, s, y, eta, float(_need(o, "t_end")), tol=float(o.get("tol", 1e-10)))
    head, rows = tr.rows()
    text = "\n".join(" ".join(f"{v:.10g}" for v in r) for r in rows)
    res = {"text": " ".join(head) + "\n" + text, "json": {"columns": head, "rows": rows}, "rows": (head, rows)}
    return _finish(o, *_emit(res, o), None)


def cmd_scatter(args):
    from .classical import scattering_data
    from .coefficients import build_field

    o = _table(args, "scatter")
    field = build_field(o.get("field", "identity"))
    s, y, eta = _floats(_need(o, "point"), 3)
    d = str(o.get("dir", "+"))
    sd = scattering_data(field, s, y, eta, +1 if d in ("+", "1", "+1", "forward") else -1, tol=float(o.get("tol", 1e-10)))
    sign = "+" if sd.direction > 0 else "-"
    x, xi = float(sd.x[0]), float(sd.xi[0])
    text = f"x{sign}={x:.12g} xi{sign}={xi:.12g} residual={sd.residual:.3g} verdict={sd.verdict}"
    res = {"text": text, "json": sd.to_dict(), "rows": (["direction", "x", "xi", "residual", "verdict"],
                                                         [[sign, x, xi, sd.residual, sd.verdict]])}
    return _finish(o, *_emit(res, o), None)


def cmd_deform(args):
    from .classical import ExtendedPhasePoint, highenergy_limit, technical_flow
    from .coefficients import build_field

    o = _table(args, "deform")
    field = build_field(o.get("field", "bump-metric(0.1)"))
    p = ExtendedPhasePoint.from_array(_floats(_need(o, "point"), 4))
    if o.get("limit"):
        rep = highenergy_limit(field, p)
        head = ["component", "extrapolated", "predicted", "discrepancy"]
        names = ["t", "x", "tau", "xi"]
        rows = [[n, e, q, d] for n, e, q, d in zip(names, rep.extrapolated, rep.predicted, rep.discrepancy)]
        text = "\n".join(f"{n:>4} extrap={e:.10g} predicted={q:.10g} |diff|={d:.3g}" for n, e, q, d in rows)
        res = {"text": text + f"\nmax discrepancy {rep.max_discrepancy:.3g}", "json": rep.to_dict(), "rows": (head, rows)}
        return _finish(o, *_emit(res, o), None)
    h, kappa = float(o.get("h", 0.1)), float(o.get("kappa", 1.0))
    img = technical_flow(field, h, kappa, p).as_array()
    head = ["t", "x", "tau", "xi"]
    res = {"text": f"Phi_h(kappa) with h={h:g}, kappa={kappa:g}: " + ", ".join(f"{v:.12g}" for v in img),
           "json": {"h": h, "kappa": kappa, "start": p.as_array().tolist(), "image": img.tolist()},
           "rows": (head, [img.tolist()])}
    return _finish(o, *_emit(res, o), None)


def cmd_partition_check(args):
    from .quantization.partition import build_partition, derivative_constants

    o = _table(args, "partition_check")
    eps = float(o.get("eps", 0.25))
    samples = int(o.get("samples", 10000))
    part = build_partition(eps)
    rng = np.random.default_rng(int(o.get("seed", 0)))
    mu = rng.uniform(-4, 4, samples)
    nu = np.exp(rng.uniform(np.log(2.0 ** -4), np.log(2.0 ** 8), samples))
    dev = float(np.max(np.abs(part.sum_at(mu, nu) - 1.0)))
    consts = derivative_constants(part, range(-3, 7))
    spread = {}
    for (n, k, l), c in consts.items():
        spread.setdefault((k, l), []).append(c)
    ratio = max(max(v) / min(v) for v in spread.values() if min(v) > 0)
    ok = dev <= 1e-12 and ratio <= 2.0
    text = (f"max |sum - 1| = {dev:.3e} over {samples} points (eps={eps:g})\n"
            f"derivative constants: max ratio across n in -3..6 = {ratio:.4f}\n{'PASS' if ok else 'FAIL'}")
    res = {"text": text, "json": {"eps": eps, "samples": samples, "max_deviation": dev, "constant_ratio": ratio,
                                  "pass": ok},
           "rows": (["eps", "samples", "max_deviation", "constant_ratio", "pass"], [[eps, samples, dev, ratio, ok]])}
    return _finish(o, *_emit(res, o), None, ok)


def cmd_egorov_check(args):
    from .quantization.egorov import egorov_check

    o = _table(args, "egorov_check")
    times = o.get("t") or [0.5, 1.0, 2.0]
    times = [float(t) for t in (times if isinstance(times, list) else [times])]
    rep = egorov_check(int(o.get("n", 1024)), times, int(o.get("states", 10)), seed=int(o.get("seed", 0)))
    ok = rep.passed(float(o.get("tol", 1e-8)))
    rows = [[t, float(rep.errors[i].max())] for i, t in enumerate(times)]
    text = "\n".join(f"t={t:g}: max relative error {e:.3e}" for t, e in rows)
    text += f"\nrelative error {rep.max_error:.3e} (N={rep.N})\n{'PASS' if ok else 'FAIL'}"
    res = {"text": text, "json": dict(rep.to_dict(), passed=ok), "rows": (["t", "max_relative_error"], rows)}
    return _finish(o, *_emit(res, o), None, ok)


def _scenario(args):
    if not args.config and not getattr(args, "scenario", None):
        raise ConfigError("give --config FILE or --scenario NAME")
    return load(args.config or bundled(args.scenario))


def cmd_detect(args):
    from .runner import build_phi, build_solution, detector_query
    from .coefficients import build_field
    from .wavefront import WFQuery, test_hwf, test_qhwf

    sc = _scenario(args)
    o = {k: v for k, v in vars(args).items() if v is not None}
    pt = _floats(_need(o, "point"), (2, 3, 4))
    q = detector_query(sc.data.get("detector", {}))
    field = build_field(sc.get("field", "spec"))
    phi = build_phi(sc)
    if len(pt) == 2:
        rep = test_hwf(phi, WFQuery(tuple(pt), q.radius, q.shape, q.h_values, q.threshold), jobs=_jobs(o))
    else:
        u = build_solution(sc, phi, field)
        point = (pt[0], pt[1], None, pt[2]) if len(pt) == 3 else tuple(pt)
        rep = test_qhwf(u, q.with_point(point), field=None if u.is_free else field,
                        mode=sc.get("detector", "mode", "full"), jobs=_jobs(o))
    text = "\n".join(f"h={h:.6g} norm={n:.6e}" for h, n in zip(rep.h_values, rep.norms))
    text += f"\nslope {rep.slope:.3f}{' (lower bound)' if rep.bound else ''} -> {rep.verdict}"
    res = {"text": text, "json": rep.to_dict(), "rows": (["h", "norm"], [[h, n] for h, n in zip(rep.h_values, rep.norms)])}
    return _finish(o, *_emit(res, o), {"decay.csv": rep.to_csv()})


def cmd_verify(args):
    from .runner import record_exit_code, verify_scenario

    sc = _scenario(args)
    o = {k: v for k, v in vars(args).items() if v is not None}
    report, _ = verify_scenario(sc, _jobs(o))
    head = ["s", "y", "eta", "predicted_singular", "measured_slope", "measured_singular", "agree", "error"]
    rows = [[*r.source, r.predicted_singular, None if r.measured is None else r.measured.slope, r.measured_singular,
             r.agree, r.error or ""] for r in report.records]
    res = {"text": report.table(), "json": report.to_dict(), "rows": (head, rows)}
    code = _finish(o, *_emit(res, o), {"decay.csv": report.decay_csv()})
    return code or record_exit_code(report)


def cmd_run(args):
    from .runner import record_exit_code, run_scenario, verify_scenario, write_outputs, output_dir

    sc = _scenario(args)
    o = {k: v for k, v in vars(args).items() if v is not None}
    if o.get("check"):
        out = output_dir(sc, o.get("out"))
        report, ctx = verify_scenario(sc, _jobs(o))
        with tempfile.TemporaryDirectory() as tmp:
            fresh = write_outputs(sc, report, ctx, tmp)
        problems = _verify(out, fresh)
        for rel, what in problems:
            sys.stderr.write(f"check: {rel}: {what}\n")
        sys.stdout.write(report.table() + "\n")
        return EXIT_FAIL if problems else record_exit_code(report)
    report, manifest, ctx = run_scenario(sc, o.get("out"), _jobs(o))
    body = report.to_json(indent=2) + "\n" if o.get("json") else (report.decay_csv() if o.get("csv") else report.table() + "\n")
    sys.stdout.write(body)
    sys.stderr.write(f"wrote {len(manifest)} files to {output_dir(sc, o.get('out'))} "
                     f"(timings: {', '.join(f'{k} {v:.1f}s' for k, v in ctx['timings'].items())})\n")
    return record_exit_code(report)


# ------------------------------------------------------------------ parser

def _common(p, scenario=False):
    p.add_argument("--config", help="TOML file" + (" (scenario)" if scenario else ""))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", default=None, help="JSON output")
    g.add_argument("--csv", action="store_true", default=None, help="CSV output")
    p.add_argument("--jobs", type=int, help="worker threads (env SPACETIME_WF_JOBS)")
    p.add_argument("--out", help="output directory (a MANIFEST is written there)")
    p.add_argument("--check", action="store_true", default=None,
                   help="recompute and verify against the MANIFEST in --out")
    if scenario:
        p.add_argument("--scenario", help="name of a bundled scenario")


def build_parser():
    ap = argparse.ArgumentParser(prog="spacetime-wf", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", help="classical Hamilton flow with frozen time")
    _common(p)
    p.add_argument("--field")
    p.add_argument("--point", help="s,y,eta")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("scatter", help="asymptotic scattering data (x_pm, xi_pm)")
    _common(p)
    p.add_argument("--field")
    p.add_argument("--point", help="s,y,eta")
    p.add_argument("--dir", help="+ or -")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("deform", help="technical flow Phi_h(kappa) or its high-energy limit")
    _common(p)
    p.add_argument("--field")
    p.add_argument("--point", help="t,x,tau,xi")
    p.add_argument("--h", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--limit", action="store_true", default=None, help="Richardson limit vs scattering prediction")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("partition-check", help="partition of unity invariants")
    _common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_partition_check)

    p = sub.add_parser("egorov-check", help="free conjugation identity, two routes")
    _common(p)
    p.add_argument("--t", type=float, action="append")
    p.add_argument("--n", type=int)
    p.add_argument("--states", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_egorov_check)

    p = sub.add_parser("detect", help="single HWF (y,eta) or quasi-homogeneous (s,y[,sigma],eta) test")
    _common(p, scenario=True)
    p.add_argument("--point")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("verify", help="singularity correspondence on the scenario's point cloud")
    _common(p, scenario=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="full scenario run with reports, plots and MANIFEST")
    _common(p, scenario=True)
    p.set_defaults(func=cmd_run)
    return ap


def exit_code_for(exc):
    from .classical import IntegrationError, ScatteringConvergenceError
    from .coefficients import FieldSpecError
    from .propagators import BandLimitError, LinearSolveError, SliceError
    from .quantization.decay import DegenerateDecayError
    from .quantization.weyl import MarginError
    from .runner import StageError
    from .wavefront import ResolutionError, SignConstraintError, TrappedPointError

    if isinstance(exc, StageError):
        inner = exc.original
        if isinstance(inner, (ConfigError, FieldSpecError)):
            return EXIT_SCHEMA
        if isinstance(inner, (MarginError, ResolutionError, BandLimitError)):
            return EXIT_MARGIN
        return EXIT_NUMERIC
    if isinstance(exc, (ConfigError, FieldSpecError, SignConstraintError)):
        return EXIT_SCHEMA
    if isinstance(exc, (MarginError, ResolutionError, BandLimitError)):
        return EXIT_MARGIN
    if isinstance(exc, (LinearSolveError, SliceError, IntegrationError, ScatteringConvergenceError,
                        DegenerateDecayError, TrappedPointError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, ValueError):
        return EXIT_SCHEMA
    return EXIT_NUMERIC


def _join_values(argv):
    """Glue '--point -1,2,1.5' into '--point=-1,2,1.5' so negative points are not read as flags."""
    out, it = [], iter(argv)
    for a in it:
        if a == "--point":
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(_join_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        return args.func(args)
    except Exception as e:  # mapped to the documented exit codes
        code = exit_code_for(e)
        kind = {EXIT_SCHEMA: "error", EXIT_NUMERIC: "numerical failure", EXIT_MARGIN: "margin/resolution violation"}
        sys.stderr.write(f"{kind[code]}: {e}\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
