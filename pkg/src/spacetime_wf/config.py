"""Scenario files: TOML schema, validation with line-anchored diagnostics.

A scenario has top-level keys ``name``, ``seed``, ``output``, ``save_field``,
``timestamp`` and the tables below (keys in brackets are optional):

    [field]           spec = tag string ("identity", "bump-metric(0.1)", ...)
    [initial]         kind = gaussian | delta-surrogate | windowed-chirp | superposition,
                      parameters of that constructor; superposition takes
                      terms = [{coeff = .., kind = .., ...}, ...]
    [grid]            L, N, t_window = [t0, t1], Nt
    [solver]          kind = free | perturbed, [dt], [store_N], [derivative]
    [detector]        h_values | h_exponents, [threshold], [radius], [shape], [theta], [mode]
    [paired_detector] same keys; settings for the paired side of a correspondence
    [verify]          relation, points = [[s, y, eta], ...] | cloud = {n, s, y, eta},
                      [r], [direction], [hwf_set = {kind, slope}]
    [plots]           [heatmap], [x_range], [nt], [x_stride], [orbits]
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .initial_data import REGISTRY


class ConfigError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path, self.line = path, line


NUM = (int, float)
SCHEMA = {
    None: {"name": str, "seed": int, "output": str, "save_field": bool, "timestamp": bool, "description": str},
    "field": {"spec": (str, dict)},
    "initial": {"kind": str, "*": object},
    "grid": {"L": NUM, "N": int, "t_window": list, "Nt": int},
    "solver": {"kind": str, "dt": NUM, "store_N": int, "derivative": str, "tol": NUM},
    "detector": {"h_values": list, "h_exponents": list, "threshold": NUM, "radius": (NUM, list), "shape": (NUM, list),
                 "theta": int, "mode": str},
    "paired_detector": {"h_values": list, "h_exponents": list, "threshold": NUM, "radius": (NUM, list),
                        "shape": (NUM, list)},
    "verify": {"relation": str, "points": list, "cloud": dict, "r": (NUM, list), "direction": str, "hwf_set": dict},
    "plots": {"heatmap": bool, "x_range": list, "nt": int, "x_stride": int, "orbits": bool},
}
REQUIRED = {None: ["name"], "field": ["spec"], "initial": ["kind"], "grid": ["L", "N", "t_window", "Nt"],
            "solver": ["kind"], "verify": ["relation"]}
RELATIONS = ("free-initial", "perturbed-free", "corollary")


def locate(text, section, key=None):
    """1-based line of ``[section]`` (or of ``key =`` inside it); None if absent."""
    lines = text.splitlines()
    start = 0
    if section is not None:
        pat = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]")
        hits = [i for i, ln in enumerate(lines) if pat.match(ln)]
        if not hits:
            return None
        start = hits[0]
        if key is None:
            return start + 1
    kpat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start + (1 if section is not None else 0), len(lines)):
        if section is None and lines[i].lstrip().startswith("["):
            break
        if section is not None and i > start and re.match(r"^\s*\[", lines[i]):
            break
        if kpat.match(lines[i]):
            return i + 1
    return start + 1 if section is not None else None


@dataclass
class Scenario:
    data: dict
    path: str = None
    text: str = ""
    extras: dict = field(default_factory=dict)

    def get(self, section, key, default=None):
        return self.data.get(section, {}).get(key, default)

    @property
    def name(self):
        return self.data["name"]

    @property
    def seed(self):
        return int(self.data.get("seed", 0))

    def error(self, message, section=None, key=None):
        return ConfigError(message, self.path, locate(self.text, section, key) if self.text else None)


def _type_ok(v, t):
    if t is object:
        return True
    ts = t if isinstance(t, tuple) else (t,)
    flat = []
    for x in ts:
        flat.extend(x if isinstance(x, tuple) else (x,))
    if isinstance(v, bool) and bool not in flat:
        return False
    return isinstance(v, tuple(flat))


def validate(sc: Scenario):
    d = sc.data
    for section, keys in SCHEMA.items():
        table = d if section is None else d.get(section)
        if table is None:
            if section in REQUIRED:
                raise sc.error(f"missing table [{section}]")
            continue
        if not isinstance(table, dict):
            raise sc.error(f"[{section}] must be a table", None, section)
        for k, v in table.items():
            if section is None and isinstance(v, dict):
                if k not in SCHEMA:
                    raise sc.error(f"unknown table [{k}]", k)
                continue
            if k not in keys and "*" not in keys:
                raise sc.error(f"unknown key {k!r}" + (f" in [{section}]" if section else ""), section, k)
            if k in keys and not _type_ok(v, keys[k]):
                raise sc.error(f"key {k!r} has the wrong type ({type(v).__name__})", section, k)
        for k in REQUIRED.get(section, []):
            if k not in table:
                raise sc.error(f"missing key {k!r}" + (f" in [{section}]" if section else ""), section)
    if d["initial"]["kind"] not in REGISTRY and d["initial"]["kind"] != "superposition":
        raise sc.error(f"unknown initial datum {d['initial']['kind']!r}; known: "
                       f"{sorted(REGISTRY) + ['superposition']}", "initial", "kind")
    if d["solver"]["kind"] not in ("free", "perturbed"):
        raise sc.error("solver kind must be 'free' or 'perturbed'", "solver", "kind")
    if d["solver"]["kind"] == "perturbed" and "dt" not in d["solver"]:
        raise sc.error("a perturbed solver needs dt", "solver")
    tw = d["grid"]["t_window"]
    if len(tw) != 2 or not all(isinstance(v, NUM) for v in tw) or not tw[0] < tw[1]:
        raise sc.error("t_window must be [t0, t1] with t0 < t1", "grid", "t_window")
    n = d["grid"]["N"]
    if n < 8 or n & (n - 1):
        raise sc.error("N must be a power of two >= 8", "grid", "N")
    if d["grid"]["Nt"] < 2:
        raise sc.error("Nt must be at least 2", "grid", "Nt")
    v = d["verify"]
    if v["relation"] not in RELATIONS:
        raise sc.error(f"relation must be one of {list(RELATIONS)}", "verify", "relation")
    if ("points" in v) == ("cloud" in v):
        raise sc.error("give exactly one of points or cloud", "verify")
    if "points" in v:
        for p in v["points"]:
            if not (isinstance(p, list) and len(p) == 3 and all(isinstance(x, NUM) for x in p)):
                raise sc.error("points must be [s, y, eta] triples", "verify", "points")
    else:
        c = v["cloud"]
        for k in ("n", "s", "y", "eta"):
            if k not in c:
                raise sc.error(f"cloud needs key {k!r}", "verify", "cloud")
    if v["relation"] == "corollary" and "r" not in v:
        raise sc.error("the corollary relation needs r", "verify")
    if v["relation"] != "free-initial" and d["solver"]["kind"] != "perturbed":
        raise sc.error(f"relation {v['relation']} compares against a perturbed solution; set solver kind "
                       f"= 'perturbed'", "solver", "kind")
    for sec in ("detector", "paired_detector"):
        t = d.get(sec, {})
        if "h_values" in t and "h_exponents" in t:
            raise sc.error("give h_values or h_exponents, not both", sec)
    if "hwf_set" in v and v["hwf_set"].get("kind") not in ("empty", "line"):
        raise sc.error("hwf_set kind must be 'empty' or 'line'", "verify", "hwf_set")
    return sc


def loads(text, path=None) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"TOML syntax error: {e}", path, int(m.group(1)) if m else None) from e
    return validate(Scenario(data, str(path) if path else None, text))


def load(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read scenario: {e}", str(p)) from e
    return loads(text, p)


def h_values(table, default=None):
    if "h_values" in table:
        return tuple(float(h) for h in table["h_values"])
    if "h_exponents" in table:
        return tuple(2.0 ** (-float(k)) for k in table["h_exponents"])
    return default


def cloud_points(cloud, seed):
    """Uniform random (s, y, eta) triples; eta is redrawn away from 0 by its own range."""
    rng = np.random.default_rng(seed)
    n = int(cloud["n"])
    s = rng.uniform(*cloud["s"], n)
    y = rng.uniform(*cloud["y"], n)
    eta = rng.uniform(*cloud["eta"], n)
    if "eta_sign" in cloud:
        eta = np.abs(eta) * np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    return [tuple(map(float, p)) for p in zip(s, y, eta)]


def scenario_dir():
    return Path(__file__).parent / "scenarios"


def bundled(name):
    p = scenario_dir() / f"{name}.toml"
    if not p.exists():
        raise ConfigError(f"no bundled scenario {name!r}; known: "
                          f"{sorted(q.stem for q in scenario_dir().glob('*.toml'))}")
    return p
