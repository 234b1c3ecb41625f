"""File formats: binary SpacetimeField container, heat-map CSV, MANIFEST hashes.

Binary container layout (all little-endian):

    8 bytes   magic b"STWFLD01"
    4 bytes   uint32 header length H
    H bytes   UTF-8 JSON {"L", "N", "t0", "t1", "Nt", "provenance"}
    payload   complex64 slices in time order, Nt * N values
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .grids import SpacetimeField

MAGIC = b"STWFLD01"
MANIFEST = "MANIFEST"


class FormatError(ValueError):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_spacetime(path, u: SpacetimeField):
    header = {"L": float(u.L), "N": int(u.N), "t0": float(u.t0), "t1": float(u.t1), "Nt": int(u.Nt),
              "provenance": _jsonable(u.provenance)}
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    data = np.ascontiguousarray(u.materialize(), dtype="<c8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(data.tobytes())


def read_spacetime(path) -> SpacetimeField:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise FormatError(f"{path}: not a spacetime field container")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n).decode("utf-8"))
        payload = np.frombuffer(fh.read(), dtype="<c8")
    Nt, N = header["Nt"], header["N"]
    if payload.size != Nt * N:
        raise FormatError(f"{path}: payload holds {payload.size} values, header says {Nt} x {N}")
    data = payload.reshape(Nt, N).astype(complex)
    return SpacetimeField(header["L"], N, header["t0"], header["t1"], Nt, data=data,
                          provenance=header["provenance"])


def heatmap_csv(u: SpacetimeField, t_stride=1, x_stride=1, x_range=None):
    """|u|^2 samples as CSV rows t,x,density."""
    U = u.materialize()
    t, x = u.times, u.x
    cols = np.arange(0, u.N, x_stride)
    if x_range is not None:
        cols = cols[(x[cols] >= x_range[0]) & (x[cols] <= x_range[1])]
    lines = ["t,x,density"]
    for k in range(0, u.Nt, t_stride):
        dens = np.abs(U[k, cols]) ** 2
        lines.extend(f"{t[k]:.10g},{xv:.10g},{dv:.10g}" for xv, dv in zip(x[cols], dens))
    return "\n".join(lines) + "\n"


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(directory, exclude=(MANIFEST,)):
    """MANIFEST lines '<sha256>  <relative path>' for every file under directory, sorted."""
    directory = Path(directory)
    entries = []
    for root, _, files in os.walk(directory):
        for name in files:
            p = Path(root) / name
            rel = p.relative_to(directory).as_posix()
            if rel in exclude:
                continue
            entries.append((rel, sha256(p)))
    entries.sort()
    (directory / MANIFEST).write_text("".join(f"{digest}  {rel}\n" for rel, digest in entries))
    return dict(entries)


def read_manifest(directory):
    out = {}
    for line in (Path(directory) / MANIFEST).read_text().splitlines():
        if line.strip():
            digest, rel = line.split("  ", 1)
            out[rel] = digest
    return out


def check_manifest(directory, reference=None):
    """Mismatches between files on disk and a manifest (the directory's own by default).

    Returns a list of (path, problem) pairs; empty means everything matches.
    """
    directory = Path(directory)
    ref = read_manifest(directory) if reference is None else reference
    problems = []
    for rel, digest in sorted(ref.items()):
        p = directory / rel
        if not p.exists():
            problems.append((rel, "missing"))
        elif sha256(p) != digest:
            problems.append((rel, "hash mismatch"))
    return problems
