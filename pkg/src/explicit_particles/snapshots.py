"""Particle snapshot files: CSV and legacy-ASCII VTK point clouds.

Floats are written with 17 significant digits so that reading a file back
reproduces the arrays bit for bit.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import ParticleSystem

_AX = "xyz"
_VEL = "uvw"


def _header(d):
    return ["id", "kind", *_AX[:d], *_VEL[:d], "p", "V"]


def write_snapshot_csv(path, system: ParticleSystem, t=None, k=None):
    path = Path(path)
    d = system.dim
    cols = _header(d)
    meta = []
    if k is not None:
        meta.append(f"k={int(k)}")
    if t is not None:
        meta.append(f"t={float(t):.17g}")
    with path.open("w") as f:
        f.write("# particle snapshot" + (": " + " ".join(meta) if meta else "") + "\n")
        f.write(",".join(cols) + "\n")
        for i in range(system.n):
            vals = [*system.positions[i], *system.velocities[i], system.pressures[i], system.volumes[i]]
            f.write(f"{i},{int(system.kinds[i])}," + ",".join(f"{v:.17g}" for v in vals) + "\n")
    return path


def read_snapshot_csv(path):
    """Returns (ParticleSystem, info) with info holding 'k' and 't' when present."""
    path = Path(path)
    info = {}
    with path.open() as f:
        first = f.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}:1: missing snapshot comment line")
        for tok in first.split(":", 1)[-1].split():
            if "=" in tok:
                key, val = tok.split("=", 1)
                info[key] = int(val) if key == "k" else float(val)
        cols = f.readline().strip().split(",")
    d = sum(c in _AX for c in cols)
    if cols != _header(d):
        raise ValueError(f"{path}:2: unexpected columns {cols}")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    sys_ = ParticleSystem(data[:, 2:2 + d], data[:, 2 + d:2 + 2 * d], data[:, 2 + 2 * d],
                          data[:, 3 + 2 * d], data[:, 1].astype(np.int8))
    return sys_, info


def write_snapshot_vtk(path, system: ParticleSystem, t=None):
    """Legacy VTK POLYDATA with point data kind, velocity, pressure, volume."""
    path = Path(path)
    n, d = system.n, system.dim
    pts = np.zeros((n, 3))
    pts[:, :d] = system.positions
    vel = np.zeros((n, 3))
    vel[:, :d] = system.velocities
    fmt = lambda a: "\n".join(" ".join(f"{v:.17g}" for v in row) for row in np.atleast_2d(a))
    title = "particles" if t is None else f"particles t={float(t):.17g}"
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET POLYDATA",
             f"POINTS {n} double", fmt(pts),
             f"VERTICES {n} {2 * n}", "\n".join(f"1 {i}" for i in range(n)),
             f"POINT_DATA {n}",
             "SCALARS kind int 1", "LOOKUP_TABLE default",
             "\n".join(str(int(k)) for k in system.kinds),
             "VECTORS velocity double", fmt(vel),
             "SCALARS pressure double 1", "LOOKUP_TABLE default",
             "\n".join(f"{v:.17g}" for v in system.pressures),
             "SCALARS volume double 1", "LOOKUP_TABLE default",
             "\n".join(f"{v:.17g}" for v in system.volumes)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot_vtk(path, dim=2):
    """Inverse of write_snapshot_vtk (only the layout it produces)."""
    tok = Path(path).read_text().split("\n")
    i = 0
    out = {}
    while i < len(tok):
        line = tok[i].strip()
        if line.startswith("POINTS"):
            n = int(line.split()[1])
            out["x"] = np.array([[float(v) for v in tok[i + 1 + j].split()] for j in range(n)])
            i += n
        elif line.startswith("VECTORS velocity"):
            out["u"] = np.array([[float(v) for v in tok[i + 1 + j].split()] for j in range(n)])
            i += n
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            vals = [tok[i + 2 + j] for j in range(n)]
            out[name] = np.array(vals, dtype=int if name == "kind" else float)
            i += n + 1
        i += 1
    return ParticleSystem(out["x"][:, :dim], out["u"][:, :dim], out["pressure"], out["volume"],
                          out["kind"].astype(np.int8))
