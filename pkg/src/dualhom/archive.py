"""Binary-free text archives for cell solutions and cached trajectories.

Format: a header of ``# key: value`` lines, then one block per field:

    field <name> <length>
    <value>
    ...

Values are written with repr-round-trip precision so cached artifacts are
bitwise reproducible across identical runs.
"""

import numpy as np

from .errors import ConfigError
from .cells import CellSolutions
from .macro import MacroTrajectory


def save_archive(path, meta, fields):
    with open(path, "w") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        for name, values in fields.items():
            values = np.asarray(values, dtype=float).ravel()
            fh.write(f"field {name} {values.size}\n")
            fh.write("\n".join(repr(float(v)) for v in values))
            fh.write("\n")


def load_archive(path):
    meta = {}
    fields = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    idx = 0
    while idx < len(lines) and lines[idx].startswith("#"):
        body = lines[idx][1:].strip()
        key, _, value = body.partition(":")
        meta[key.strip()] = value.strip()
        idx += 1
    while idx < len(lines):
        header = lines[idx].split()
        if len(header) != 3 or header[0] != "field":
            raise ConfigError(f"{path}: malformed archive block at line {idx + 1}")
        name, size = header[1], int(header[2])
        chunk = lines[idx + 1: idx + 1 + size]
        fields[name] = np.array([float(v) for v in chunk])
        idx += 1 + size
    return meta, fields


def save_cells(path, cells, key, n_cell):
    meta = {"kind": "cells", "key": key, "n_cell": str(n_cell)}
    save_archive(path, meta, dict(cells.field_items()))


def load_cells(path, expected_key=None):
    """Rebuild CellSolutions from an archive; returns None on key mismatch."""
    meta, fields = load_archive(path)
    if meta.get("kind") != "cells":
        raise ConfigError(f"{path}: not a cell archive")
    if expected_key is not None and meta.get("key") != expected_key:
        return None
    n_cell = int(meta["n_cell"])
    nn = (n_cell + 1) ** 2
    n1 = np.zeros((2, 2, nn))
    m = np.zeros((2, nn))
    g = np.zeros((2, nn))
    n2 = np.zeros((2, 2, 2, nn))
    c = np.zeros((2, 2, nn))
    f = np.zeros((2, 2, nn))
    k = np.zeros((2, nn))
    for l in (0, 1):
        for a in (0, 1):
            n1[l, a] = fields[f"N{a + 1}_{l + 1}"]
            c[l, a] = fields[f"C{a + 1}_{l + 1}"]
            f[l, a] = fields[f"F{a + 1}_{l + 1}"]
            for b in (0, 1):
                n2[l, a, b] = fields[f"N{a + 1}{b + 1}_{l + 1}"]
        m[l] = fields[f"M_{l + 1}"]
        g[l] = fields[f"G_{l + 1}"]
        k[l] = fields[f"K_{l + 1}"]
    return n_cell, dict(n1=n1, m=m, g=g, n2=n2, c=c, f=f, k=k)


def cells_from_archive(path, cell_mesh, expected_key=None):
    loaded = load_cells(path, expected_key)
    if loaded is None:
        return None
    n_cell, arrays = loaded
    if n_cell != cell_mesh.n:
        return None
    return CellSolutions(mesh=cell_mesh, **arrays)


def save_trajectory(path, traj, key):
    meta = {
        "kind": "trajectory",
        "key": key,
        "n": str(traj.mesh.n),
        "num_steps": str(traj.num_steps),
        "dt": repr(float(traj.times[1] - traj.times[0])) if traj.num_steps else "0.0",
    }
    fields = {}
    for l in (0, 1):
        for k in range(traj.num_steps + 1):
            fields[f"u{l + 1}_{k:05d}"] = traj.u[l, k]
    save_archive(path, meta, fields)


def load_trajectory(path, mesh, expected_key=None):
    meta, fields = load_archive(path)
    if meta.get("kind") != "trajectory":
        raise ConfigError(f"{path}: not a trajectory archive")
    if expected_key is not None and meta.get("key") != expected_key:
        return None
    if int(meta["n"]) != mesh.n:
        return None
    num_steps = int(meta["num_steps"])
    dt = float(meta["dt"])
    nn = mesh.num_nodes
    u = np.zeros((2, num_steps + 1, nn))
    for l in (0, 1):
        for k in range(num_steps + 1):
            u[l, k] = fields[f"u{l + 1}_{k:05d}"]
    dudt = np.zeros_like(u)
    if num_steps >= 1:
        dudt[:, 1:] = np.diff(u, axis=1) / dt
        dudt[:, 0] = dudt[:, 1]
    times = dt * np.arange(num_steps + 1)
    return MacroTrajectory(mesh=mesh, times=times, u=u, dudt=dudt)
