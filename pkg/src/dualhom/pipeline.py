"""End-to-end stages with caching and wall-time accounting.

The CLI and the acceptance suite both drive runs through these helpers so
that timings always compare the same code paths.
"""

import os
import time
from dataclasses import dataclass, field

from . import archive, cells as cells_mod, effective, macro, metrics, reference
from .mesh import build_periodic_fine_mesh, build_unit_square_mesh

CACHE_ENV_VAR = "DUALHOM_CACHE_DIR"


def cache_dir_for(out_dir):
    """Cache location: env override wins, else a subdirectory of the run."""
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return env
    return os.path.join(out_dir, "cache")


@dataclass
class StageTimes:
    seconds: dict = field(default_factory=dict)

    def add(self, stage, value):
        self.seconds[stage] = self.seconds.get(stage, 0.0) + value

    def total(self, *stages):
        return sum(self.seconds.get(s, 0.0) for s in stages)


class _Timer:
    def __init__(self, times, stage):
        self.times, self.stage = times, stage

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.times.add(self.stage, time.perf_counter() - self.start)
        return False


def solve_cells_cached(config, cache_dir=None, times=None):
    """All 26 cell functions plus effective coefficients, with caching."""
    times = times if times is not None else StageTimes()
    cell_mesh = build_unit_square_mesh(config.n_cell, config.geometry)
    key = config.cells_key()
    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"cells_{key}.txt")
        if os.path.exists(path):
            with _Timer(times, "cells"):
                cached = archive.cells_from_archive(path, cell_mesh, key)
            if cached is not None:
                with _Timer(times, "homogenize"):
                    eff = effective.compute_effective(
                        cell_mesh, config.materials, cached,
                        k2bar_uses_M2=config.k2bar_uses_M2,
                    )
                return cached, eff, True
    with _Timer(times, "cells"):
        first = cells_mod.solve_first_order(cell_mesh, config.materials,
                                            rel_tol=config.tol)
    with _Timer(times, "homogenize"):
        eff = effective.compute_effective(cell_mesh, config.materials, first,
                                          k2bar_uses_M2=config.k2bar_uses_M2)
    with _Timer(times, "cells"):
        full = cells_mod.solve_second_order(
            cell_mesh, config.materials, first, eff, rel_tol=config.tol,
            strict_paper_signs=config.strict_paper_signs,
        )
        if path:
            archive.save_cells(path, full, key, config.n_cell)
    return full, eff, False


def solve_macro(config, eff, times=None):
    times = times if times is not None else StageTimes()
    with _Timer(times, "macro"):
        return macro.solve_homogenized(config, eff)


def solve_reference_cached(config, cache_dir=None, times=None):
    times = times if times is not None else StageTimes()
    fine_mesh = build_periodic_fine_mesh(config.n_fine, config.eps,
                                         config.geometry)
    key = config.reference_key()
    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"reference_{key}.txt")
        if os.path.exists(path):
            with _Timer(times, "reference"):
                cached = archive.load_trajectory(path, fine_mesh, key)
            if cached is not None:
                return cached, fine_mesh, True
    with _Timer(times, "reference"):
        traj = reference.solve_multiscale(config)
    if path:
        archive.save_trajectory(path, traj, key)
    return traj, fine_mesh, False


def run_compare(config, cache_dir=None):
    """Full pipeline: cells, coefficients, macro, reference, error series.

    Returns (result dict, StageTimes).  The HOMS-pipeline wall time is the
    sum of the cells, homogenize, macro and reconstruct stages; the
    reference stage is timed separately.
    """
    times = StageTimes()
    cells, eff, cells_cached = solve_cells_cached(config, cache_dir, times)
    traj = solve_macro(config, eff, times)
    ref_traj, fine_mesh, ref_cached = solve_reference_cached(
        config, cache_dir, times
    )
    with _Timer(times, "reconstruct"):
        series = metrics.error_evolution(
            ref_traj, traj, cells, fine_mesh, config.eps,
            every=config.output_every,
        )
    result = {
        "cells": cells,
        "eff": eff,
        "macro_traj": traj,
        "ref_traj": ref_traj,
        "fine_mesh": fine_mesh,
        "series": series,
        "cells_cached": cells_cached,
        "reference_cached": ref_cached,
    }
    return result, times
