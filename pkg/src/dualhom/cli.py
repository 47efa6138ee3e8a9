"""Command-line entry point tying the pipeline stages together.

Subcommands: cells, homogenize, macro, reference, reconstruct, compare,
sweep-eps.  Exit codes: 0 success, 2 configuration error, 3 linear-solver
failure, 4 time-integration blow-up, 5 I/O error.
"""

import argparse
import csv
import os
import sys

from . import __version__, archive, effective, pipeline
from .config import load_config
from .errors import (BlowupError, ConfigError, DualhomError,
                     InvalidMaterialError, SolverFailure)
from .mesh import build_periodic_fine_mesh
from .reconstruct import Reconstructor
from .vtkio import write_vtk

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4
EXIT_IO = 5


def _set_thread_cap(threads):
    if threads is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(threads)


def _write_manifest(path, config, times, files, eff=None):
    """key,value rows: config echo, stage seconds, file inventory, version."""
    rows = [("version", __version__)]
    rows += [(f"config.{k}", v) for k, v in sorted(config.raw.items())]
    if eff is not None:
        rows += [
            (f"eff.{name}_{cont}" + (f"_{i}{j}" if i != "" else ""), repr(float(v)))
            for name, cont, i, j, v in eff.rows()
        ]
    rows += [(f"time.{stage}", f"{sec:.6f}") for stage, sec in sorted(times.seconds.items())]
    rows += [(f"file.{idx}", name) for idx, name in enumerate(files)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        writer.writerows(rows)


def _trajectory_outputs(traj, mesh, config, out_dir, prefix, files):
    """VTK snapshots at configured times plus a per-step min/max CSV."""
    summary = os.path.join(out_dir, f"{prefix}_steps.csv")
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time", "u1_min", "u1_max", "u2_min", "u2_max"])
        for k, t in enumerate(traj.times):
            writer.writerow([
                k, repr(float(t)),
                repr(float(traj.u[0, k].min())), repr(float(traj.u[0, k].max())),
                repr(float(traj.u[1, k].min())), repr(float(traj.u[1, k].max())),
            ])
    files.append(summary)
    for t in config.output_times:
        k = traj.index_of(t)
        name = os.path.join(out_dir, f"{prefix}_t{traj.times[k]:.6g}.vtk")
        write_vtk(name, mesh, point_data={
            "u1": traj.u[0, k], "u2": traj.u[1, k],
        })
        files.append(name)


def cmd_cells(config, out_dir, cache_dir):
    times = pipeline.StageTimes()
    cells, eff, cached = pipeline.solve_cells_cached(config, cache_dir, times)
    files = []
    cell_path = os.path.join(out_dir, "cells.txt")
    archive.save_cells(cell_path, cells, config.cells_key(), config.n_cell)
    files.append(cell_path)
    coeff_path = os.path.join(out_dir, "effective.csv")
    effective.write_csv(eff, coeff_path)
    files.append(coeff_path)
    manifest = os.path.join(out_dir, "manifest.csv")
    _write_manifest(manifest, config, times, files, eff)
    files.append(manifest)
    print(f"cells: {'cache hit' if cached else 'solved'}; "
          f"{sum(1 for _ in cells.field_items())} fields -> {cell_path}")
    return 0


def cmd_homogenize(config, out_dir, cache_dir):
    times = pipeline.StageTimes()
    _, eff, _ = pipeline.solve_cells_cached(config, cache_dir, times)
    coeff_path = os.path.join(out_dir, "effective.csv")
    effective.write_csv(eff, coeff_path)
    _write_manifest(os.path.join(out_dir, "manifest.csv"), config, times,
                    [coeff_path], eff)
    for name, cont, i, j, value in eff.rows():
        label = f"{name}[{cont}]" + (f"[{i},{j}]" if i != "" else "")
        print(f"{label} = {value:.12g}")
    return 0


def cmd_macro(config, out_dir, cache_dir):
    times = pipeline.StageTimes()
    _, eff, _ = pipeline.solve_cells_cached(config, cache_dir, times)
    traj = pipeline.solve_macro(config, eff, times)
    files = []
    _trajectory_outputs(traj, traj.mesh, config, out_dir, "macro", files)
    _write_manifest(os.path.join(out_dir, "manifest.csv"), config, times,
                    files, eff)
    print(f"macro: {traj.num_steps} steps on {traj.mesh.num_nodes} nodes")
    return 0


def cmd_reference(config, out_dir, cache_dir):
    times = pipeline.StageTimes()
    traj, fine_mesh, cached = pipeline.solve_reference_cached(
        config, cache_dir, times
    )
    files = []
    _trajectory_outputs(traj, fine_mesh, config, out_dir, "reference", files)
    _write_manifest(os.path.join(out_dir, "manifest.csv"), config, times, files)
    print(f"reference: {'cache hit' if cached else 'solved'}; "
          f"{traj.num_steps} steps on {fine_mesh.num_nodes} nodes")
    return 0


def cmd_reconstruct(config, out_dir, cache_dir):
    times = pipeline.StageTimes()
    cells, eff, _ = pipeline.solve_cells_cached(config, cache_dir, times)
    traj = pipeline.solve_macro(config, eff, times)
    fine_mesh = build_periodic_fine_mesh(config.n_fine, config.eps,
                                         config.geometry)
    recon = Reconstructor(traj, cells, fine_mesh, config.eps)
    files = []
    with pipeline._Timer(times, "reconstruct"):
        for t in config.output_times:
            for fld in recon.all_orders(t):
                name = os.path.join(
                    out_dir, f"reconstruct_{fld.order}_t{fld.time:.6g}.vtk"
                )
                write_vtk(name, fine_mesh, point_data={
                    f"u1_{fld.order}": fld.values[0],
                    f"u2_{fld.order}": fld.values[1],
                })
                files.append(name)
    _write_manifest(os.path.join(out_dir, "manifest.csv"), config, times,
                    files, eff)
    print(f"reconstruct: wrote {len(files)} VTK files")
    return 0


def cmd_compare(config, out_dir, cache_dir):
    result, times = pipeline.run_compare(config, cache_dir)
    files = []
    series_path = os.path.join(out_dir, "errors.csv")
    result["series"].write_csv(series_path)
    files.append(series_path)
    coeff_path = os.path.join(out_dir, "effective.csv")
    effective.write_csv(result["eff"], coeff_path)
    files.append(coeff_path)

    recon = Reconstructor(result["macro_traj"], result["cells"],
                          result["fine_mesh"], config.eps)
    for t in config.output_times:
        k = result["ref_traj"].index_of(t)
        point_data = {}
        for fld in recon.all_orders(t):
            point_data[f"u1_{fld.order}"] = fld.values[0]
            point_data[f"u2_{fld.order}"] = fld.values[1]
        point_data["u1_reference"] = result["ref_traj"].u[0, k]
        point_data["u2_reference"] = result["ref_traj"].u[1, k]
        name = os.path.join(out_dir, f"compare_t{result['ref_traj'].times[k]:.6g}.vtk")
        write_vtk(name, result["fine_mesh"], point_data=point_data)
        files.append(name)

    manifest = os.path.join(out_dir, "manifest.csv")
    _write_manifest(manifest, config, times, files, result["eff"])
    files.append(manifest)

    homs_time = times.total("cells", "homogenize", "macro", "reconstruct")
    ref_time = times.total("reference")
    series = result["series"]
    final = {c: series.column(c)[-1] for c in ("Lerr12", "Lerr22", "Herr12", "Herr22")}
    print(f"compare: HOMS pipeline {homs_time:.3f}s vs reference {ref_time:.3f}s")
    print("         final "
          + ", ".join(f"{k}={v:.4f}" for k, v in final.items()))
    return 0


def cmd_sweep_eps(config_path, overrides, eps_list, out_dir, cache_dir):
    base = load_config(config_path, overrides)
    base_k = base.period_count
    rows = []
    prev_metric = None
    for eps_text in eps_list:
        cfg = load_config(config_path, list(overrides) + [f"eps={eps_text}"])
        k = cfg.period_count
        scale = k / base_k
        n_fine = int(round(base.n_fine * scale))
        cfg = load_config(
            config_path,
            list(overrides) + [f"eps={eps_text}", f"mesh.n_fine={n_fine}"],
        )
        sub_dir = os.path.join(out_dir, f"eps_{k}")
        os.makedirs(sub_dir, exist_ok=True)
        result, times = pipeline.run_compare(cfg, cache_dir)
        series = result["series"]
        series.write_csv(os.path.join(sub_dir, "errors.csv"))
        _write_manifest(os.path.join(sub_dir, "manifest.csv"), cfg, times,
                        ["errors.csv"], result["eff"])
        metric = (
            series.column("Lerr12")[-1] + series.column("Lerr22")[-1]
            + series.time_integral("Herr12") + series.time_integral("Herr22")
        )
        ratio = prev_metric / metric if prev_metric is not None else ""
        rows.append([eps_text, n_fine, repr(float(metric)),
                     repr(float(ratio)) if ratio != "" else ""])
        prev_metric = metric
        print(f"eps={eps_text}: n_fine={n_fine}, homs_metric={metric:.5f}"
              + (f", ratio={ratio:.3f}" if ratio != "" else ""))
    summary = os.path.join(out_dir, "sweep_summary.csv")
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "n_fine", "homs_metric", "ratio_to_previous"])
        writer.writerows(rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dualhom",
        description="Two-scale solver for coupled dual-continuum diffusion "
                    "in periodic media",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("cells", "solve cell problems, write archive + coefficient report"),
        ("homogenize", "report effective coefficients"),
        ("macro", "run the homogenized macro solve"),
        ("reference", "run the fine-mesh reference solve"),
        ("reconstruct", "write corrected fields on the fine mesh"),
        ("compare", "full pipeline plus reference, errors and timings"),
        ("sweep-eps", "compare across a list of periods"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a key = value config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--threads", type=int, default=None,
                       help="cap BLAS/OpenMP threads for reproducible timing")
        if name == "sweep-eps":
            p.add_argument("--eps-list", default="1/4,1/8",
                           help="comma-separated periods, e.g. 1/4,1/8")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    _set_thread_cap(args.threads)
    try:
        os.makedirs(args.out, exist_ok=True)
        cache_dir = pipeline.cache_dir_for(args.out)
        if args.command == "sweep-eps":
            eps_list = [part.strip() for part in args.eps_list.split(",") if part.strip()]
            return cmd_sweep_eps(args.config, args.set, eps_list, args.out,
                                 cache_dir)
        config = load_config(args.config, args.set)
        handler = {
            "cells": cmd_cells,
            "homogenize": cmd_homogenize,
            "macro": cmd_macro,
            "reference": cmd_reference,
            "reconstruct": cmd_reconstruct,
            "compare": cmd_compare,
        }[args.command]
        return handler(config, args.out, cache_dir)
    except (ConfigError, InvalidMaterialError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"linear solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BlowupError as exc:
        print(f"time integration blew up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DualhomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
