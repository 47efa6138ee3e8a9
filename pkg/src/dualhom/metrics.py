"""Relative L2 and H1-seminorm errors and their evolution over time.

Norms are evaluated consistently with the discretization: the L2 norm through
the exact P1 mass matrix and the H1 seminorm through the unit-coefficient
stiffness matrix, both on the fine mesh.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import fem
from .errors import UndefinedMetricError
from .reconstruct import Reconstructor

SERIES_COLUMNS = [
    "Lerr10", "Lerr11", "Lerr12", "Herr10", "Herr11", "Herr12",
    "Lerr20", "Lerr21", "Lerr22", "Herr20", "Herr21", "Herr22",
]


def _weighted_ratio(op, ref, approx):
    err = np.asarray(approx) - np.asarray(ref)
    denom = ref @ (op @ ref)
    if denom <= 0.0:
        raise UndefinedMetricError("reference norm vanishes")
    return float(np.sqrt(max(err @ (op @ err), 0.0) / denom))


def relative_l2(ref, approx, mesh, mass=None):
    """|| ref - approx ||_L2 / || ref ||_L2 via the P1 mass matrix."""
    if mass is None:
        mass = fem.assemble_mass(mesh, 1.0)
    return _weighted_ratio(mass, ref, approx)


def relative_h1_semi(ref, approx, mesh, stiff=None):
    """| ref - approx |_H1 / | ref |_H1 via the unit stiffness matrix."""
    if stiff is None:
        stiff = fem.assemble_stiffness(mesh, 1.0)
    return _weighted_ratio(stiff, ref, approx)


@dataclass
class ErrorSeries:
    """Lerr/Herr values for each continuum and reconstruction order.

    lerr and herr have shape (2 continua, 3 orders, num_times); order index
    0 = homogenized, 1 = first-order, 2 = second-order, matching the digit
    convention of the column names (Lerr10 ... Herr22).
    """

    times: np.ndarray
    lerr: np.ndarray
    herr: np.ndarray

    def column(self, name):
        kind, l, order = name[0], int(name[-2]) - 1, int(name[-1])
        data = self.lerr if kind == "L" else self.herr
        return data[l, order]

    def as_rows(self):
        for idx, t in enumerate(self.times):
            yield [t] + [self.column(c)[idx] for c in SERIES_COLUMNS]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time"] + SERIES_COLUMNS)
            for row in self.as_rows():
                writer.writerow([repr(float(v)) for v in row])

    def max_over(self, name, t_lo, t_hi):
        vals = self.column(name)
        mask = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        return float(vals[mask].max())

    def min_over(self, name, t_lo, t_hi):
        vals = self.column(name)
        mask = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        return float(vals[mask].min())

    def time_integral(self, name):
        """Trapezoidal integral of one series over its time range."""
        y = self.column(name)
        dt = np.diff(self.times)
        return float(np.sum(0.5 * dt * (y[1:] + y[:-1])))


def error_evolution(ref_traj, macro_traj, cells, fine_mesh, eps, every=1):
    """Lerr/Herr of all three orders against the reference trajectory.

    Both trajectories must share the time grid.  The series starts at the
    first step rather than t=0: the initial state is typically constant, so
    its H1 seminorm (the Herr denominator) vanishes there.
    """
    if ref_traj.num_steps != macro_traj.num_steps or not np.allclose(
        ref_traj.times, macro_traj.times, atol=1e-12
    ):
        raise ValueError("reference and macro trajectories have different time grids")
    recon = Reconstructor(macro_traj, cells, fine_mesh, eps)
    mass = fem.assemble_mass(fine_mesh, 1.0)
    stiff = fem.assemble_stiffness(fine_mesh, 1.0)
    idxs = range(1, ref_traj.num_steps + 1, every)
    times = ref_traj.times[list(idxs)]
    lerr = np.zeros((2, 3, len(times)))
    herr = np.zeros((2, 3, len(times)))
    for col, k in enumerate(idxs):
        t = ref_traj.times[k]
        fields = recon.all_orders(t)
        for l in (0, 1):
            ref = ref_traj.u[l, k]
            for order, fld in enumerate(fields):
                lerr[l, order, col] = relative_l2(ref, fld.values[l],
                                                  fine_mesh, mass)
                herr[l, order, col] = relative_h1_semi(ref, fld.values[l],
                                                       fine_mesh, stiff)
    series = ErrorSeries(times=times, lerr=lerr, herr=herr)
    if not (np.all(np.isfinite(series.lerr)) and np.all(np.isfinite(series.herr))):
        raise UndefinedMetricError("error series contains non-finite entries")
    return series
