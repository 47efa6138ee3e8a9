"""Coupled two-field time integration and the homogenized macro solve.

Both the homogenized run and the fine-mesh reference run advance the same
Crank-Nicolson-type block scheme: diffusion, exchange and drift contributions
are averaged between time levels n and n+1 with weight 1/2 and the coupled
pair is solved monolithically.  The 2x2 block operator is constant in time,
so it is constrained and factorized once per run.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .errors import BlowupError, SolverFailure
from .mesh import build_unit_square_mesh


@dataclass
class MacroTrajectory:
    """Time-indexed nodal fields of both continua plus step time derivatives.

    u has shape (2, N+1, nn); dudt holds backward differences aligned to
    t_{n+1}, with dudt[:, 0] copied from the first step.
    """

    mesh: object
    times: np.ndarray
    u: np.ndarray
    dudt: np.ndarray

    @property
    def num_steps(self):
        return len(self.times) - 1

    def index_of(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise ValueError(f"time {t} is not in the trajectory")
        return k


class CoupledStepper:
    """One Crank-Nicolson step of the coupled two-continuum system.

    The semi-discrete form is  B_l du_l/dt = -(S u)_l + load_l  with
    B = blockdiag(mass_1, mass_2) and S the 2x2 block operator collecting
    diffusion, exchange and drift.  The step solves

        (B/dt + S/2) u^{n+1} = (B/dt - S/2) u^n + load,

    with Dirichlet values pinned at the mesh boundary.
    """

    def __init__(self, mesh, mass_blocks, s_blocks, dt, bc_values,
                 rel_tol=1e-10):
        self.mesh = mesh
        self.dt = float(dt)
        self.rel_tol = rel_tol
        nn = mesh.num_nodes
        self.nn = nn
        b1, b2 = mass_blocks
        s11, s12, s21, s22 = s_blocks
        self.s_blocks = {"11": s11, "12": s12, "21": s21, "22": s22}
        big_b = sp.bmat([[b1, None], [None, b2]], format="csr")
        big_s = sp.bmat([[s11, s12], [s21, s22]], format="csr")
        lhs = (big_b / self.dt + 0.5 * big_s).tocsr()
        self.rhs_op = (big_b / self.dt - 0.5 * big_s).tocsr()

        bnd = mesh.boundary_nodes
        self.constrained = np.concatenate([bnd, bnd + nn])
        bc1, bc2 = bc_values
        self.bc_flat = np.concatenate([bc1, bc2])
        pinned = np.zeros(2 * nn)
        pinned[self.constrained] = self.bc_flat
        self.shift = lhs @ pinned
        self.lhs_reduced = fem.eliminate_rows_cols(lhs, self.constrained)
        self._lu = spla.splu(self.lhs_reduced.tocsc())

    def step(self, u1, u2, load=None):
        """Advance (u1, u2) by one time step; load is a (2*nn,) vector."""
        u = np.concatenate([u1, u2])
        r = self.rhs_op @ u
        if load is not None:
            r = r + load
        r -= self.shift
        r[self.constrained] = self.bc_flat
        out = self._lu.solve(r)
        r_norm = np.linalg.norm(r)
        if r_norm > 0.0:
            achieved = np.linalg.norm(r - self.lhs_reduced @ out) / r_norm
            if achieved > self.rel_tol:
                raise SolverFailure(
                    f"step solve residual {achieved:.3e} exceeds "
                    f"{self.rel_tol:g}", achieved=achieved,
                )
        if not np.all(np.isfinite(out)):
            raise BlowupError("non-finite state after coupled step")
        return out[: self.nn], out[self.nn:]


def make_homogenized_stepper(mesh, eff, dt, bc_nodal, rel_tol=1e-10):
    """Assemble the homogenized block operator on a macro mesh.

    Continuum 1 collects +kbar1_1 . grad u_2 and -kbar2_1 . grad u_1;
    continuum 2 collects +kbar1_2 . grad u_1 and -kbar2_2 . grad u_2,
    matching the printed coupled scheme.  Exchange enters as
    +Q*_l (u_{3-l} - u_l) through the plain mass matrix.
    """
    mass = fem.assemble_mass(mesh, 1.0)
    blocks = []
    for l in (0, 1):
        kap = np.asarray(eff.kappa_star[l])
        stiff = fem.assemble_stiffness(mesh, 0.5 * (kap + kap.T))
        exch = eff.q_star[l] * mass
        drift_self = fem.assemble_convection(mesh, eff.kbar2[l])
        drift_cross = fem.assemble_convection(mesh, eff.kbar1[l])
        diag = (stiff + exch + drift_self).tocsr()
        off = (-exch - drift_cross).tocsr()
        blocks.append((diag, off))
    s11, s12 = blocks[0]
    s22, s21 = blocks[1]
    mass_blocks = (eff.c_star[0] * mass, eff.c_star[1] * mass)
    bnd = mesh.boundary_nodes
    bc_values = (bc_nodal[bnd], bc_nodal[bnd])
    return CoupledStepper(mesh, mass_blocks, (s11, s12, s21, s22), dt,
                          bc_values, rel_tol=rel_tol)


def run_trajectory(stepper, mesh, u1_init, u2_init, dt, num_steps, load_at=None):
    """March the stepper, recording states and backward time differences.

    load_at(t_mid) supplies the source vector for the step from t_n to
    t_{n+1}, evaluated at the interval midpoint.
    """
    nn = mesh.num_nodes
    u = np.zeros((2, num_steps + 1, nn))
    u[0, 0] = u1_init
    u[1, 0] = u2_init
    times = dt * np.arange(num_steps + 1)
    for k in range(num_steps):
        load = None if load_at is None else load_at(times[k] + 0.5 * dt)
        try:
            u1_new, u2_new = stepper.step(u[0, k], u[1, k], load)
        except BlowupError as exc:
            raise BlowupError(f"blow-up at step {k + 1}", step=k + 1) from exc
        u[0, k + 1] = u1_new
        u[1, k + 1] = u2_new
    dudt = np.zeros_like(u)
    if num_steps >= 1:
        dudt[:, 1:] = np.diff(u, axis=1) / dt
        dudt[:, 0] = dudt[:, 1]
    return MacroTrajectory(mesh=mesh, times=times, u=u, dudt=dudt)


def solve_homogenized(config, eff):
    """Time-integrate the homogenized system described by `config`."""
    mesh = build_unit_square_mesh(config.n_macro, spec=None)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    bc_nodal = config.bc_fn(x, y, 0.0)
    stepper = make_homogenized_stepper(mesh, eff, config.dt, bc_nodal,
                                       rel_tol=config.tol)

    mass = fem.assemble_mass(mesh, 1.0)

    def load_at(t_mid):
        q = config.q_fn(x, y, t_mid)
        vec = mass @ q
        return np.concatenate([vec, vec])

    u1 = config.g1_fn(x, y, 0.0).copy()
    u2 = config.g2_fn(x, y, 0.0).copy()
    u1[mesh.boundary_nodes] = bc_nodal[mesh.boundary_nodes]
    u2[mesh.boundary_nodes] = bc_nodal[mesh.boundary_nodes]
    return run_trajectory(stepper, mesh, u1, u2, config.dt, config.num_steps,
                          load_at)
