"""Auxiliary unit-cell problems with homogeneous Dirichlet boundary data.

Thirteen cell functions are solved per continuum in 2D: the first-order
correctors N^1, N^2 (one per direction) and M, then the second-order family
G, N^{11}, N^{12}, N^{21}, N^{22}, C^1, C^2, F^1, F^2, K.  All share one
stiffness operator per continuum, factorized once.

Right-hand sides that contain derivatives of the piecewise-constant
permeability are distributions at phase interfaces; every such term is
assembled in integrated-by-parts form (the derivative moves onto the test
function), so no explicit jump terms appear.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fem
from .errors import ConfigError


@dataclass
class CellSolutions:
    """Nodal cell functions on the unit-cell mesh.

    Index convention: continuum l in {0, 1}; direction indices in {0, 1}.
      n1[l, a]        first-order corrector for direction a
      m[l]            exchange corrector
      g[l]            capacity-fluctuation corrector
      n2[l, a, b]     second-order corrector for direction pair (a, b)
      c[l, a]         same-continuum drift corrector
      f[l, a]         cross-continuum drift corrector
      k[l]            exchange-fluctuation corrector
    """

    mesh: object
    n1: np.ndarray
    m: np.ndarray
    g: Optional[np.ndarray] = None
    n2: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    k: Optional[np.ndarray] = None

    @property
    def has_second_order(self):
        return self.g is not None

    def field_items(self):
        """Yield (name, nodal array) for every solved field."""
        for l in (0, 1):
            for a in (0, 1):
                yield f"N{a + 1}_{l + 1}", self.n1[l, a]
            yield f"M_{l + 1}", self.m[l]
            if not self.has_second_order:
                continue
            yield f"G_{l + 1}", self.g[l]
            for a in (0, 1):
                for b in (0, 1):
                    yield f"N{a + 1}{b + 1}_{l + 1}", self.n2[l, a, b]
            for a in (0, 1):
                yield f"C{a + 1}_{l + 1}", self.c[l, a]
            for a in (0, 1):
                yield f"F{a + 1}_{l + 1}", self.f[l, a]
            yield f"K_{l + 1}", self.k[l]


class _CellWorkspace:
    """Shared geometry, coefficients and factorized operator per continuum."""

    def __init__(self, mesh, materials, rel_tol):
        self.mesh = mesh
        self.rel_tol = rel_tol
        self.area = mesh.element_areas
        self.grads = mesh.basis_gradients
        self.kappa = [materials.kappa_elements(mesh, l) for l in (0, 1)]
        self.q = [materials.q_exchange[l].on_elements(mesh) for l in (0, 1)]
        self.c = [materials.c[l].on_elements(mesh) for l in (0, 1)]
        self.bnd = mesh.boundary_nodes
        self.solvers = []
        for l in (0, 1):
            stiff = fem.assemble_stiffness(mesh, self.kappa[l])
            reduced = fem.eliminate_rows_cols(stiff, self.bnd)
            self.solvers.append(fem.DirectSolver(reduced, rel_tol=rel_tol))

    def solve(self, l, rhs):
        rhs = rhs.copy()
        rhs[self.bnd] = 0.0
        return self.solvers[l].solve(rhs)

    # -- closed-form element integrals scattered into global vectors --------

    def _scatter(self, per_vertex):
        out = np.zeros(self.mesh.num_nodes)
        for k in range(3):
            np.add.at(out, self.mesh.elements[:, k], per_vertex[:, k])
        return out

    def flux(self, l, a1, weight=None):
        """integral kappa_{i,a1} [* W] dphi_i, per test function."""
        kcol = self.kappa[l][:, :, a1]  # (ne,2)
        gk = np.einsum("eid,ed->ei", self.grads, kcol)  # (ne,3)
        scale = self.area if weight is None else self.area * weight
        return self._scatter(scale[:, None] * gk)

    def volume(self, values):
        """integral s phi, s per-element constant."""
        w = values * self.area / 3.0
        return self._scatter(np.repeat(w[:, None], 3, axis=1))

    def p1_mass(self, values, w_nodal):
        """integral s W phi for per-element s and P1 field W."""
        wv = w_nodal[self.mesh.elements]  # (ne,3)
        factor = values * self.area / 12.0
        per_vertex = factor[:, None] * (wv.sum(axis=1, keepdims=True) + wv)
        return self._scatter(per_vertex)

    def kappa_grad(self, l, w_nodal, a1):
        """integral (kappa grad W)_{a1} phi for P1 field W."""
        gw = np.einsum("ei,eid->ed", w_nodal[self.mesh.elements], self.grads)
        val = np.einsum("ed,ed->e", self.kappa[l][:, a1, :], gw)
        w = val * self.area / 3.0
        return self._scatter(np.repeat(w[:, None], 3, axis=1))

    def elem_mean(self, w_nodal):
        return w_nodal[self.mesh.elements].mean(axis=1)


def solve_first_order(cell_mesh, materials, rel_tol=1e-10):
    """Solve the first-order cell problems for both continua.

    N_l^{a1} satisfies  a_l(N, phi) = - integral kappa_{l,i a1} dphi_i,
    M_l satisfies       a_l(M, phi) = - integral Q_l phi,
    with a_l the kappa_l energy form and zero boundary values.
    """
    ws = _CellWorkspace(cell_mesh, materials, rel_tol)
    nn = cell_mesh.num_nodes
    n1 = np.zeros((2, 2, nn))
    m = np.zeros((2, nn))
    for l in (0, 1):
        for a1 in (0, 1):
            n1[l, a1] = ws.solve(l, -ws.flux(l, a1))
        m[l] = ws.solve(l, -ws.volume(ws.q[l]))
    return CellSolutions(mesh=cell_mesh, n1=n1, m=m)


def solve_second_order(cell_mesh, materials, first, eff, rel_tol=1e-10,
                       strict_paper_signs=True):
    """Solve the ten second-order cell problems per continuum.

    Right-hand sides follow the printed equations; `strict_paper_signs=False`
    switches the drift constant in the continuum-1 same-field problem from
    the cross-drift coefficient kbar1 to kbar2, which is the variant that
    makes that right-hand side integrate to zero over the cell.
    """
    if first is None or first.n1 is None:
        raise ConfigError("second-order cell solve requires first-order fields")
    if first.n1.shape[-1] != cell_mesh.num_nodes:
        raise ConfigError("first-order fields were solved on a different mesh")
    ws = _CellWorkspace(cell_mesh, materials, rel_tol)
    nn = cell_mesh.num_nodes
    n1, m = first.n1, first.m

    g = np.zeros((2, nn))
    n2 = np.zeros((2, 2, 2, nn))
    c = np.zeros((2, 2, nn))
    f = np.zeros((2, 2, nn))
    k = np.zeros((2, nn))

    for l in (0, 1):
        other = 1 - l
        kap_e = ws.kappa[l]

        # capacity fluctuation: a(G, phi) = - integral (c_l - c*_l) phi
        g[l] = ws.solve(l, -ws.volume(ws.c[l] - eff.c_star[l]))

        # second-order diffusion correctors
        for a1 in (0, 1):
            for a2 in (0, 1):
                s = eff.kappa_star[l, a1, a2] - kap_e[:, a1, a2]
                rhs = -ws.volume(s)
                rhs += ws.kappa_grad(l, n1[l, a2], a1)
                rhs -= ws.flux(l, a1, weight=ws.elem_mean(n1[l, a2]))
                n2[l, a1, a2] = ws.solve(l, rhs)

        m_mean = ws.elem_mean(m[l])
        for a1 in (0, 1):
            if l == 0 and not strict_paper_signs:
                c_const = eff.kbar2[l, a1]
            else:
                c_const = eff.kbar1[l, a1]
            rhs = -ws.p1_mass(ws.q[l], n1[l, a1])
            rhs += ws.volume(np.full(ws.area.shape, c_const))
            rhs -= ws.kappa_grad(l, m[l], a1)
            rhs += ws.flux(l, a1, weight=m_mean)
            c[l, a1] = ws.solve(l, rhs)

            f_const = eff.kbar1[l, a1] if l == 0 else eff.kbar2[l, a1]
            rhs = -ws.volume(np.full(ws.area.shape, f_const))
            rhs += ws.p1_mass(ws.q[l], n1[other, a1])
            rhs += ws.kappa_grad(l, m[l], a1)
            rhs -= ws.flux(l, a1, weight=m_mean)
            f[l, a1] = ws.solve(l, rhs)

        # exchange fluctuation: a(K, phi) = - integral (Q*_l + Q_l (M_1 + M_2)) phi
        rhs = -ws.volume(np.full(ws.area.shape, eff.q_star[l]))
        rhs -= ws.p1_mass(ws.q[l], m[0] + m[1])
        k[l] = ws.solve(l, rhs)

    return CellSolutions(mesh=cell_mesh, n1=n1, m=m, g=g, n2=n2, c=c, f=f, k=k)


def assemble_rhs_for(cell_mesh, materials, field, l, a1=0, a2=0, first=None,
                     eff=None, strict_paper_signs=True):
    """Expose assembled right-hand sides for verification and testing."""
    ws = _CellWorkspace(cell_mesh, materials, rel_tol=1e-10)
    if field == "N1":
        return -ws.flux(l, a1)
    if field == "M":
        return -ws.volume(ws.q[l])
    if field == "G":
        return -ws.volume(ws.c[l] - eff.c_star[l])
    if field == "K":
        return -ws.volume(np.full(ws.area.shape, eff.q_star[l])) - ws.p1_mass(
            ws.q[l], first.m[0] + first.m[1]
        )
    if field == "N2":
        s = eff.kappa_star[l, a1, a2] - ws.kappa[l][:, a1, a2]
        rhs = -ws.volume(s)
        rhs += ws.kappa_grad(l, first.n1[l, a2], a1)
        rhs -= ws.flux(l, a1, weight=ws.elem_mean(first.n1[l, a2]))
        return rhs
    raise ValueError(f"unknown field {field!r}")


def boundary_max(cells):
    """Largest absolute boundary value over every solved field."""
    bnd = cells.mesh.boundary_nodes
    return max(float(np.abs(vals[bnd]).max()) for _, vals in cells.field_items())
