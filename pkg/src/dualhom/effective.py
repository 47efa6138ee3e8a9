"""Homogenized coefficients from first-order cell functions.

Every integral is a sum of exact per-element contributions: coefficients are
piecewise constant and the cell functions are P1, so element means and
constant gradients give the integrals in closed form.
"""

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EffectiveCoefficients:
    """Constant macro-model coefficients, indexed by continuum l in {0, 1}.

    c_star[l]          volume-averaged capacity
    kappa_star[l]      2x2 effective permeability tensor
    kbar1[l], kbar2[l] cross/self drift vectors (length 2)
    q_star[l]          effective exchange rate
    """

    c_star: np.ndarray
    kappa_star: np.ndarray
    kbar1: np.ndarray
    kbar2: np.ndarray
    q_star: np.ndarray

    def rows(self):
        """Flat (name, continuum, i, j, value) rows for reporting."""
        out = []
        for l in (0, 1):
            out.append(("c_star", l + 1, "", "", self.c_star[l]))
            for i in (0, 1):
                for j in (0, 1):
                    out.append(("kappa_star", l + 1, i + 1, j + 1,
                                self.kappa_star[l, i, j]))
            for i in (0, 1):
                out.append(("kbar1", l + 1, i + 1, "", self.kbar1[l, i]))
            for i in (0, 1):
                out.append(("kbar2", l + 1, i + 1, "", self.kbar2[l, i]))
            out.append(("q_star", l + 1, "", "", self.q_star[l]))
        return out


def compute_effective(cell_mesh, materials, first, k2bar_uses_M2=False):
    """Evaluate the homogenized coefficients by exact element integration.

    The drift coefficients use the flux of M_1 in both kbar families, as
    printed; `k2bar_uses_M2=True` switches the self-drift family kbar2 to the
    flux of M_2 (the variant suggested by the surrounding derivation).  The
    difference vanishes for mirror-symmetric cells.
    """
    if first.n1.shape[-1] != cell_mesh.num_nodes:
        raise ValueError("cell functions and mesh sizes do not match")
    area = cell_mesh.element_areas
    grads = cell_mesh.basis_gradients
    els = cell_mesh.elements

    def grad_e(values):
        return np.einsum("ei,eid->ed", values[els], grads)

    def mean_e(values):
        return values[els].mean(axis=1)

    c_star = np.zeros(2)
    kappa_star = np.zeros((2, 2, 2))
    kbar1 = np.zeros((2, 2))
    kbar2 = np.zeros((2, 2))
    q_star = np.zeros(2)

    m_flux_source = first.m[1] if k2bar_uses_M2 else first.m[0]
    m_sum_mean = mean_e(first.m[0] + first.m[1])

    for l in (0, 1):
        kap = materials.kappa_elements(cell_mesh, l)
        c_e = materials.c[l].on_elements(cell_mesh)
        q_e = materials.q_exchange[l].on_elements(cell_mesh)
        c_star[l] = np.sum(area * c_e)
        q_star[l] = -np.sum(area * q_e * m_sum_mean)

        grad_n = [grad_e(first.n1[l, j]) for j in (0, 1)]
        for i in (0, 1):
            for j in (0, 1):
                corr = np.einsum("ed,ed->e", kap[:, i, :], grad_n[j])
                kappa_star[l, i, j] = np.sum(area * (kap[:, i, j] + corr))

        flux_m1 = np.einsum("eid,ed->ei", kap, grad_e(first.m[0]))
        flux_m2 = np.einsum("eid,ed->ei", kap, grad_e(m_flux_source))
        for i in (0, 1):
            kbar1[l, i] = np.sum(
                area * (flux_m1[:, i] + q_e * mean_e(first.n1[1, i]))
            )
            kbar2[l, i] = np.sum(
                area * (flux_m2[:, i] + q_e * mean_e(first.n1[0, i]))
            )

    return EffectiveCoefficients(
        c_star=c_star, kappa_star=kappa_star, kbar1=kbar1, kbar2=kbar2,
        q_star=q_star,
    )


def kappa_star_energy(cell_mesh, materials, first):
    """Effective permeability via the energy form.

    Computes integral (e_i + grad N^i) . kappa (e_j + grad N^j) dY, which
    equals the direct formula through the cell problem's weak form and is
    symmetric by construction; used as an independent cross-check.
    """
    area = cell_mesh.element_areas
    grads = cell_mesh.basis_gradients
    els = cell_mesh.elements
    out = np.zeros((2, 2, 2))
    eye = np.eye(2)
    for l in (0, 1):
        kap = materials.kappa_elements(cell_mesh, l)
        fields = []
        for j in (0, 1):
            gn = np.einsum("ei,eid->ed", first.n1[l, j][els], grads)
            fields.append(gn + eye[j])
        for i in (0, 1):
            for j in (0, 1):
                integrand = np.einsum("ed,edf,ef->e", fields[i], kap, fields[j])
                out[l, i, j] = np.sum(area * integrand)
    return out


def write_csv(eff, path):
    """Coefficient report: one row per scalar component."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "continuum", "i", "j", "value"])
        for name, cont, i, j, value in eff.rows():
            writer.writerow([name, cont, i, j, repr(float(value))])
