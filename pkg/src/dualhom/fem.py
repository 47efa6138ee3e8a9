"""P1 finite-element kernels on triangulated meshes.

All integrands are products of piecewise-constant coefficients and P1 basis
functions, so every element integral below is evaluated in closed form; there
is no quadrature error anywhere in the assembly.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidMaterialError, SolverFailure
from .mesh import locate_points


def _per_element_tensor(mesh, coeff):
    """Normalize a stiffness coefficient to per-element 2x2 tensors.

    Accepts a scalar, a (2,2) tensor, per-phase data of shape (2,) / (2,2,2),
    or per-element data of shape (ne,) / (ne,2,2).  Ambiguous shapes on
    two-element meshes are read as per-phase.
    """
    ne = mesh.num_elements
    coeff = np.asarray(coeff, dtype=float)
    eye = np.eye(2)
    if coeff.ndim == 0:
        tensors = coeff * eye[None, :, :] * np.ones((ne, 1, 1))
    elif coeff.shape == (2, 2):
        tensors = np.broadcast_to(coeff, (ne, 2, 2)).copy()
    elif coeff.shape == (2,):
        tensors = coeff[mesh.elem_tag][:, None, None] * eye
    elif coeff.shape == (2, 2, 2):
        tensors = coeff[mesh.elem_tag]
    elif coeff.shape == (ne,):
        tensors = coeff[:, None, None] * eye
    elif coeff.shape == (ne, 2, 2):
        tensors = coeff
    else:
        raise ValueError(f"cannot interpret stiffness coefficient of shape {coeff.shape}")
    scale = np.abs(tensors).max(axis=(1, 2))
    skew = np.abs(tensors - np.swapaxes(tensors, 1, 2)).max(axis=(1, 2))
    if np.any(skew > 1e-10 * np.maximum(scale, 1e-300)):
        raise InvalidMaterialError("permeability tensor is not symmetric")
    tr = tensors[:, 0, 0] + tensors[:, 1, 1]
    det = tensors[:, 0, 0] * tensors[:, 1, 1] - tensors[:, 0, 1] * tensors[:, 1, 0]
    lam_min = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0)))
    if np.any(lam_min <= 0):
        raise InvalidMaterialError("permeability tensor is not positive definite")
    return tensors


def _per_element_scalar(mesh, coeff, positive=True):
    ne = mesh.num_elements
    coeff = np.asarray(coeff, dtype=float)
    if coeff.ndim == 0:
        vals = np.full(ne, float(coeff))
    elif coeff.shape == (2,):
        vals = coeff[mesh.elem_tag]
    elif coeff.shape == (ne,):
        vals = coeff
    else:
        raise ValueError(f"cannot interpret scalar coefficient of shape {coeff.shape}")
    if positive and np.any(vals <= 0):
        raise InvalidMaterialError("coefficient must be strictly positive")
    return vals


def _scatter(mesh, local):
    """Accumulate (ne,3,3) local matrices into a global CSR matrix."""
    nn = mesh.num_nodes
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nn, nn))
    return mat.tocsr()


def assemble_stiffness(mesh, coeff):
    """Global matrix of ``integral kappa grad(phi_j) . grad(phi_i)``.

    `coeff` may be a scalar, a 2x2 tensor, per-phase values/tensors, or
    per-element values/tensors (see `_per_element_tensor`).
    """
    tensors = _per_element_tensor(mesh, coeff)
    grads = mesh.basis_gradients  # (ne,3,2)
    local = np.einsum("e,eid,edf,ejf->eij", mesh.element_areas, grads, tensors, grads)
    return _scatter(mesh, local)


def assemble_mass(mesh, coeff=1.0):
    """Global matrix of ``integral c phi_j phi_i`` for per-phase scalar c."""
    vals = _per_element_scalar(mesh, coeff, positive=True)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = (vals * mesh.element_areas)[:, None, None] * base
    return _scatter(mesh, local)


def assemble_weighted_mass(mesh, values):
    """Mass matrix with a nonnegative per-element weight (exchange terms)."""
    vals = _per_element_scalar(mesh, values, positive=False)
    if np.any(vals < 0):
        raise InvalidMaterialError("exchange weight must be nonnegative")
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = (vals * mesh.element_areas)[:, None, None] * base
    return _scatter(mesh, local)


def assemble_convection(mesh, vector):
    """Global matrix of ``integral (v . grad(phi_j)) phi_i`` for constant v."""
    v = np.asarray(vector, dtype=float)
    vg = mesh.basis_gradients @ v  # (ne,3)
    local = (mesh.element_areas / 3.0)[:, None, None] * np.broadcast_to(
        vg[:, None, :], (mesh.num_elements, 3, 3)
    )
    return _scatter(mesh, local)


def assemble_load(mesh, values):
    """Load vector ``integral f phi_i`` for per-element constant f."""
    vals = _per_element_scalar(mesh, values, positive=False)
    load = np.zeros(mesh.num_nodes)
    w = vals * mesh.element_areas / 3.0
    for k in range(3):
        np.add.at(load, mesh.elements[:, k], w)
    return load


def load_from_nodal(mesh, nodal):
    """Load vector for f given by its P1 interpolant (exact for P1 f)."""
    return assemble_mass(mesh, 1.0) @ np.asarray(nodal, dtype=float)


@dataclass
class SparseSystem:
    """A symmetric sparse operator with Dirichlet constraints attached."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: dict = field(default_factory=dict)  # node -> prescribed value

    def constrained_parts(self):
        nodes = np.fromiter(self.constrained.keys(), dtype=np.int64,
                            count=len(self.constrained))
        values = np.fromiter(self.constrained.values(), dtype=float,
                             count=len(self.constrained))
        return nodes, values

    def reduced(self):
        nodes, values = self.constrained_parts()
        return apply_dirichlet(self.matrix, self.rhs, nodes, values)


def apply_dirichlet(matrix, rhs, nodes, values):
    """Eliminate Dirichlet rows/columns, preserving symmetry.

    Known columns move to the right-hand side; constrained rows/columns become
    identity rows carrying the prescribed value.
    """
    n = matrix.shape[0]
    nodes = np.asarray(nodes, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    u_bc = np.zeros(n)
    u_bc[nodes] = values
    new_rhs = rhs - matrix @ u_bc
    new_rhs[nodes] = values
    keep = np.ones(n)
    keep[nodes] = 0.0
    pin = np.zeros(n)
    pin[nodes] = 1.0
    proj = sp.diags(keep)
    reduced = (proj @ matrix @ proj + sp.diags(pin)).tocsr()
    return reduced, new_rhs


def eliminate_rows_cols(matrix, nodes):
    """Zero the given rows/columns and put 1 on their diagonal."""
    n = matrix.shape[0]
    keep = np.ones(n)
    keep[np.asarray(nodes, dtype=np.int64)] = 0.0
    pin = 1.0 - keep
    proj = sp.diags(keep)
    return (proj @ matrix @ proj + sp.diags(pin)).tocsr()


def _pcg(matrix, rhs, rel_tol, maxiter):
    """Diagonally preconditioned conjugate gradients."""
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise SolverFailure("matrix diagonal is not positive; not SPD")
    inv_diag = 1.0 / diag
    x = np.zeros_like(rhs)
    r = rhs.copy()
    b_norm = np.linalg.norm(rhs)
    if b_norm == 0.0:
        return x
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        ap = matrix @ p
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= rel_tol * b_norm:
            return x
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    achieved = np.linalg.norm(rhs - matrix @ x) / b_norm
    raise SolverFailure(
        f"PCG did not reach rel_tol={rel_tol:g} within {maxiter} iterations "
        f"(achieved {achieved:.3e})",
        achieved=achieved,
    )


def solve_spd(system, rel_tol=1e-10, method="pcg"):
    """Solve an SPD system to a relative-residual contract.

    method="pcg" runs diagonally preconditioned CG with an iteration cap of
    20 * n; method="direct" substitutes a sparse LU behind the same residual
    contract.
    """
    if not (0.0 < rel_tol <= 1e-4):
        raise ValueError(f"rel_tol must lie in (0, 1e-4], got {rel_tol}")
    matrix, rhs = system.reduced()
    b_norm = np.linalg.norm(rhs)
    if b_norm == 0.0:
        return np.zeros_like(rhs)
    if method == "direct":
        x = spla.splu(matrix.tocsc()).solve(rhs)
    else:
        x = _pcg(matrix, rhs, rel_tol, maxiter=20 * matrix.shape[0])
    achieved = np.linalg.norm(rhs - matrix @ x) / b_norm
    if achieved > rel_tol:
        raise SolverFailure(
            f"solver residual {achieved:.3e} exceeds rel_tol {rel_tol:g}",
            achieved=achieved,
        )
    return x


class DirectSolver:
    """Factorize once, solve many right-hand sides under a residual contract."""

    def __init__(self, matrix, rel_tol=1e-10):
        self.matrix = matrix.tocsr()
        self.rel_tol = rel_tol
        self._lu = spla.splu(matrix.tocsc())

    def solve(self, rhs):
        x = self._lu.solve(rhs)
        b_norm = np.linalg.norm(rhs)
        if b_norm > 0.0:
            achieved = np.linalg.norm(rhs - self.matrix @ x) / b_norm
            if achieved > self.rel_tol:
                raise SolverFailure(
                    f"direct solve residual {achieved:.3e} exceeds {self.rel_tol:g}",
                    achieved=achieved,
                )
        return x


def recover_gradient(mesh, values):
    """Area-weighted element-average gradient at every node, shape (nn, 2)."""
    values = np.asarray(values, dtype=float)
    grads = mesh.basis_gradients
    ge = np.einsum("ei,eid->ed", values[mesh.elements], grads)
    num = np.zeros((mesh.num_nodes, 2))
    den = np.zeros(mesh.num_nodes)
    w = mesh.element_areas
    for k in range(3):
        np.add.at(num, mesh.elements[:, k], w[:, None] * ge)
        np.add.at(den, mesh.elements[:, k], w)
    return num / den[:, None]


def recover_hessian(mesh, values):
    """Double element-average recovery; hess[:, i, j] ~ d^2 u / dx_i dx_j."""
    grad = recover_gradient(mesh, values)
    hess = np.empty((mesh.num_nodes, 2, 2))
    for i in range(2):
        hess[:, i, :] = recover_gradient(mesh, grad[:, i])
    return hess


def interpolation_matrix(mesh, pts):
    """Sparse (npts, nn) operator evaluating P1 fields at the given points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    elems, bary = locate_points(mesh, pts)
    npts = pts.shape[0]
    rows = np.repeat(np.arange(npts), 3)
    cols = mesh.elements[elems].ravel()
    vals = bary.ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(npts, mesh.num_nodes))


def interpolate(mesh, values, p):
    """Barycentric P1 interpolation of a nodal field at a point."""
    elems, bary = locate_points(mesh, np.asarray(p, dtype=float)[None, :])
    verts = mesh.elements[elems[0]]
    return float(np.asarray(values)[verts] @ bary[0])
