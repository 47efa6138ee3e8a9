"""Structured triangulations of the unit square with two-phase element tags.

All domains (macro domain, unit cell, fine periodic domain) are meshed the
same way: an n-by-n grid of squares, each split into two triangles along the
bottom-left/top-right diagonal.  Elements are tagged matrix/inclusion by
centroid membership, so interfaces are staircase approximations that converge
as n grows.
"""

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, OutOfDomainError

MATRIX = 0
INCLUSION = 1

_GEOM_TOL = 1e-12


@dataclass(frozen=True)
class InclusionSpec:
    """Geometry of the inclusion phase inside the unit cell.

    kind:
      - "disk": disk of given radius centered at `center`; must lie strictly
        inside the cell.
      - "axis_cross": union of a horizontal and a vertical band through the
        cell center, each of half-width `half_width` (boundary-touching).
      - "stripes": one band of total width `width` centered at 0.5 along
        axis `direction` (0 = band in y1, i.e. stripe running along y2).
    """

    kind: str = "disk"
    center: tuple = (0.5, 0.5)
    radius: float = 0.25
    half_width: float = 0.125
    direction: int = 0
    width: float = 0.25

    def __post_init__(self):
        if self.kind not in ("disk", "axis_cross", "stripes"):
            raise ConfigError(f"geometry.kind: unknown inclusion kind {self.kind!r}")
        if self.kind == "disk":
            cx, cy = self.center
            margin = min(cx, 1.0 - cx, cy, 1.0 - cy)
            if not (0 < self.radius < margin):
                raise ConfigError(
                    "geometry.radius: disk must lie strictly inside the unit cell "
                    f"(radius {self.radius}, margin {margin})"
                )
        elif self.kind == "axis_cross":
            if not (0 < self.half_width < 0.5):
                raise ConfigError("geometry.half_width: must be in (0, 0.5)")
        elif self.kind == "stripes":
            if self.direction not in (0, 1):
                raise ConfigError("geometry.direction: must be 0 or 1")
            if not (0 < self.width < 1):
                raise ConfigError("geometry.width: must be in (0, 1)")

    def contains(self, pts):
        """Boolean inclusion-membership for an array of points (..., 2)."""
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        if self.kind == "disk":
            cx, cy = self.center
            return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2
        if self.kind == "axis_cross":
            return (np.abs(x - 0.5) <= self.half_width) | (
                np.abs(y - 0.5) <= self.half_width
            )
        band = pts[..., self.direction]
        return np.abs(band - 0.5) <= 0.5 * self.width

    def key(self):
        """Stable tuple used in cache keys."""
        if self.kind == "disk":
            return ("disk", self.center[0], self.center[1], self.radius)
        if self.kind == "axis_cross":
            return ("axis_cross", self.half_width)
        return ("stripes", self.direction, self.width)


@dataclass(frozen=True)
class Mesh:
    """Conforming P1 triangulation of the unit square.

    nodes: (nn, 2) coordinates; elements: (ne, 3) vertex indices with positive
    orientation; elem_tag: per-element phase (MATRIX/INCLUSION);
    boundary_nodes: indices of nodes on the square boundary; n: subdivisions
    per side.
    """

    nodes: np.ndarray
    elements: np.ndarray
    elem_tag: np.ndarray
    boundary_nodes: np.ndarray
    n: int
    split: str = "uniform"  # "uniform" | "alternating" cell diagonals

    @property
    def num_nodes(self):
        return self.nodes.shape[0]

    @property
    def num_elements(self):
        return self.elements.shape[0]

    @cached_property
    def element_areas(self):
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def basis_gradients(self):
        """(ne, 3, 2) constant gradients of the three P1 basis functions."""
        p = self.nodes[self.elements]
        det = 2.0 * self.element_areas
        b = np.stack(
            [
                p[:, 1, 1] - p[:, 2, 1],
                p[:, 2, 1] - p[:, 0, 1],
                p[:, 0, 1] - p[:, 1, 1],
            ],
            axis=1,
        )
        c = np.stack(
            [
                p[:, 2, 0] - p[:, 1, 0],
                p[:, 0, 0] - p[:, 2, 0],
                p[:, 1, 0] - p[:, 0, 0],
            ],
            axis=1,
        )
        return np.stack([b, c], axis=2) / det[:, None, None]

    @cached_property
    def centroids(self):
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def interior_nodes(self):
        mask = np.ones(self.num_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)


def build_unit_square_mesh(n, spec=None, split="uniform"):
    """Triangulate [0,1]^2 with n subdivisions per side.

    Produces (n+1)^2 nodes and 2*n^2 positively oriented triangles; by default
    every square cell is split along its bottom-left/top-right diagonal.
    split="alternating" flips the diagonal on odd-parity cells, which makes
    the triangulation mirror-symmetric for even n (used by symmetry checks).
    Elements are tagged INCLUSION when their centroid lies in `spec` (None
    means all matrix).
    """
    if n < 1:
        raise ConfigError(f"mesh subdivisions must be >= 1, got {n}")
    if split not in ("uniform", "alternating"):
        raise ConfigError(f"unknown mesh split {split!r}")
    side = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(side, side)  # row-major: node = iy*(n+1) + ix
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    ix, iy = np.meshgrid(np.arange(n), np.arange(n))
    ix, iy = ix.ravel(), iy.ravel()
    v00 = iy * (n + 1) + ix
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    first = np.column_stack([v00, v10, v11])
    second = np.column_stack([v00, v11, v01])
    if split == "alternating":
        odd = ((ix + iy) % 2).astype(bool)
        first[odd] = np.column_stack([v00, v10, v01])[odd]
        second[odd] = np.column_stack([v10, v11, v01])[odd]
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = first
    elements[1::2] = second

    centroids = nodes[elements].mean(axis=1)
    if spec is None:
        tag = np.zeros(elements.shape[0], dtype=np.uint8)
    else:
        tag = spec.contains(centroids).astype(np.uint8)

    on_edge = (
        (np.abs(nodes[:, 0]) < _GEOM_TOL)
        | (np.abs(nodes[:, 0] - 1.0) < _GEOM_TOL)
        | (np.abs(nodes[:, 1]) < _GEOM_TOL)
        | (np.abs(nodes[:, 1] - 1.0) < _GEOM_TOL)
    )
    boundary = np.flatnonzero(on_edge)
    return Mesh(nodes=nodes, elements=elements, elem_tag=tag,
                boundary_nodes=boundary, n=n, split=split)


def build_periodic_fine_mesh(n_fine, eps, spec):
    """Fine mesh of the macro domain with eps-periodic phase tags.

    Each element is tagged by the phase of its centroid's wrapped unit-cell
    coordinate, so n_fine must be divisible by 1/eps for the pattern to repeat
    identically in every period.
    """
    k = int(round(1.0 / eps))
    if abs(k * eps - 1.0) > 1e-9 or k < 2:
        raise ConfigError(f"eps must equal 1/k for integer k >= 2, got {eps}")
    if n_fine % k != 0:
        raise ConfigError(
            f"mesh.n_fine: {n_fine} is not divisible by 1/eps = {k}"
        )
    mesh = build_unit_square_mesh(n_fine, spec=None)
    if spec is None:
        return mesh
    wrapped = wrap_to_cell(mesh.centroids, eps)
    tag = spec.contains(wrapped).astype(np.uint8)
    return dataclasses.replace(mesh, elem_tag=tag)


def wrap_to_cell(x, eps):
    """Map macro coordinates to local unit-cell coordinates frac(x/eps).

    Componentwise fractional part; results lie in [0, 1).  Exact for
    coordinates that are integer multiples of eps (up to float division).
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    s = np.asarray(x, dtype=float) / eps
    return s - np.floor(s)


def locate_points(mesh, pts, tol=1e-12):
    """Vectorized point location on the structured mesh.

    Returns (elem_idx, bary) with bary of shape (npts, 3).  Cell-index
    arithmetic makes this O(1) per point; ties on shared edges/diagonals
    resolve to the lower-indexed element.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if np.any(pts < -tol) or np.any(pts > 1.0 + tol):
        bad = pts[np.any((pts < -tol) | (pts > 1.0 + tol), axis=1)][0]
        raise OutOfDomainError(f"point {tuple(bad)} outside [0,1]^2")
    pts = np.clip(pts, 0.0, 1.0)
    n = mesh.n

    def cell_and_local(coord):
        s = coord * n
        idx = np.floor(s).astype(np.int64)
        # exact hit on a grid line belongs to the lower cell (edge tie rule)
        on_line = (s == idx) & (idx > 0)
        idx = np.where(on_line, idx - 1, idx)
        idx = np.minimum(idx, n - 1)
        return idx, s - idx

    ix, xi = cell_and_local(pts[:, 0])
    iy, eta = cell_and_local(pts[:, 1])
    cell = iy * n + ix
    bary = np.empty((pts.shape[0], 3))
    if mesh.split == "alternating":
        flipped = ((ix + iy) % 2).astype(bool)
    else:
        flipped = np.zeros(len(cell), dtype=bool)
    # standard cells: diagonal v00-v11
    #   first (v00,v10,v11): (1-xi, xi-eta, eta); second (v00,v11,v01): (1-eta, xi, eta-xi)
    # flipped cells: diagonal v10-v01
    #   first (v00,v10,v01): (1-xi-eta, xi, eta); second (v10,v11,v01): (1-eta, xi+eta-1, 1-xi)
    in_first = np.where(flipped, xi + eta <= 1.0, xi >= eta)
    elem = 2 * cell + np.where(in_first, 0, 1)
    b_std = np.stack([
        np.where(in_first, 1.0 - xi, 1.0 - eta),
        np.where(in_first, xi - eta, xi),
        np.where(in_first, eta, eta - xi),
    ], axis=1)
    b_flip = np.stack([
        np.where(in_first, 1.0 - xi - eta, 1.0 - eta),
        np.where(in_first, xi, xi + eta - 1.0),
        np.where(in_first, eta, 1.0 - xi),
    ], axis=1)
    bary[:] = np.where(flipped[:, None], b_flip, b_std)
    return elem, bary


def locate_point(mesh, p):
    """Locate a single point; returns (element index, barycentric coords)."""
    elem, bary = locate_points(mesh, np.asarray(p, dtype=float)[None, :])
    return int(elem[0]), bary[0]


def tagged_areas(mesh):
    """(matrix area, inclusion area) from the element tags."""
    areas = mesh.element_areas
    inc = float(areas[mesh.elem_tag == INCLUSION].sum())
    mat = float(areas[mesh.elem_tag == MATRIX].sum())
    return mat, inc
