"""Two-phase material data for the pair of interacting continua.

Each continuum l in {1, 2} carries a capacity c_l, an isotropic permeability
kappa_l and an exchange coefficient Q_l, all piecewise constant over the two
phases (matrix / inclusion) of the unit cell.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMaterialError
from .mesh import INCLUSION


@dataclass(frozen=True)
class PhasePair:
    """One coefficient's value in the matrix and in the inclusion phase."""

    matrix: float
    inclusion: float

    def as_array(self):
        return np.array([self.matrix, self.inclusion], dtype=float)

    def on_elements(self, mesh):
        """Per-element values following the mesh phase tags."""
        return np.where(mesh.elem_tag == INCLUSION, self.inclusion, self.matrix)


@dataclass(frozen=True)
class MaterialSpec:
    """Phase values of c_l, kappa_l, Q_l for both continua.

    Indexing is zero-based internally: continuum l in {0, 1} corresponds to
    the physical labels 1 and 2.
    """

    c: tuple  # (PhasePair, PhasePair)
    kappa: tuple
    q_exchange: tuple

    def __post_init__(self):
        for l in (0, 1):
            for name, pair, low_ok in (
                (f"c{l + 1}", self.c[l], False),
                (f"k{l + 1}", self.kappa[l], False),
                (f"Q{l + 1}", self.q_exchange[l], True),
            ):
                for phase in ("matrix", "inclusion"):
                    v = getattr(pair, phase)
                    if not np.isfinite(v):
                        raise InvalidMaterialError(f"material.{name}.{phase}: non-finite value")
                    if low_ok:
                        if v < 0:
                            raise InvalidMaterialError(
                                f"material.{name}.{phase}: exchange coefficient must be >= 0, got {v}"
                            )
                    elif v <= 0:
                        raise InvalidMaterialError(
                            f"material.{name}.{phase}: must be positive, got {v}"
                        )

    def kappa_tensors(self, l):
        """Per-phase 2x2 tensors kappa_l * I, shape (2, 2, 2)."""
        vals = self.kappa[l].as_array()
        return vals[:, None, None] * np.eye(2)[None, :, :]

    def kappa_elements(self, mesh, l):
        """Per-element 2x2 tensors on a tagged mesh, shape (ne, 2, 2)."""
        vals = self.kappa[l].on_elements(mesh)
        return vals[:, None, None] * np.eye(2)[None, :, :]

    def phase_bounds(self, l):
        """(min, max) of the two kappa_l phase values."""
        vals = self.kappa[l].as_array()
        return float(vals.min()), float(vals.max())

    def is_homogeneous(self):
        return all(
            pair.matrix == pair.inclusion
            for group in (self.c, self.kappa, self.q_exchange)
            for pair in group
        )

    def key(self):
        payload = ",".join(
            f"{pair.matrix!r}/{pair.inclusion!r}"
            for group in (self.c, self.kappa, self.q_exchange)
            for pair in group
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def table_example_porous():
    """Materials of the 2D porous validation case (matrix / inclusion)."""
    return MaterialSpec(
        c=(PhasePair(5.0, 2.0), PhasePair(4.5, 1.5)),
        kappa=(PhasePair(100.0, 1.0), PhasePair(50.0, 1.0)),
        q_exchange=(PhasePair(20.0, 0.25), PhasePair(20.0, 0.25)),
    )


def table_example_channel():
    """Materials of the 2D channel validation case."""
    return MaterialSpec(
        c=(PhasePair(50.0, 25.0), PhasePair(30.0, 10.0)),
        kappa=(PhasePair(100.0, 4.0), PhasePair(50.0, 5.0)),
        q_exchange=(PhasePair(30.0, 30.0), PhasePair(30.0, 30.0)),
    )


def homogeneous(c=1.0, kappa=1.0, q=0.0):
    """Both phases identical in both continua; handy for oracle tests."""
    return MaterialSpec(
        c=(PhasePair(c, c), PhasePair(c, c)),
        kappa=(PhasePair(kappa, kappa), PhasePair(kappa, kappa)),
        q_exchange=(PhasePair(q, q), PhasePair(q, q)),
    )
