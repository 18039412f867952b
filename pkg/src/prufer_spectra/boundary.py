"""Boundary conditions for block Jacobi chains and Hamiltonian systems.

A boundary condition is one of

* :class:`Dirichlet` -- the solution vanishes just outside the chain;
* :class:`Periodic` -- Bloch condition with quasi-momentum ``k``;
* :class:`General` -- any ``4L x 2L`` frame that is Lagrangian for the
  doubled form. Its block rows act on the boundary vector
  ``(phi_0, T_{N+1} phi_{N+1}, T_1 phi_1, phi_N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBoundaryError
from .symplectic import (
    checkerboard_sum_frame,
    is_lagrangian,
    lagrangian_defect,
    psi_k,
    right_dirichlet_frame,
)


@dataclass(frozen=True)
class Dirichlet:
    def frame(self, L):
        """Doubled frame ``(0; 1) ⊕̂ (0; 1)``."""
        R = right_dirichlet_frame(L)
        return checkerboard_sum_frame(R, R)

    def __str__(self):
        return "dirichlet"


@dataclass(frozen=True)
class Periodic:
    """Quasi-periodic condition ``phi_{n+N} = e^{ik} phi_n``; `k` is stored mod 2π."""

    k: float

    def __post_init__(self):
        if not np.isfinite(self.k):
            raise InvalidBoundaryError("k must be finite")
        object.__setattr__(self, "k", float(np.mod(self.k, 2 * np.pi)))

    def frame(self, L):
        return psi_k(self.k, L)

    def __str__(self):
        return f"periodic(k={self.k!r})"


@dataclass(frozen=True, eq=False)
class General:
    """Self-adjoint boundary condition given by an arbitrary Lagrangian frame."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != 2 * M.shape[1] or M.shape[1] % 2:
            raise InvalidBoundaryError(f"boundary frame must be 4L x 2L, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise InvalidBoundaryError("boundary frame has non-finite entries")
        if not is_lagrangian(M):
            raise InvalidBoundaryError(
                "boundary frame is not Lagrangian for the doubled form "
                f"(defect {lagrangian_defect(M):.3g}); the operator would not be self-adjoint"
            )
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def L(self):
        return self.matrix.shape[1] // 2

    def frame(self, L):
        if L != self.L:
            raise InvalidBoundaryError(f"boundary frame is for L={self.L}, model has L={L}")
        return self.matrix

    def __str__(self):
        return f"general(L={self.L})"


BoundaryCondition = Dirichlet | Periodic | General
