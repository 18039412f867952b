"""Hermitian symplectic geometry: Lagrangian frames and their unitary charts.

Conventions
-----------
* ``J(L) = [[0, -1], [1, 0]]`` in ``L x L`` blocks.
* A frame ``Phi = (a; b)`` is a ``2L x L`` matrix; it is Lagrangian when it
  has rank ``L`` and ``Phi* J Phi = 0``.
* The checkerboard sum interleaves *blocks*: block rows/columns ``0, 2`` of
  the ``4L`` result belong to the first summand, blocks ``1, 3`` to the
  second. With this layout the doubled form ``J ⊕̂ J`` is exactly ``J(2L)``,
  so every function below works unchanged at half-dimension ``2L``.

Most functions accept stacks of matrices (leading batch axes) so energy
scans can be evaluated in one call.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation, NumericalDegeneracyError
from .linalg import (
    RANK_TOL,
    as_matrix,
    dagger,
    kernel_dimension,
    rank,
)

LAGRANGIAN_TOL = 1e-10
SYMPLECTIC_TOL = 1e-10
LORENTZ_TOL = 1e-10


def J(L):
    """Standard symplectic form of half-dimension `L`."""
    I = np.eye(L)
    Z = np.zeros((L, L))
    return np.block([[Z, -I], [I, Z]]).astype(complex)


def J_hat(L):
    """Doubled form ``J ⊕̂ J``; equal to ``J(2L)`` in the block layout used here."""
    return checkerboard_sum_matrix(J(L), J(L))


def cayley(L):
    """Cayley transform ``C = [[1, -i], [1, i]] / sqrt(2)``."""
    I = np.eye(L)
    return np.block([[I, -1j * I], [I, 1j * I]]) / np.sqrt(2)


def half_dim(M):
    n = np.shape(M)[-2]
    if n % 2:
        raise ContractViolation(f"expected an even leading dimension, got {n}")
    return n // 2


def _split(M):
    L = half_dim(M)
    return M[..., :L, :L], M[..., :L, L:], M[..., L:, :L], M[..., L:, L:]


# ---------------------------------------------------------------- frames


def lagrangian_defect(frame):
    L = half_dim(frame)
    return float(np.max(np.abs(dagger(frame) @ J(L) @ frame), initial=0.0))


def is_lagrangian(frame, tol=None):
    """True iff `frame` (``2L x L``) has rank ``L`` and ``Phi* J Phi`` vanishes.

    The default tolerance is ``1e-10 * max|Phi|**2``.
    """
    Phi = np.asarray(frame, dtype=complex)
    if Phi.ndim != 2 or Phi.shape[0] != 2 * Phi.shape[1]:
        return False
    L = Phi.shape[1]
    if tol is None:
        tol = LAGRANGIAN_TOL * max(1.0, float(np.max(np.abs(Phi), initial=0.0)) ** 2)
    return rank(Phi) == L and lagrangian_defect(Phi) <= tol


def check_lagrangian(frame, name="frame", tol=None):
    Phi = as_matrix(frame, name)
    if Phi.shape[0] != 2 * Phi.shape[1]:
        raise ContractViolation(f"{name} must have shape 2L x L, got {Phi.shape}")
    if not is_lagrangian(Phi, tol):
        raise ContractViolation(
            f"{name} is not Lagrangian (rank {rank(Phi)}, "
            f"defect {lagrangian_defect(Phi):.3g})"
        )
    return Phi


def stereographic(frame):
    """The unitary ``(a - ib)(a + ib)^-1`` attached to the plane of ``(a; b)``.

    Independent of the representative: ``stereographic(Phi @ c)`` equals
    ``stereographic(Phi)`` for invertible `c`.
    """
    Phi = np.asarray(frame, dtype=complex)
    L = Phi.shape[-1]
    a, b = Phi[..., :L, :], Phi[..., L:, :]
    alpha = a - 1j * b
    beta = a + 1j * b
    # U beta = alpha  <=>  beta^T U^T = alpha^T
    try:
        Ut = np.linalg.solve(np.swapaxes(beta, -1, -2), np.swapaxes(alpha, -1, -2))
    except np.linalg.LinAlgError as exc:
        raise ContractViolation("a + ib is singular; frame is not Lagrangian") from exc
    return np.swapaxes(Ut, -1, -2)


def stereographic_inverse(U):
    """Frame ``((U + 1); i(U - 1))`` whose plane maps to `U`."""
    U = np.asarray(U, dtype=complex)
    I = np.eye(U.shape[-1])
    return np.concatenate([U + I, 1j * (U - I)], axis=-2)


def plane_frame(U):
    """Orthonormal frame for the plane of `U` (canonicalized inverse)."""
    Q, _ = np.linalg.qr(stereographic_inverse(U))
    return Q


def intersection_dimension(frame, other, tol=RANK_TOL):
    """Dimension of the intersection of two Lagrangian planes.

    Three routes are computed and must agree: ``dim ker(Phi* J Psi)``,
    ``2L - rank([Phi Psi])`` and ``dim ker(V* U - 1)`` with ``U, V`` the
    stereographic images.

    Raises
    ------
    NumericalDegeneracyError
        If the routes disagree.
    """
    Phi = np.asarray(frame, dtype=complex)
    Psi = np.asarray(other, dtype=complex)
    if Phi.shape != Psi.shape:
        raise ContractViolation(f"frame shapes differ: {Phi.shape} vs {Psi.shape}")
    L = Phi.shape[1]
    # orthonormal representatives make the three rank problems comparably scaled
    Phi = np.linalg.qr(Phi)[0]
    Psi = np.linalg.qr(Psi)[0]
    by_form = kernel_dimension(dagger(Phi) @ J(L) @ Psi, tol, scale=1.0)
    by_span = 2 * L - rank(np.hstack([Phi, Psi]), tol, scale=1.0)
    U, V = stereographic(Phi), stereographic(Psi)
    by_unitary = kernel_dimension(dagger(V) @ U - np.eye(L), tol, scale=1.0)
    if not by_form == by_span == by_unitary:
        raise NumericalDegeneracyError(
            "intersection dimension routes disagree",
            {
                "kernel_of_form": by_form,
                "stacked_rank": by_span,
                "unitary_kernel": by_unitary,
                "singular_values_form": np.linalg.svd(
                    dagger(Phi) @ J(L) @ Psi, compute_uv=False
                ).tolist(),
            },
        )
    return by_form


# ----------------------------------------------------- symplectic matrices


def symplectic_defect(T):
    L = half_dim(T)
    return float(np.max(np.abs(dagger(T) @ J(L) @ T - J(L)), initial=0.0))


def is_hermitian_symplectic(T, tol=SYMPLECTIC_TOL):
    """``T* J T = J`` within ``tol * ||T||_2**2``."""
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] % 2:
        return False
    scale = max(1.0, np.linalg.norm(T, 2) ** 2)
    return symplectic_defect(T) <= tol * scale


def check_hermitian_symplectic(T, name="matrix", tol=SYMPLECTIC_TOL):
    M = as_matrix(T, name)
    if not is_hermitian_symplectic(M, tol):
        raise ContractViolation(
            f"{name} is not hermitian symplectic (defect {symplectic_defect(M):.3g})"
        )
    return M


def cayley_conjugate(T):
    """``C T C*`` in closed form; maps HS(2L) onto the Lorentz group U(L, L)."""
    A, B, C, D = _split(np.asarray(T, dtype=complex))
    top = np.concatenate([(A + D) + 1j * (B - C), (A - D) - 1j * (B + C)], axis=-1)
    bottom = np.concatenate([(A - D) + 1j * (B + C), (A + D) - 1j * (B - C)], axis=-1)
    return 0.5 * np.concatenate([top, bottom], axis=-2)


def lorentz_blocks(G):
    """Named blocks ``(A, B, C, D)`` of a ``2L x 2L`` matrix."""
    return _split(np.asarray(G, dtype=complex))


def lorentz_defect(G):
    """Largest violation of ``A*A - C*C = 1``, ``D*D - B*B = 1``, ``A*B = C*D``."""
    A, B, C, D = lorentz_blocks(G)
    I = np.eye(A.shape[-1])
    return max(
        float(np.max(np.abs(dagger(A) @ A - dagger(C) @ C - I))),
        float(np.max(np.abs(dagger(D) @ D - dagger(B) @ B - I))),
        float(np.max(np.abs(dagger(A) @ B - dagger(C) @ D))),
    )


def is_lorentz(G, tol=LORENTZ_TOL):
    G = np.asarray(G, dtype=complex)
    scale = max(1.0, np.linalg.norm(G, 2) ** 2)
    return lorentz_defect(G) <= tol * scale


def moebius(G, U):
    """Matrix Möbius action ``(AU + B)(CU + D)^-1`` of ``G = [[A, B], [C, D]]``."""
    A, B, C, D = lorentz_blocks(G)
    U = np.asarray(U, dtype=complex)
    num = A @ U + B
    den = C @ U + D
    try:
        Xt = np.linalg.solve(np.swapaxes(den, -1, -2), np.swapaxes(num, -1, -2))
    except np.linalg.LinAlgError as exc:
        raise ContractViolation("CU + D is singular; G is not in U(L, L)") from exc
    return np.swapaxes(Xt, -1, -2)


# ------------------------------------------------------- checkerboard sums


def checkerboard_sum_matrix(M, M2):
    """``M ⊕̂ M2`` for ``2L x 2L`` inputs (stacks allowed)."""
    M = np.asarray(M, dtype=complex)
    M2 = np.asarray(M2, dtype=complex)
    M, M2 = np.broadcast_arrays(M, M2)
    if M.shape[-1] != M.shape[-2]:
        raise ContractViolation("checkerboard sum needs square inputs")
    A, B, C, D = _split(M)
    A2, B2, C2, D2 = _split(M2)
    L = A.shape[-1]
    out = np.zeros(M.shape[:-2] + (4 * L, 4 * L), dtype=complex)
    s = [slice(i * L, (i + 1) * L) for i in range(4)]
    out[..., s[0], s[0]] = A
    out[..., s[0], s[2]] = B
    out[..., s[2], s[0]] = C
    out[..., s[2], s[2]] = D
    out[..., s[1], s[1]] = A2
    out[..., s[1], s[3]] = B2
    out[..., s[3], s[1]] = C2
    out[..., s[3], s[3]] = D2
    return out


def checkerboard_sum_frame(frame, frame2):
    """``(a; b) ⊕̂ (a2; b2) = [[a, 0], [0, a2], [b, 0], [0, b2]]``."""
    Phi = np.asarray(frame, dtype=complex)
    Phi2 = np.asarray(frame2, dtype=complex)
    Phi, Phi2 = np.broadcast_arrays(Phi, Phi2)
    L = Phi.shape[-1]
    if Phi.shape[-2] != 2 * L:
        raise ContractViolation("frames must have shape 2L x L")
    out = np.zeros(Phi.shape[:-2] + (4 * L, 2 * L), dtype=complex)
    out[..., 0:L, 0:L] = Phi[..., :L, :]
    out[..., L : 2 * L, L:] = Phi2[..., :L, :]
    out[..., 2 * L : 3 * L, 0:L] = Phi[..., L:, :]
    out[..., 3 * L :, L:] = Phi2[..., L:, :]
    return out


def psi_k(k, L):
    """The ``4L x 2L`` frame encoding the quasi-periodic condition with phase `k`.

    Block rows are ``(0, 1)``, ``(e^{ik}, 0)``, ``(1, 0)``, ``(0, e^{ik})``;
    ``k = 0`` gives the base frame used for graph embeddings.
    """
    I = np.eye(L)
    Z = np.zeros((L, L))
    w = np.exp(1j * k)
    return np.block([[Z, I], [w * I, Z], [I, Z], [Z, w * I]]).astype(complex)


def psi_0(L):
    return psi_k(0.0, L)


def psi_k_unitary(k, L):
    """Closed form of ``stereographic(psi_k(k, L))``."""
    I = np.eye(L)
    Z = np.zeros((L, L))
    return np.block([[Z, -1j * np.exp(-1j * k) * I], [-1j * np.exp(1j * k) * I, Z]])


def dirichlet_frame(L):
    """``(1; 0)``: the left-edge Dirichlet frame of the discrete chain."""
    return np.vstack([np.eye(L), np.zeros((L, L))]).astype(complex)


def right_dirichlet_frame(L):
    """``(0; 1)``; its stereographic image is ``-1``."""
    return np.vstack([np.zeros((L, L)), np.eye(L)]).astype(complex)


# ---------------------------------------------------------- Û embedding


def embed_unitary(T):
    """Unitary ``Û`` attached to ``T`` in HS(2L).

    With ``[[A, B], [C, D]] = cayley_conjugate(T)``::

        Û = [[A - B D^-1 C, i B D^-1],
             [i D^-1 C,     D^-1    ]]

    Both diagonal blocks of the result are invertible.
    """
    A, B, C, D = lorentz_blocks(cayley_conjugate(T))
    Dinv = np.linalg.inv(D)
    top = np.concatenate([A - B @ Dinv @ C, 1j * B @ Dinv], axis=-1)
    bottom = np.concatenate([1j * Dinv @ C, Dinv], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def twist(k, L):
    """``diag(e^{-ik}, e^{ik})`` in ``L x L`` blocks."""
    return np.diag(np.concatenate([np.full(L, np.exp(-1j * k)), np.full(L, np.exp(1j * k))]))


def u_hat_k(U_hat, k):
    """``diag(e^{-ik}, e^{ik}) Û``; its eigenvalue ``1`` detects ``e^{ik}`` in the spectrum of T."""
    U_hat = np.asarray(U_hat, dtype=complex)
    return twist(k, half_dim(U_hat)) @ U_hat


def lorentz_from_embedding(U_hat):
    """Invert :func:`embed_unitary` on its image.

    For ``U_hat = [[alpha, beta], [gamma, delta]]`` with invertible corners,
    returns ``(A, B, C, D)`` with ``D = delta^-1``, ``B = -i beta delta^-1``,
    ``C = -i delta^-1 gamma`` and ``A = alpha - beta delta^-1 gamma``.
    """
    alpha, beta, gamma, delta = lorentz_blocks(U_hat)
    Dinv = np.linalg.inv(delta)
    return alpha - beta @ Dinv @ gamma, -1j * beta @ Dinv, -1j * Dinv @ gamma, Dinv


def graph_frame(T):
    """``(1 ⊕̂ T) psi_0``: the Lagrangian graph frame of `T` in ``C^4L``."""
    T = np.asarray(T, dtype=complex)
    L = half_dim(T)
    I = np.broadcast_to(np.eye(2 * L, dtype=complex), T.shape)
    return checkerboard_sum_matrix(I, T) @ psi_0(L)
