"""Block Jacobi chains, transfer matrices and matrix Prüfer unitaries.

The chain acts on ``phi = (phi_1, ..., phi_N)`` with ``phi_n`` in ``C^L``::

    (H phi)_n = T_{n+1} phi_{n+1} + V_n phi_n + T_n^* phi_{n-1},

``T_{N+1} = T_1`` and the boundary condition fixes ``phi_0`` and
``phi_{N+1}``. One transfer step maps ``(T_n phi_n; phi_{n-1})`` to
``(T_{n+1} phi_{n+1}; phi_n)``.

Every energy-dependent function accepts a scalar or an array of energies
and returns results stacked along the leading axes.

Index map for boundary data
---------------------------
Propagating the graph frame ``(1 ⊕̂ T(N, 1)) psi_0`` yields, for the solution
with ``(T_1 phi_1; phi_0) = x``, the four ``L``-blocks::

    block 0: phi_0
    block 1: T_{N+1} phi_{N+1}
    block 2: T_1 phi_1
    block 3: phi_N

This is already the order in which boundary frames are written, so the
permutation between propagation layout and boundary layout is the
identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import Dirichlet, General, Periodic
from .errors import (
    ConditioningError,
    ContractViolation,
    InvalidBoundaryError,
    RouteDisagreementError,
)
from .linalg import (
    HERMITIAN_TOL,
    RANK_TOL,
    check_hermitian,
    dagger,
    kernel_dimension,
    unitarity_defect,
)
from .symplectic import (
    cayley_conjugate,
    checkerboard_sum_matrix,
    embed_unitary,
    intersection_dimension,
    psi_k_unitary,
    stereographic,
    u_hat_k,
)

INVERTIBILITY_RATIO = 1e-10
CONDITIONING_RATIO = 1e-8
ROUTE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BlockJacobiModel:
    """Block Jacobi chain with ``N`` sites and fibre dimension ``L``.

    Parameters
    ----------
    V : array_like, shape (N, L, L)
        Hermitian on-site blocks.
    T : array_like, shape (N, L, L)
        Invertible hopping blocks; ``T[n-1]`` couples sites ``n-1`` and ``n``
        and ``T[0]`` also closes the ring.
    """

    V: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        V = np.array(self.V, dtype=complex)
        T = np.array(self.T, dtype=complex)
        if V.ndim == 1:
            V = V[:, None, None]
        if T.ndim == 1:
            T = T[:, None, None]
        if V.ndim != 3 or V.shape[1] != V.shape[2]:
            raise ContractViolation(f"V must have shape (N, L, L), got {V.shape}")
        if T.shape != V.shape:
            raise ContractViolation(f"T must have shape {V.shape}, got {T.shape}")
        if V.shape[0] < 1 or V.shape[1] < 1:
            raise ContractViolation("model needs N >= 1 and L >= 1")
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(T))):
            raise ContractViolation("model blocks must be finite")
        for n, Vn in enumerate(V, start=1):
            check_hermitian(Vn, HERMITIAN_TOL, name=f"V_{n}")
        V = 0.5 * (V + dagger(V))
        s = np.linalg.svd(T, compute_uv=False)
        for n, sn in enumerate(s, start=1):
            if sn[-1] <= INVERTIBILITY_RATIO * sn[0] or sn[0] == 0:
                ratio = sn[-1] / sn[0] if sn[0] > 0 else 0.0
                raise ContractViolation(
                    f"T_{n} is not invertible (sigma_min/sigma_max = {ratio:.3g})"
                )
        V.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "T", T)
        # derived, energy-independent data; safe to share since the model is frozen
        object.__setattr__(self, "_cache", {})

    @property
    def N(self):
        return self.V.shape[0]

    @property
    def L(self):
        return self.V.shape[1]

    @property
    def size(self):
        return self.N * self.L

    def check_conditioning(self, ratio=CONDITIONING_RATIO):
        """Raise :class:`ConditioningError` if some ``T_n`` is nearly singular."""
        s = np.linalg.svd(self.T, compute_uv=False)
        bad = np.nonzero(s[:, -1] < ratio * s[:, 0])[0]
        if bad.size:
            n = int(bad[0]) + 1
            raise ConditioningError(
                f"T_{n} is too close to singular "
                f"(sigma_min/sigma_max = {s[n - 1, -1] / s[n - 1, 0]:.3g} < {ratio:g})"
            )


def free_chain(N, L=1, v=0.0, t=1.0):
    """Chain with ``V_n = v 1`` and ``T_n = t 1``."""
    I = np.eye(L)
    return BlockJacobiModel(np.broadcast_to(v * I, (N, L, L)), np.broadcast_to(t * I, (N, L, L)))


def _haar_unitary(rng, L):
    Z = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_model(rng, N, L, scale=2.0, max_condition=100.0, real=False):
    """Random model with ``||V_n||, ||T_n|| <= scale`` and ``cond(T_n) <= max_condition``."""
    V = np.empty((N, L, L), dtype=complex)
    T = np.empty((N, L, L), dtype=complex)
    for n in range(N):
        if real:
            H = rng.normal(size=(L, L))
        else:
            H = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
        H = H + dagger(H)
        V[n] = scale * rng.uniform(0.2, 1.0) * H / np.linalg.norm(H, 2)
        smax = scale * rng.uniform(0.3, 1.0)
        sv = smax * np.exp(-rng.uniform(0, np.log(max_condition), size=L))
        sv[0] = smax
        if real:
            A = np.linalg.qr(rng.normal(size=(L, L)))[0]
            B = np.linalg.qr(rng.normal(size=(L, L)))[0]
        else:
            A, B = _haar_unitary(rng, L), _haar_unitary(rng, L)
        T[n] = A @ np.diag(sv) @ dagger(B)
    return BlockJacobiModel(V, T)


def assemble_dense(model, omega=0.0):
    """The ``NL x NL`` matrix of the chain with corner coupling `omega`.

    ``omega = 0`` gives the Dirichlet matrix, ``|omega| = 1`` the Bloch
    matrix with ``omega = e^{ik}``; the corner blocks are
    ``conj(omega) T_1^*`` (top right) and ``omega T_1`` (bottom left).
    """
    omega = complex(omega)
    if not (abs(omega) == 0.0 or abs(abs(omega) - 1.0) <= 1e-12):
        raise InvalidBoundaryError(f"|omega| must be 0 or 1, got {abs(omega):.6g}")
    N, L = model.N, model.L
    H = np.zeros((N * L, N * L), dtype=complex)
    for n in range(N):
        H[n * L : (n + 1) * L, n * L : (n + 1) * L] = model.V[n]
    for n in range(N - 1):
        Tn = model.T[n + 1]
        H[n * L : (n + 1) * L, (n + 1) * L : (n + 2) * L] += Tn
        H[(n + 1) * L : (n + 2) * L, n * L : (n + 1) * L] += dagger(Tn)
    if omega != 0:
        T1 = model.T[0]
        H[0:L, (N - 1) * L :] += np.conj(omega) * dagger(T1)
        H[(N - 1) * L :, 0:L] += omega * T1
    return H


# ------------------------------------------------------------- transfer


def transfer_matrices(model, E):
    """All transfer matrices at energies `E`; shape ``E.shape + (N, 2L, 2L)``.

    ``[[(E - V_n) T_n^-1, -T_n^*], [T_n^-1, 0]]``
    """
    E = np.asarray(E, dtype=float)
    L = model.L
    Tinv = np.linalg.inv(model.T)
    VTinv = model.V @ Tinv
    e = E[..., None, None, None]
    top_left = e * Tinv - VTinv
    top_right = np.broadcast_to(-dagger(model.T), top_left.shape)
    bottom_left = np.broadcast_to(Tinv, top_left.shape)
    zero = np.zeros(top_left.shape, dtype=complex)
    out = np.concatenate(
        [
            np.concatenate([top_left, top_right], axis=-1),
            np.concatenate([bottom_left, zero], axis=-1),
        ],
        axis=-2,
    )
    assert out.shape[-1] == 2 * L
    return out


def transfer_matrix(model, n, E):
    """Transfer matrix of site ``n`` (1-based) at energy `E`."""
    if not 1 <= n <= model.N:
        raise ContractViolation(f"site index must lie in 1..{model.N}, got {n}")
    return transfer_matrices(model, E)[..., n - 1, :, :]


def transfer_product(model, E):
    """``T_N ... T_1`` at energies `E`."""
    Ts = transfer_matrices(model, E)
    P = Ts[..., 0, :, :]
    for n in range(1, model.N):
        P = Ts[..., n, :, :] @ P
    return P


# ------------------------------------------------------- Prüfer unitaries


def _lorentz_coefficients(model, graph):
    """Per-site Lorentz steps as affine functions ``G0 + E G1`` of the energy.

    Cayley conjugation is linear and the transfer matrices are affine in
    `E`, so the coefficients are computed once per model.
    """
    key = "graph" if graph else "plain"
    if key not in model._cache:
        T0 = transfer_matrices(model, 0.0)
        T1 = transfer_matrices(model, 1.0)
        if graph:
            I = np.eye(2 * model.L, dtype=complex)
            G0 = cayley_conjugate(checkerboard_sum_matrix(I, T0))
            G1 = cayley_conjugate(checkerboard_sum_matrix(I, T1)) - G0
        else:
            G0 = cayley_conjugate(T0)
            G1 = cayley_conjugate(T1) - G0
        model._cache[key] = (G0, G1)
    return model._cache[key]


def _moebius_chain(model, E, U0, graph, return_drift=False):
    E = np.asarray(E, dtype=float)
    G0, G1 = _lorentz_coefficients(model, graph)
    h = G0.shape[-1] // 2
    U = np.broadcast_to(U0, E.shape + U0.shape).copy()
    e = E[..., None, None]
    drift = np.zeros(model.N)
    for n in range(model.N):
        G = G0[n] + e * G1[n]
        num = G[..., :h, :h] @ U + G[..., :h, h:]
        den = G[..., h:, :h] @ U + G[..., h:, h:]
        U = np.swapaxes(
            np.linalg.solve(np.swapaxes(den, -1, -2), np.swapaxes(num, -1, -2)), -1, -2
        )
        if return_drift:
            drift[n] = unitarity_defect(U.reshape(-1, h, h))
    return (U, drift) if return_drift else U


def graph_unitary(model, E, return_drift=False):
    """Unitary of the propagated graph frame, by the Möbius recursion.

    Starts from the unitary of ``psi_0`` and applies the Cayley conjugate of
    ``1 ⊕̂ T_n`` for ``n = 1..N``.

    Returns
    -------
    W : ndarray, shape ``E.shape + (2L, 2L)``
    drift : ndarray, shape ``(N,)``, optional
        Largest unitarity defect after each step.
    """
    return _moebius_chain(model, E, psi_k_unitary(0.0, model.L), True, return_drift)


def closing_twist(k, L):
    """``[[0, i e^{-ik}], [i e^{ik}, 0]]``; also the large-|E| limit of the Bloch unitary."""
    I = np.eye(L)
    Z = np.zeros((L, L))
    return np.block([[Z, 1j * np.exp(-1j * k) * I], [1j * np.exp(1j * k) * I, Z]])


def prufer_unitaries(model, E, k, check=False, tol=ROUTE_TOL):
    """Graph unitary ``W`` and Bloch unitary ``U_k`` at energies `E`.

    ``U_k = [[0, i e^{-ik}], [i e^{ik}, 0]] W`` has eigenvalue 1 exactly when
    `E` is an eigenvalue of the chain with quasi-momentum `k`, with matching
    multiplicity.

    Parameters
    ----------
    check : bool
        Cross-check against two other routes and raise
        :class:`RouteDisagreementError` on a gap above `tol`: the unitary of
        the QR-normalised propagated frame, and the embedding of the dense
        transfer product. The dense route loses about ``eps * cond(T(N, 1))``
        digits, so its tolerance is widened by that estimate.
    """
    W, drift = graph_unitary(model, E, return_drift=True)
    twist = closing_twist(k, model.L)
    U = twist @ W
    if check:
        framed = twist @ stereographic(graph_frame_canonical(model, E))
        gap = float(np.max(np.abs(framed - U), initial=0.0))
        if gap > tol:
            raise RouteDisagreementError(
                f"Möbius and frame routes differ by {gap:.3g}",
                {"difference": gap, "per_step_unitarity_drift": drift.tolist()},
            )
        P = transfer_product(model, E)
        dense = u_hat_k(embed_unitary(P), k)
        cond = float(np.max(np.linalg.cond(P), initial=1.0))
        dense_tol = tol + 100 * np.finfo(float).eps * cond
        gap = float(np.max(np.abs(dense - U), initial=0.0))
        if gap > dense_tol:
            raise RouteDisagreementError(
                f"Möbius and dense routes differ by {gap:.3g} (allowed {dense_tol:.3g})",
                {
                    "difference": gap,
                    "transfer_condition": cond,
                    "per_step_unitarity_drift": drift.tolist(),
                },
            )
    return W, U


def bloch_unitary_dense(model, E, k):
    """``U_k`` from the embedding of the full transfer product (reference route)."""
    return u_hat_k(embed_unitary(transfer_product(model, E)), k)


def moebius_drift(model, E):
    """Per-step unitarity defect of the Möbius recursion at a single energy."""
    return graph_unitary(model, float(E), return_drift=True)[1]


# ----------------------------------------- canonical frames and derivatives


def _sweep(model, E, periodic):
    """Propagate the solution frame with QR re-normalisation.

    Returns the final column-orthonormal frame and the accumulated
    derivative form ``sum_n Y_n^* Y_n`` expressed in that frame's
    coordinates, with ``Y_n = T_n^-1 (top half of T(n-1, 1) x)``.
    """
    E = np.asarray(E, dtype=float)
    L = model.L
    M = 2 * L if periodic else L
    Ts = transfer_matrices(model, E)
    Tinv = np.linalg.inv(model.T)
    if periodic:
        # coordinates x = (T_1 phi_1; phi_0); fixed summand holds (phi_0; T_1 phi_1)
        S = np.broadcast_to(np.eye(2 * L, dtype=complex), E.shape + (2 * L, 2 * L)).copy()
        swap = np.block([[np.zeros((L, L)), np.eye(L)], [np.eye(L), np.zeros((L, L))]])
        P = np.broadcast_to(swap.astype(complex), S.shape).copy()
    else:
        S = np.broadcast_to(
            np.vstack([np.eye(L), np.zeros((L, L))]).astype(complex), E.shape + (2 * L, L)
        ).copy()
        P = None
    Q = np.zeros(E.shape + (M, M), dtype=complex)
    for n in range(model.N):
        Y = Tinv[n] @ S[..., :L, :]
        Q = Q + dagger(Y) @ Y
        S = Ts[..., n, :, :] @ S
        F = _stack_summands(P, S) if periodic else S
        _, R = np.linalg.qr(F)
        # right-multiply every coordinate object by R^-1
        S = _right_solve(S, R)
        if periodic:
            P = _right_solve(P, R)
        Q = _right_solve(dagger(_right_solve(Q, R)), R)
        Q = 0.5 * (Q + dagger(Q))
    F = _stack_summands(P, S) if periodic else S
    return F, Q


def _stack_summands(P, S):
    """Rows ``(P_top, S_top, P_bottom, S_bottom)``: the checkerboard row layout."""
    h = P.shape[-2] // 2
    return np.concatenate([P[..., :h, :], S[..., :h, :], P[..., h:, :], S[..., h:, :]], axis=-2)


def _right_solve(X, R):
    """``X R^-1`` for stacks."""
    return np.swapaxes(np.linalg.solve(np.swapaxes(R, -1, -2), np.swapaxes(X, -1, -2)), -1, -2)


def graph_frame_canonical(model, E):
    """Column-orthonormal frame of the propagated graph plane (``4L x 2L``)."""
    return _sweep(model, E, periodic=True)[0]


def dirichlet_frame_canonical(model, E):
    """Column-orthonormal representative of ``T(N, 1) (1; 0)``."""
    return _sweep(model, E, periodic=False)[0]


def dirichlet_unitary(model, E):
    """Dirichlet Prüfer unitary ``-Π(T(N, 1) (1; 0))`` (``L x L``).

    Computed by the Möbius recursion from ``Π((1; 0)) = 1``.
    ``dim ker(U - 1)`` is the multiplicity of `E` as an eigenvalue of the
    Dirichlet matrix ``assemble_dense(model, 0)``.
    """
    return -_moebius_chain(model, E, np.eye(model.L, dtype=complex), False)


def dirichlet_unitary_frame(model, E):
    """Same unitary from the QR-normalised frame (cross-check route)."""
    return -stereographic(dirichlet_frame_canonical(model, E))


def _derivative_from_sweep(F, Q):
    M = F.shape[-1]
    a, b = F[..., :M, :], F[..., M:, :]
    # for an orthonormal Lagrangian frame a + ib is unitary
    phi_plus = a + 1j * b
    D = 2.0 * phi_plus @ Q @ dagger(phi_plus)
    return 0.5 * (D + dagger(D))


def energy_derivative_matrix(model, E, k=0.0):
    """``(1/i) U_k^* dU_k/dE`` from the closed-form sum over sites.

    Computed as ``2 phi_+^{-*} K phi_+^{-1}`` with
    ``K = sum_n G_n^* diag((T_n T_n^*)^-1, 0) G_n``, ``G_n = T(n-1, 1)`` and
    ``phi_+ = a + ib`` of the propagated frame. `K` is accumulated as a Gram
    sum, so the result is positive semi-definite up to rounding. The value
    does not depend on `k`.
    """
    F, Q = _sweep(model, E, periodic=True)
    return _derivative_from_sweep(F, Q)


def dirichlet_energy_derivative_matrix(model, E):
    """``(1/i) U^* dU/dE`` for the Dirichlet unitary (``L x L``)."""
    F, Q = _sweep(model, E, periodic=False)
    return _derivative_from_sweep(F, Q)


# ------------------------------------------------------- boundary handling


def boundary_unitary(model, E, bc):
    """Unitary whose eigenvalue 1 detects eigenvalues for boundary condition `bc`.

    Dirichlet: :func:`dirichlet_unitary` (``L x L``). Periodic: the Bloch
    unitary. General: ``Π(Psi)^* W`` (``2L x 2L``).
    """
    if isinstance(bc, Dirichlet):
        return dirichlet_unitary(model, E)
    W = graph_unitary(model, E)
    if isinstance(bc, Periodic):
        return closing_twist(bc.k, model.L) @ W
    if isinstance(bc, General):
        return dagger(stereographic(bc.frame(model.L))) @ W
    raise InvalidBoundaryError(f"unknown boundary condition {bc!r}")


def boundary_derivative_matrix(model, E, bc):
    """``(1/i) U^* dU/dE`` for :func:`boundary_unitary`."""
    if isinstance(bc, Dirichlet):
        return dirichlet_energy_derivative_matrix(model, E)
    return energy_derivative_matrix(model, E)


def boundary_multiplicity(model, E, bc, tol=RANK_TOL):
    """Multiplicity of `E` as an eigenvalue, ``dim ker(U - 1)``."""
    U = boundary_unitary(model, float(E), bc)
    return kernel_dimension(U - np.eye(U.shape[-1]), tol, scale=1.0)


def general_boundary_multiplicity(model, E, frame, tol=RANK_TOL):
    """Multiplicity of `E` for the boundary condition given by a ``4L x 2L`` frame.

    The propagated graph plane collects the boundary data
    ``(phi_0, T_{N+1} phi_{N+1}, T_1 phi_1, phi_N)`` of all solutions at
    energy `E`; the multiplicity is its intersection dimension with the
    boundary frame.
    """
    bc = frame if isinstance(frame, General) else General(frame)
    F = graph_frame_canonical(model, float(E))
    return intersection_dimension(F, bc.frame(model.L), tol)


def infinite_energy_multiplicity(model, bc):
    """How many of the ``NL`` eigenphase crossings sit at ``E = ±inf``.

    The graph plane tends to ``span{blocks 0, 1}`` (``W -> 1``) at both ends,
    so a general frame meeting that plane loses the matching number of
    finite eigenvalues. Zero for Dirichlet and periodic conditions.
    """
    if isinstance(bc, (Dirichlet, Periodic)):
        return 0
    L = model.L
    top = np.vstack([np.eye(2 * L), np.zeros((2 * L, 2 * L))]).astype(complex)
    return intersection_dimension(top, bc.frame(L))


def expected_eigenvalue_count(model, bc):
    """Number of finite eigenvalues, with multiplicity."""
    return model.size - infinite_energy_multiplicity(model, bc)

