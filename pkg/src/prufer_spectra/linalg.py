"""Dense complex linear algebra at desk sizes.

Matrices are plain complex :class:`numpy.ndarray` objects; the ``check_*``
helpers validate the invariants of the matrix kinds used throughout the
package (hermitian, unitary) and return a complex copy.

The Hermitian eigensolver is a self-contained cyclic Jacobi method so that
it can serve as an oracle that shares nothing with the oscillation-theory
code paths.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import ContractViolation, NumericalWarning

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
RANK_TOL = 1e-8
# singular values in this band relative to sigma_max make a rank call shaky
GREY_ZONE = (1e-10, 1e-6)


def dagger(M):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(M, -1, -2))


def wrap_angle(theta):
    """Map angles into ``[-pi, pi)``."""
    return (np.asarray(theta) + np.pi) % (2 * np.pi) - np.pi


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D complex array or raise."""
    A = np.array(M, dtype=complex)
    if A.ndim != 2:
        raise ContractViolation(f"{name} must be two-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractViolation(f"{name} has non-finite entries")
    return A


def check_square(M, name="matrix"):
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ContractViolation(f"{name} must be square, got shape {A.shape}")
    return A


def hermiticity_defect(M):
    return float(np.max(np.abs(M - dagger(M)), initial=0.0))


def check_hermitian(M, tol=HERMITIAN_TOL, name="matrix"):
    """Validate hermiticity, ``max|M - M*| <= tol * max(1, max|M|)``."""
    A = check_square(M, name)
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    defect = hermiticity_defect(A)
    if defect > tol * scale:
        raise ContractViolation(f"{name} is not hermitian (defect {defect:.3g})")
    return A


def unitarity_defect(U):
    n = U.shape[-1]
    return float(np.max(np.abs(dagger(U) @ U - np.eye(n)), initial=0.0))


def check_unitary(U, tol=UNITARY_TOL, name="matrix"):
    A = check_square(U, name)
    defect = unitarity_defect(A)
    if defect > tol:
        raise ContractViolation(f"{name} is not unitary (defect {defect:.3g})")
    return A


def _round_robin(n):
    """Pairings for a parallel Jacobi sweep: each round is a set of
    disjoint index pairs, and every pair appears exactly once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def hermitian_eig(M, tol=HERMITIAN_TOL, max_sweeps=60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a_pq`` with a
    diagonal unitary and then applies a real Givens rotation, so the
    iteration works directly on complex Hermitian input. Disjoint pivots
    are rotated together (round-robin ordering), which keeps the sweep
    vectorised.

    Parameters
    ----------
    M : array_like
        Square Hermitian matrix.
    tol : float
        Hermiticity tolerance used to validate `M`.

    Returns
    -------
    values : ndarray
        Eigenvalues in ascending order.
    vectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    A = check_hermitian(M, tol)
    A = 0.5 * (A + dagger(A))
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    if n == 0:
        return np.zeros(0), V
    fro = np.linalg.norm(A)
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if fro == 0 or off <= 1e-15 * fro:
            break
        for p, q in rounds:
            if p.size == 0:
                continue
            apq = A[p, q]
            r = np.abs(apq)
            active = r > 1e-300
            if not np.any(active):
                continue
            p, q, apq, r = p[active], q[active], apq[active], r[active]
            phase = np.exp(-1j * np.angle(apq))
            theta = (A[q, q].real - A[p, p].real) / (2 * r)
            sign = np.where(theta >= 0, 1.0, -1.0)
            big = np.abs(theta) > 1e150
            safe = np.where(big, 0.0, theta)
            t = np.where(
                big,
                0.5 / np.where(big, theta, 1.0),
                sign / (np.abs(safe) + np.sqrt(safe**2 + 1)),
            )
            c = 1 / np.sqrt(t**2 + 1)
            s = t * c
            G = np.eye(n, dtype=complex)
            G[p, p] = c
            G[p, q] = s
            G[q, p] = -s * phase
            G[q, q] = c * phase
            A = dagger(G) @ A @ G
            V = V @ G
        A = 0.5 * (A + dagger(A))
    values = np.real(np.diag(A))
    order = np.argsort(values, kind="stable")
    return values[order], V[:, order]


def eigenphases(U):
    """Sorted eigenphases in ``[-pi, pi)`` of one unitary or a stack of them.

    No validation; this is the hot-path variant of
    :func:`unitary_eigenphases`.
    """
    lam = np.linalg.eigvals(U)
    # -angle(conj z) lies in [-pi, pi)
    theta = -np.angle(np.conj(lam))
    # rounding can still land exactly on +pi
    theta = np.where(theta >= np.pi, theta - 2 * np.pi, theta)
    return np.sort(theta, axis=-1)


def unitary_eigenphases(U, tol=UNITARY_TOL):
    """Eigenphases ``theta_j`` with ``exp(i theta_j)`` the eigenvalues of `U`.

    Returned sorted ascending in ``[-pi, pi)``, repeated according to
    multiplicity.
    """
    A = check_unitary(U, tol)
    return eigenphases(A)


def singular_values(M):
    return np.linalg.svd(np.asarray(M, dtype=complex), compute_uv=False)


def rank(M, tol=RANK_TOL, scale=None):
    """Numerical rank: singular values above ``tol * sigma_max``.

    If `scale` is given the threshold is ``tol * max(sigma_max, scale)``.
    This matters for differences such as ``U - 1`` whose natural size is
    known in advance: without it a matrix that is zero up to rounding would
    be measured against its own rounding noise.
    """
    if tol <= 0:
        raise ContractViolation("rank tolerance must be positive")
    A = np.asarray(M, dtype=complex)
    if A.size == 0:
        return 0
    s = singular_values(A)
    ref = s[0] if s.size else 0.0
    if scale is not None:
        ref = max(ref, float(scale))
    if ref == 0.0:
        return 0
    grey = (s > GREY_ZONE[0] * ref) & (s < GREY_ZONE[1] * ref)
    if np.any(grey):
        warnings.warn(
            f"singular values {s[grey]} lie in the rank grey zone (reference {ref:.3g})",
            NumericalWarning,
            stacklevel=2,
        )
    return int(np.sum(s > tol * ref))


def kernel_dimension(M, tol=RANK_TOL, scale=None):
    """``dim ker M`` for a matrix acting on ``C^cols``."""
    A = np.asarray(M, dtype=complex)
    return A.shape[-1] - rank(A, tol, scale)


def canonicalize(frame):
    """Column-orthonormal representative of the column span (``Q`` of QR).

    Works on a single frame or a stack; the span is unchanged.
    """
    Q, _ = np.linalg.qr(np.asarray(frame, dtype=complex))
    return Q
