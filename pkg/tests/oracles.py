"""Reference computations that avoid the Prüfer machinery entirely."""

import numpy as np
import scipy.linalg as sla

from prufer_spectra.jacobi import assemble_dense
from prufer_spectra.symplectic import J, stereographic_inverse


def haar_unitary(rng, n):
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hermitian(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (A + A.conj().T) / 2


def random_frame(rng, L, mix=True):
    """Random Lagrangian frame (``2L x L``), optionally with a random column basis."""
    Phi = stereographic_inverse(haar_unitary(rng, L))
    if mix:
        Phi = Phi @ (np.eye(L) + 0.3 * rng.standard_normal((L, L)))
    return Phi


def random_hermitian_symplectic(rng, L, scale=0.5):
    """``expm(J H)`` with hermitian ``H``; hermitian symplectic by construction."""
    return sla.expm(J(L) @ random_hermitian(rng, 2 * L, scale))


def dense_spectrum(model, k=None):
    """Eigenvalues by LAPACK on the assembled matrix; ``k=None`` is Dirichlet."""
    omega = 0.0 if k is None else np.exp(1j * k)
    return np.linalg.eigvalsh(assemble_dense(model, omega))


def group(values, tol=1e-6):
    """Distinct values (cluster means) and their multiplicities."""
    values = np.sort(np.asarray(values, dtype=float))
    out, mult = [], []
    for v in values:
        if out and v - out[-1][-1] <= tol:
            out[-1].append(v)
        else:
            out.append([v])
    return np.array([np.mean(c) for c in out]), np.array([len(c) for c in out])


def general_boundary_spectrum(model, frame):
    """Finite eigenvalues for a general boundary frame, by the QZ algorithm.

    Unknowns are ``phi_0, ..., phi_{N+1}`` and the ``2L`` coefficients ``c``;
    the chain equations hold at ``n = 1..N`` and the boundary vector
    ``(phi_0, T_1 phi_{N+1}, T_1 phi_1, phi_N)`` equals ``frame @ c``.
    """
    N, L = model.N, model.L
    n_phi = (N + 2) * L
    size = n_phi + 2 * L
    A = np.zeros((size, size), dtype=complex)
    B = np.zeros((size, size), dtype=complex)

    def blk(n):
        return slice(n * L, (n + 1) * L)

    for n in range(1, N + 1):
        rows = blk(n - 1)
        A[rows, blk(n + 1)] = model.T[n % N]
        A[rows, blk(n)] = model.V[n - 1]
        A[rows, blk(n - 1)] = model.T[n - 1].conj().T
        B[rows, blk(n)] = np.eye(L)
    r = N * L
    T1 = model.T[0]
    A[r : r + L, blk(0)] = np.eye(L)
    A[r + L : r + 2 * L, blk(N + 1)] = T1
    A[r + 2 * L : r + 3 * L, blk(1)] = T1
    A[r + 3 * L : r + 4 * L, blk(N)] = np.eye(L)
    A[r:, n_phi:] = -np.asarray(frame)
    w = sla.eig(A, B, right=False)
    w = w[np.isfinite(w)]
    w = w[np.abs(w) < 1e8]
    return np.sort(w.real)


def random_unitary_path(rng, L, closed=False, samples=48, speed=3.0):
    """Smooth unitary path on ``[0, 1]`` as ``(params, evaluator, winding)``.

    Closed loops are ``Q diag(e^{2 pi i n t}) Q^* expm(i sin(2 pi t) B)`` with
    known det-winding ``sum(n)``; open paths are ``U0 expm(i (t A + t^2 B))``.
    """
    U0 = haar_unitary(rng, L)
    A = random_hermitian(rng, L, speed)
    B = random_hermitian(rng, L, speed)
    if closed:
        n = rng.integers(-2, 3, size=L)
        Q = haar_unitary(rng, L)

        def evaluate(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            rot = Q[None] * np.exp(2j * np.pi * np.outer(t, n))[:, None, :] @ Q.conj().T
            wig = np.stack([sla.expm(1j * np.sin(2 * np.pi * s) * B) for s in t])
            return U0 @ rot @ wig

        winding = int(n.sum())
    else:

        def evaluate(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([U0 @ sla.expm(1j * (s * A + s * s * B)) for s in t])

        winding = None
    return np.linspace(0.0, 1.0, samples), evaluate, winding


def random_symplectic_loop(rng, L, samples=48):
    """Closed hermitian symplectic loop ``S exp(2 pi n t J) S^-1 expm(J sin(2 pi t) H)``."""
    S = random_hermitian_symplectic(rng, L, 0.3)
    Sinv = np.linalg.inv(S)
    H = random_hermitian(rng, 2 * L, 0.5)
    n = int(rng.integers(-2, 3))
    Jm = J(L)

    def evaluate(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = []
        for s in t:
            th = 2 * np.pi * n * s
            R = np.cos(th) * np.eye(2 * L) + np.sin(th) * Jm
            out.append(S @ R @ Sinv @ sla.expm(Jm * np.sin(2 * np.pi * s) @ H))
        return np.stack(out)

    return np.linspace(0.0, 1.0, samples), evaluate
