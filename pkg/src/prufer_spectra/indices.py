"""Intersection indices of Lagrangian and symplectic paths.

A path of Lagrangian planes ``gamma(E)`` is tracked through the unitary
``U(E) = Π(Psi)^* Π(gamma(E))``; the plane meets the reference plane `Psi`
exactly when ``U`` has eigenvalue 1. The intersection index counts the
eigenphases passing through zero, upward passages positive.

Counting rule
-------------
An eigenphase with ``|theta| <= zero_tol`` is treated as negative. Along a
finely sampled path every passage then shows up as a sign change between
two consecutive samples, and the sum is additive under concatenation. For
open paths the initial point is included and the final point excluded: a
phase leaving zero counts in its direction of departure, a phase arriving
at zero does not count.

Refinement
----------
Paths carry either an evaluator (parameters -> stack of frames) or only
samples; in the latter case segments are refined along unitary geodesics
``U_a expm(t log(U_a^* U_b))``. A segment is split when
``s = ||U_b - U_a||_2 >= 0.5`` or when a phase lies within
``m + 0.1`` of zero while the motion bound ``m = 2 arcsin(s/2)`` exceeds
``0.05``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import schur

from .errors import AmbiguousCrossingError, ContractViolation, SamplingError, TangencyError
from .linalg import dagger, eigenphases
from .symplectic import (
    check_hermitian_symplectic,
    checkerboard_sum_frame,
    graph_frame,
    is_lagrangian,
    lagrangian_defect,
    psi_k,
    stereographic,
)

MAX_STEP = 0.5
NEAR_ZERO = 0.1
FINE_MOTION = 0.05
ZERO_TOL = 1e-9
MAX_DEPTH = 40
MAX_SEGMENTS = 2**15
WINDING_STEP = 0.5 * np.pi


def _as_params(params):
    p = np.asarray(params, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ContractViolation("a path needs at least two parameter values")
    if not np.all(np.diff(p) > 0):
        raise ContractViolation("path parameters must be strictly increasing")
    return p


@dataclass(frozen=True, eq=False)
class LagrangianPath:
    """Sampled path of Lagrangian planes.

    Parameters
    ----------
    params : array_like, shape (n,)
        Strictly increasing parameter values.
    frames : array_like, shape (n, 2L, L)
        Lagrangian frames at the parameters.
    closed : bool
        The last plane equals the first one.
    evaluator : callable, optional
        Maps an array of parameters to a stack of frames; used for
        refinement. Without it segments are refined along geodesics.
    """

    params: np.ndarray
    frames: np.ndarray
    closed: bool = False
    evaluator: Optional[Callable] = None
    _unitaries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = _as_params(self.params)
        F = np.array(self.frames, dtype=complex)
        if F.ndim != 3 or F.shape[0] != p.size or F.shape[1] != 2 * F.shape[2]:
            raise ContractViolation(f"frames must have shape (n, 2L, L), got {F.shape}")
        for i, Phi in enumerate(F):
            if not is_lagrangian(Phi):
                raise ContractViolation(
                    f"frame {i} is not Lagrangian (defect {lagrangian_defect(Phi):.3g})"
                )
        U = stereographic(F)
        if self.closed and np.max(np.abs(U[-1] - U[0])) > 1e-8:
            raise ContractViolation("closed path must end on its starting plane")
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "frames", F)
        object.__setattr__(self, "_unitaries", U)

    @classmethod
    def from_function(cls, func, params, closed=False):
        """Sample `func` (array of parameters -> stack of frames) at `params`."""
        p = _as_params(params)
        return cls(p, func(p), closed, func)

    @classmethod
    def from_unitaries(cls, params, unitaries, closed=False, evaluator=None):
        """Path through the planes ``Π^-1(U)``; `evaluator` returns unitaries."""
        U = np.asarray(unitaries, dtype=complex)
        F = _unitary_frames(U)
        ev = None
        if evaluator is not None:

            def ev(t):
                return _unitary_frames(evaluator(t))

        return cls(params, F, closed, ev)

    @property
    def L(self):
        return self.frames.shape[2]

    @property
    def unitaries(self):
        return self._unitaries

    def evaluate(self, t):
        """Unitaries ``Π(gamma(t))`` at parameters inside the sampled range."""
        t = np.asarray(t, dtype=float)
        if self.evaluator is not None:
            return stereographic(self.evaluator(t))
        return _geodesic_eval(self.params, self._unitaries, t)

    def concatenate(self, other):
        """``self`` followed by `other`; `other` must start where ``self`` ends."""
        if abs(other.params[0] - self.params[-1]) > 0 or np.max(
            np.abs(other.unitaries[0] - self.unitaries[-1])
        ) > 1e-8:
            raise ContractViolation("paths do not join")
        p = np.concatenate([self.params, other.params[1:]])
        F = np.concatenate([self.frames, other.frames[1:]])
        ev = None
        if self.evaluator is not None and other.evaluator is not None:
            a, b, cut = self.evaluator, other.evaluator, self.params[-1]

            def ev(t):
                t = np.asarray(t, dtype=float)
                out = np.empty((t.size,) + F.shape[1:], dtype=complex)
                left = t <= cut
                if np.any(left):
                    out[left] = a(t[left])
                if np.any(~left):
                    out[~left] = b(t[~left])
                return out

        return LagrangianPath(p, F, False, ev)

    def split(self, t):
        """Two paths meeting at parameter `t` (strictly inside the range)."""
        if not self.params[0] < t < self.params[-1]:
            raise ContractViolation("split point must lie strictly inside the path")
        if self.evaluator is not None:
            mid = self.evaluator(np.array([t]))[0]
        else:
            mid = _unitary_frames(self.evaluate(np.array([t])))[0]
        i = int(np.searchsorted(self.params, t))
        left = LagrangianPath(
            np.append(self.params[:i], t), np.concatenate([self.frames[:i], mid[None]]), False, self.evaluator
        )
        right = LagrangianPath(
            np.insert(self.params[i:], 0, t), np.concatenate([mid[None], self.frames[i:]]), False, self.evaluator
        )
        return left, right

    def transform(self, T):
        """Image path ``T gamma`` under a hermitian symplectic matrix."""
        T = check_hermitian_symplectic(T, "T")
        ev = None
        if self.evaluator is not None:
            f = self.evaluator

            def ev(t):
                return T @ f(t)

        return LagrangianPath(self.params, T @ self.frames, self.closed, ev)

    def direct_sum(self, other):
        """Checkerboard sum ``gamma ⊕̂ gamma'`` on a common parameter grid."""
        if self.params.shape != other.params.shape or np.any(self.params != other.params):
            raise ContractViolation("direct sum needs identical parameter grids")
        ev = None
        if self.evaluator is not None and other.evaluator is not None:
            f, g = self.evaluator, other.evaluator

            def ev(t):
                return checkerboard_sum_frame(f(t), g(t))

        return LagrangianPath(
            self.params,
            checkerboard_sum_frame(self.frames, other.frames),
            self.closed and other.closed,
            ev,
        )


def _unitary_frames(U):
    """Orthonormal frames ``Π^-1(U)`` for a stack of unitaries."""
    U = np.asarray(U, dtype=complex)
    I = np.eye(U.shape[-1])
    return np.linalg.qr(np.concatenate([U + I, 1j * (U - I)], axis=-2))[0]


def unitary_log(U):
    """Principal logarithm of a unitary via its complex Schur form."""
    Tm, Z = schur(np.asarray(U, dtype=complex), output="complex")
    lam = np.diag(Tm)
    return (Z * np.log(lam / np.abs(lam))) @ dagger(Z)


def unitary_geodesic(A, B, t):
    """``A expm(t log(A^* B))`` for scalar or array `t` in ``[0, 1]``."""
    Tm, Z = schur(dagger(A) @ B, output="complex")
    phi = np.angle(np.diag(Tm))
    t = np.asarray(t, dtype=float)
    D = np.exp(1j * t[..., None] * phi)
    return A @ (Z[None] * D[..., None, :] if t.ndim else Z * D) @ dagger(Z)


def _geodesic_eval(params, U, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t.size,) + U.shape[1:], dtype=complex)
    idx = np.clip(np.searchsorted(params, t, side="right") - 1, 0, params.size - 2)
    for i in np.unique(idx):
        sel = idx == i
        s = (t[sel] - params[i]) / (params[i + 1] - params[i])
        out[sel] = unitary_geodesic(U[i], U[i + 1], s)
    return out


# ---------------------------------------------------------------- counting


def crossing_signature(phases_before, phases_after, delta=NEAR_ZERO):
    """Signature ``(p_+ - n_+ - p_- + n_-) / 2`` of a crossing.

    ``p_±`` and ``n_±`` count the positive and negative eigenphases after
    (+) and before (-) the crossing, all taken inside ``[-delta, delta]``.

    Raises
    ------
    AmbiguousCrossingError
        If a phase is exactly zero.
    """
    b = np.asarray(phases_before, dtype=float).ravel()
    a = np.asarray(phases_after, dtype=float).ravel()
    if b.size != a.size:
        raise ContractViolation("before and after must list the same number of phases")
    if np.any(np.abs(b) > delta) or np.any(np.abs(a) > delta):
        raise ContractViolation(f"phases must lie in [-{delta}, {delta}]")
    if np.any(b == 0) or np.any(a == 0):
        raise AmbiguousCrossingError("an eigenphase is exactly zero; refine the grid")
    twice = np.sum(a > 0) - np.sum(a < 0) - np.sum(b > 0) + np.sum(b < 0)
    return int(twice // 2)


def _branch_steps(prev, cur):
    m = prev.shape[-1]
    shifts = np.stack([np.roll(cur, -w, axis=-1) for w in range(m)], axis=-2)
    steps = np.angle(np.exp(1j * (shifts - prev[..., None, :])))
    best = np.argmin(np.sum(np.abs(steps), axis=-1), axis=-1)
    return np.take_along_axis(steps, best[..., None, None], axis=-2)[..., 0, :]


def _segments(evaluate, params, U, reference, split_rule, max_depth=MAX_DEPTH):
    """Breadth-first refinement of a path of unitaries.

    `evaluate` maps parameters to absolute unitaries; the relative unitaries
    ``reference^* U`` drive the split rule ``split_rule(Ra, Rb) -> bool mask``.
    Returns accepted segments ``(ta, tb, Ra, Rb)`` sorted by ``ta``.
    """
    R = reference @ U if reference is not None else U
    ta, tb, Ra, Rb = params[:-1], params[1:], R[:-1], R[1:]
    out = []
    for depth in range(max_depth + 1):
        split = split_rule(Ra, Rb)
        # a phase pinned at zero splits every child; cap the total work
        if np.any(split) and (depth == max_depth or 2 * np.sum(split) > MAX_SEGMENTS):
            i = int(np.nonzero(split)[0][0])
            raise SamplingError(
                "path could not be resolved by refinement", (float(ta[i]), float(tb[i]))
            )
        keep = ~split
        out.append((ta[keep], tb[keep], Ra[keep], Rb[keep]))
        if not np.any(split):
            break
        a, b, A, B = ta[split], tb[split], Ra[split], Rb[split]
        m = 0.5 * (a + b)
        Um = evaluate(m)
        Rm = reference @ Um if reference is not None else Um
        ta = np.concatenate([a, m])
        tb = np.concatenate([m, b])
        Ra = np.concatenate([A, Rm])
        Rb = np.concatenate([Rm, B])
    ta = np.concatenate([o[0] for o in out])
    order = np.argsort(ta, kind="stable")
    return (
        ta[order],
        np.concatenate([o[1] for o in out])[order],
        np.concatenate([o[2] for o in out])[order],
        np.concatenate([o[3] for o in out])[order],
    )


def _index_split_rule(zero_tol):
    def rule(Ra, Rb):
        s = np.linalg.norm(Rb - Ra, ord=2, axis=(-2, -1))
        motion = 2 * np.arcsin(np.minimum(s / 2, 1.0))
        tha, thb = eigenphases(Ra), eigenphases(Rb)
        near = np.minimum(np.min(np.abs(tha), axis=-1), np.min(np.abs(thb), axis=-1))
        stuck = np.any((np.abs(tha) <= zero_tol) & (np.abs(_lift(tha, thb)) <= zero_tol), axis=-1)
        return (s >= MAX_STEP) | ((near <= motion + NEAR_ZERO) & (motion > FINE_MOTION)) | stuck

    return rule


def _lift(tha, thb):
    """End phases continued from `tha` along the matched branches."""
    return tha + _branch_steps(tha, thb)


def _relative_reference(psi, L):
    if psi is None:
        return None
    V = stereographic(np.asarray(psi, dtype=complex))
    if V.shape[-1] != L:
        raise ContractViolation(f"reference frame has L={V.shape[-1]}, path has L={L}")
    return dagger(V)


def intersection_index(path, psi, zero_tol=ZERO_TOL, include_initial=True):
    """Signed count of the passages of `path` through the planes meeting `psi`.

    Parameters
    ----------
    path : LagrangianPath
    psi : array_like, shape (2L, L)
        Reference Lagrangian frame.
    include_initial : bool
        Count a phase that starts at zero (in its direction of departure).
        Ignored for closed paths.

    Raises
    ------
    TangencyError
        If an eigenphase stays at zero over a segment that cannot be
        refined further.
    """
    ref = _relative_reference(psi, path.L)
    try:
        ta, tb, Ra, Rb = _segments(
            path.evaluate, path.params, path.unitaries, ref, _index_split_rule(zero_tol)
        )
    except SamplingError as exc:
        a, b = exc.interval
        Rab = path.evaluate(np.array([a, b]))
        if ref is not None:
            Rab = ref @ Rab
        th = eigenphases(Rab)
        if np.any((np.abs(th[0]) <= zero_tol) & (np.abs(_lift(th[0], th[1])) <= zero_tol)):
            raise TangencyError(
                "an eigenphase stays on the singular cycle; crossing cannot be resolved",
                exc.interval,
            ) from exc
        raise
    tha = eigenphases(Ra)
    thb = _lift(tha, eigenphases(Rb))
    up = (tha <= zero_tol) & (thb > zero_tol)
    down = (tha > zero_tol) & (thb <= zero_tol)
    total = int(np.sum(up) - np.sum(down))
    if path.closed:
        return total
    # initial point: a phase leaving zero downwards has not been counted yet
    at_start = np.abs(tha[0]) <= zero_tol
    total -= int(np.sum(at_start & (thb[0] < -zero_tol)))
    if not include_initial:
        total -= int(np.sum(at_start & (thb[0] > zero_tol)))
        total += int(np.sum(at_start & (thb[0] < -zero_tol)))
    # final point: arrivals at zero from above were counted as -1
    at_end = np.abs(thb[-1]) <= zero_tol
    total += int(np.sum(at_end & (tha[-1] > zero_tol)))
    return total


def _winding_split_rule(Ra, Rb):
    d = np.angle(np.linalg.det(Rb) / np.linalg.det(Ra))
    s = np.linalg.norm(Rb - Ra, ord=2, axis=(-2, -1))
    return (np.abs(d) > WINDING_STEP) | (s >= MAX_STEP)


def winding_integral(path):
    """Change of ``arg det Π(gamma)`` along the path, in units of ``2 pi``.

    Computed from principal angle steps of the determinant between samples,
    refining wherever a step exceeds ``pi/2``. For closed paths the result
    is an integer up to rounding.

    Raises
    ------
    SamplingError
        If a determinant step of at least ``pi`` remains after refinement.
    """
    ta, tb, Ra, Rb = _segments(path.evaluate, path.params, path.unitaries, None, _winding_split_rule)
    d = np.angle(np.linalg.det(Rb) / np.linalg.det(Ra))
    if np.any(np.abs(d) >= np.pi):
        raise SamplingError("determinant jump of pi between samples")
    return float(np.sum(d) / (2 * np.pi))


def det_winding(path):
    """Integer winding of ``det Π(gamma)`` around a closed path."""
    if not path.closed:
        raise ContractViolation("det winding is defined for closed paths")
    return int(np.rint(winding_integral(path)))


def quadratic_form_signature(U, form, tol=1e-8):
    """Signature of a hermitian `form` restricted to ``ker(U - 1)``.

    Alternative crossing signature for paths where the phase-velocity form
    ``(1/i) U^* dU`` is available.
    """
    U = np.asarray(U, dtype=complex)
    w, X = np.linalg.eig(U)
    K = X[:, np.abs(w - 1) <= tol]
    if K.shape[1] == 0:
        return 0
    K, _ = np.linalg.qr(K)
    ev = np.linalg.eigvalsh(dagger(K) @ form @ K)
    scale = max(1.0, float(np.max(np.abs(ev))))
    return int(np.sum(ev > tol * scale) - np.sum(ev < -tol * scale))


# ------------------------------------------------------- symplectic paths


@dataclass(frozen=True, eq=False)
class SymplecticPath:
    """Sampled path of hermitian symplectic matrices.

    Parameters
    ----------
    params : array_like, shape (n,)
    matrices : array_like, shape (n, 2L, 2L)
    closed : bool
        The last matrix equals the first one.
    evaluator : callable, optional
        Maps an array of parameters to a stack of matrices.
    """

    params: np.ndarray
    matrices: np.ndarray
    closed: bool = False
    evaluator: Optional[Callable] = None

    def __post_init__(self):
        p = _as_params(self.params)
        M = np.array(self.matrices, dtype=complex)
        if M.ndim != 3 or M.shape[0] != p.size:
            raise ContractViolation(f"matrices must have shape (n, 2L, 2L), got {M.shape}")
        for i, T in enumerate(M):
            check_hermitian_symplectic(T, f"matrix {i}")
        if self.closed and np.max(np.abs(M[-1] - M[0])) > 1e-8 * max(1.0, np.max(np.abs(M[0]))):
            raise ContractViolation("closed path must end at its starting matrix")
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "matrices", M)

    @classmethod
    def from_function(cls, func, params, closed=False):
        p = _as_params(params)
        return cls(p, func(p), closed, func)

    @property
    def L(self):
        return self.matrices.shape[-1] // 2

    def graph_path(self):
        """Lagrangian path of the graph frames ``(1 ⊕̂ T) psi_0``."""
        ev = None
        if self.evaluator is not None:
            f = self.evaluator

            def ev(t):
                return graph_frame(f(t))

        return LagrangianPath(self.params, graph_frame(self.matrices), self.closed, ev)

    def acting_on(self, frame):
        """Lagrangian path ``T(E) Phi`` for a fixed frame."""
        Phi = np.asarray(frame, dtype=complex)
        ev = None
        if self.evaluator is not None:
            f = self.evaluator

            def ev(t):
                return f(t) @ Phi

        return LagrangianPath(self.params, self.matrices @ Phi, self.closed, ev)

    def compose(self, other):
        """Pointwise product ``T(E) T'(E)`` on a common grid."""
        if self.params.shape != other.params.shape or np.any(self.params != other.params):
            raise ContractViolation("product needs identical parameter grids")
        ev = None
        if self.evaluator is not None and other.evaluator is not None:
            f, g = self.evaluator, other.evaluator

            def ev(t):
                return f(t) @ g(t)

        return SymplecticPath(
            self.params, self.matrices @ other.matrices, self.closed and other.closed, ev
        )


def conley_zehnder_index(path, k, zero_tol=ZERO_TOL):
    """Index of the graph path of `path` against ``psi_k``.

    Counts, with sign, how often eigenvalues of ``T(E)`` pass through
    ``e^{ik}``.
    """
    return intersection_index(path.graph_path(), psi_k(k, path.L), zero_tol)
