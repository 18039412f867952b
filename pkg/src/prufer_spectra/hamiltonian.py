"""Linear Hamiltonian systems on ``[0, 1]``.

The system ``(J d/dx + V(x)) Phi = E P(x) Phi`` with hermitian ``V`` and
positive semi-definite ``P`` has the fundamental solution

    d/dx T(x) = J^* (E P(x) - V(x)) T(x),   T(0) = 1,

(``J^* = -J``), which is hermitian symplectic for every ``x``. Its Prüfer
unitaries play the role of the transfer products of the discrete chain:

* separated Dirichlet-type condition: ``U = -Π(T(1) Psi_start)``, with the
  start frame stored on the system; eigenvalue 1 signals a solution that
  starts in ``Psi_start`` and ends in ``(0; 1)``;
* quasi-periodic condition: the Bloch unitary built from the graph frame of
  ``T(1)``, exactly as for chains.

Sturm-Liouville operators ``-(p phi' + q phi)' + q^* phi' + v phi`` are
mapped to systems with ``Phi = (phi, p phi' + q phi)``; there the
Dirichlet start frame is ``(0; 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .boundary import Dirichlet, General, Periodic
from .eigensolver import DEFAULT_TOL, SpectralResult, cluster, locate_crossings
from .errors import ContractViolation, IntegrationError
from .indices import LagrangianPath
from .linalg import dagger, eigenphases, kernel_dimension, RANK_TOL
from .symplectic import (
    J,
    dirichlet_frame,
    embed_unitary,
    graph_frame,
    intersection_dimension,
    right_dirichlet_frame,
    stereographic,
    u_hat_k,
)

DRIFT_BUDGET = 1e-8
MIN_STEPS = 16
MAX_STEPS = 2**16
DEFAULT_STEPS = 256
# step-doubling agreement demanded where eigenvalues are located or counted
SCAN_RTOL = 1e-8
# brackets closer than this (relative to the energy scale) are one eigenvalue
MERGE_WINDOW = 1e-7
KERNEL_RTOL = 1e-11


def _interp_nodes(nodes, values):
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=complex)
    if nodes.ndim != 1 or nodes.size < 2 or not np.all(np.diff(nodes) > 0):
        raise ContractViolation("nodes must be strictly increasing with at least two entries")
    if nodes[0] > 0 or nodes[-1] < 1:
        raise ContractViolation("nodes must cover [0, 1]")
    if values.shape[0] != nodes.size:
        raise ContractViolation("one coefficient matrix per node is required")
    flat = values.reshape(nodes.size, -1)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (flat.shape[1],), dtype=complex)
        for j in range(flat.shape[1]):
            out[..., j] = np.interp(x, nodes, flat[:, j].real) + 1j * np.interp(
                x, nodes, flat[:, j].imag
            )
        return out.reshape(x.shape + values.shape[1:])

    return f


def _vectorize(func):
    """Evaluate a scalar sampler on an array of points."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.array([np.asarray(func(float(t)), dtype=complex) for t in x.ravel()]).reshape(
            x.shape + np.shape(func(float(x.ravel()[0])))
        )

    return f


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """Coefficients ``V(x)``, ``P(x)`` on ``[0, 1]``.

    Parameters
    ----------
    L : int
    V, P : callable
        Map an array of points to a stack of ``2L x 2L`` matrices.
    dirichlet_start : array_like, optional
        ``2L x L`` start frame of the separated condition; ``(1; 0)`` by default.
    """

    L: int
    V: Callable
    P: Callable
    dirichlet_start: Optional[np.ndarray] = None
    _grids: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if int(self.L) < 1:
            raise ContractViolation("L must be positive")
        start = dirichlet_frame(self.L) if self.dirichlet_start is None else self.dirichlet_start
        start = np.array(start, dtype=complex)
        if start.shape != (2 * self.L, self.L):
            raise ContractViolation("dirichlet_start must be 2L x L")
        object.__setattr__(self, "dirichlet_start", start)

    @classmethod
    def from_callables(cls, L, V, P, dirichlet_start=None):
        """Build from samplers taking a single point ``x``."""
        return cls(L, _vectorize(V), _vectorize(P), dirichlet_start)

    @classmethod
    def from_nodes(cls, nodes, V, P, dirichlet_start=None):
        """Piecewise-linear coefficients through matrices given at `nodes`."""
        V = np.asarray(V, dtype=complex)
        P = np.asarray(P, dtype=complex)
        L = V.shape[-1] // 2
        return cls(L, _interp_nodes(nodes, V), _interp_nodes(nodes, P), dirichlet_start)

    @classmethod
    def constant(cls, V, P, dirichlet_start=None):
        V = np.asarray(V, dtype=complex)
        P = np.asarray(P, dtype=complex)
        return cls.from_nodes([0.0, 1.0], [V, V], [P, P], dirichlet_start)

    def generators(self, steps):
        """``J^* P`` and ``J^* V`` on the half-step grid, validated once per `steps`."""
        if steps not in self._grids:
            x = np.linspace(0.0, 1.0, 2 * steps + 1)
            V = np.asarray(self.V(x), dtype=complex)
            P = np.asarray(self.P(x), dtype=complex)
            n = 2 * self.L
            if V.shape != (x.size, n, n) or P.shape != (x.size, n, n):
                raise ContractViolation(f"coefficients must be {n} x {n}")
            if not (np.all(np.isfinite(V)) and np.all(np.isfinite(P))):
                raise ContractViolation("coefficients must be finite")
            scale = max(1.0, float(np.max(np.abs(V))), float(np.max(np.abs(P))))
            if np.max(np.abs(V - dagger(V))) > 1e-12 * scale:
                raise ContractViolation("V(x) is not hermitian at some sample")
            if np.max(np.abs(P - dagger(P))) > 1e-12 * scale:
                raise ContractViolation("P(x) is not hermitian at some sample")
            if np.min(np.linalg.eigvalsh(0.5 * (P + dagger(P)))) < -1e-10 * scale:
                raise ContractViolation("P(x) is not positive semi-definite at some sample")
            Jt = dagger(J(self.L))
            self._grids[steps] = (x, Jt @ P, Jt @ V, P)
        return self._grids[steps]


@dataclass(frozen=True, eq=False)
class SturmLiouvilleModel:
    """Coefficients ``p``, ``q``, ``v`` (``L x L``) of a Sturm-Liouville operator.

    Samplers map an array of points to stacks of matrices; ``p`` must be
    hermitian with ``p >= c > 0`` and ``v`` hermitian.
    """

    L: int
    p: Callable
    q: Callable
    v: Callable

    @classmethod
    def from_nodes(cls, nodes, p, q, v):
        p = np.asarray(p, dtype=complex)
        return cls(p.shape[-1], _interp_nodes(nodes, p), _interp_nodes(nodes, q), _interp_nodes(nodes, v))

    @classmethod
    def from_callables(cls, L, p, q, v):
        return cls(L, _vectorize(p), _vectorize(q), _vectorize(v))

    @classmethod
    def free(cls, L=1):
        I = np.eye(L)
        Z = np.zeros((L, L))
        return cls.from_nodes([0.0, 1.0], [I, I], [Z, Z], [Z, Z])


def sturm_liouville_to_hamiltonian(model, check_points=65):
    """Hamiltonian form of a Sturm-Liouville model.

    ``V = [[v - q^* p^-1 q, q^* p^-1], [p^-1 q, -p^-1]]`` and
    ``P = diag(1, 0)``; the separated condition starts in ``(0; 1)``
    (``phi(0) = 0``).

    Raises
    ------
    ContractViolation
        If ``p`` is not uniformly positive or ``v`` not hermitian at the
        check points.
    """
    L = model.L
    x = np.linspace(0.0, 1.0, check_points)
    p = np.asarray(model.p(x), dtype=complex)
    v = np.asarray(model.v(x), dtype=complex)
    if np.max(np.abs(p - dagger(p))) > 1e-12 * max(1.0, np.max(np.abs(p))):
        raise ContractViolation("p(x) is not hermitian")
    if np.max(np.abs(v - dagger(v))) > 1e-12 * max(1.0, np.max(np.abs(v))):
        raise ContractViolation("v(x) is not hermitian")
    if np.min(np.linalg.eigvalsh(p)) <= 0:
        raise ContractViolation("p(x) must be positive definite (p >= c > 0)")

    def V(t):
        p = np.asarray(model.p(t), dtype=complex)
        q = np.asarray(model.q(t), dtype=complex)
        v = np.asarray(model.v(t), dtype=complex)
        pinv = np.linalg.inv(p)
        top = np.concatenate([v - dagger(q) @ pinv @ q, dagger(q) @ pinv], axis=-1)
        bottom = np.concatenate([pinv @ q, -pinv], axis=-1)
        out = np.concatenate([top, bottom], axis=-2)
        return 0.5 * (out + dagger(out))

    Pconst = np.zeros((2 * L, 2 * L), dtype=complex)
    Pconst[:L, :L] = np.eye(L)

    def P(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(Pconst, t.shape + Pconst.shape).copy()

    return HamiltonianSystem(L, V, P, right_dirichlet_frame(L))


# -------------------------------------------------------------- integration


def _rk4(system, E, steps, keep_path=False):
    """Classical RK4 for ``T' = (E J^*P - J^*V) T``, batched over energies."""
    x, JP, JV, _ = system.generators(steps)
    E = np.asarray(E, dtype=float)
    n = 2 * system.L
    h = 1.0 / steps
    e = E[..., None, None]
    T = np.broadcast_to(np.eye(n, dtype=complex), E.shape + (n, n)).copy()
    path = [T] if keep_path else None
    for i in range(steps):
        A0 = e * JP[2 * i] - JV[2 * i]
        Am = e * JP[2 * i + 1] - JV[2 * i + 1]
        A1 = e * JP[2 * i + 2] - JV[2 * i + 2]
        k1 = A0 @ T
        k2 = Am @ (T + 0.5 * h * k1)
        k3 = Am @ (T + 0.5 * h * k2)
        k4 = A1 @ (T + h * k3)
        T = T + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if keep_path:
            path.append(T)
    if keep_path:
        return T, np.stack(path, axis=-3)
    return T


def symplectic_drift(T):
    """``max |T^* J T - J| / ||T||_2^2`` over a stack; scale-free."""
    T = np.asarray(T, dtype=complex)
    n = T.shape[-1] // 2
    Jm = J(n)
    defect = np.max(np.abs(dagger(T) @ Jm @ T - Jm), axis=(-2, -1))
    norm = np.linalg.norm(T, 2, axis=(-2, -1)) ** 2
    return float(np.max(defect / np.maximum(norm, 1.0), initial=0.0))


@dataclass
class FundamentalSolution:
    """``T(x)`` on the RK4 grid for one energy."""

    energy: float
    steps: int
    x: np.ndarray
    matrices: np.ndarray
    diagnostics: dict

    def __call__(self, x):
        """Matrix at the grid point nearest to `x` (grid spacing ``1/steps``)."""
        i = np.clip(np.rint(np.asarray(x) * self.steps).astype(int), 0, self.steps)
        return self.matrices[i]

    @property
    def end(self):
        return self.matrices[-1]


def _integrate(system, E, steps, budget, rtol, max_steps, keep_path=False):
    if steps < MIN_STEPS:
        raise ContractViolation(f"steps must be at least {MIN_STEPS}")
    history = []
    while True:
        out = _rk4(system, E, steps, keep_path)
        T = out[0] if keep_path else out
        drift = symplectic_drift(T)
        ok = drift <= budget
        rich = None
        if ok and rtol is not None:
            T2 = _rk4(system, E, 2 * steps)
            rich = float(
                np.max(np.abs(T2 - T)) / max(1.0, float(np.max(np.abs(T2))))
            )
            ok = rich <= rtol
        history.append({"steps": steps, "drift": drift, "richardson": rich})
        if ok:
            return out, steps, history
        if 2 * steps > max_steps:
            raise IntegrationError(
                f"symplectic drift {drift:.3g} above budget {budget:g} at the step cap {steps}"
            )
        steps *= 2


def fundamental_solution(system, E, steps=DEFAULT_STEPS, budget=DRIFT_BUDGET, rtol=None, max_steps=MAX_STEPS):
    """Fundamental solution at energy `E` with its whole ``x`` history.

    Steps are doubled until the relative symplectic drift at ``x = 1`` is
    within `budget` (and, if `rtol` is given, until a step-doubling
    comparison agrees to `rtol`).

    Raises
    ------
    IntegrationError
        If the budget cannot be met below `max_steps`.
    """
    (T, path), steps, history = _integrate(system, float(E), steps, budget, rtol, max_steps, True)
    x = np.linspace(0.0, 1.0, steps + 1)
    return FundamentalSolution(float(E), steps, x, path, {"history": history})


def end_matrices(system, E, steps=DEFAULT_STEPS, budget=DRIFT_BUDGET, max_steps=MAX_STEPS, rtol=None):
    """``T(1)`` at a batch of energies, and the step count used."""
    T, steps, _ = _integrate(system, E, steps, budget, rtol, max_steps)
    return T, steps


# ------------------------------------------------------------ eigenvalues


def ham_unitary(system, E, bc, steps=DEFAULT_STEPS, budget=DRIFT_BUDGET):
    """Prüfer unitary of the system at energies `E` (batched)."""
    T, _ = end_matrices(system, E, steps, budget)
    return _unitary_from_end(system, T, bc)


def _unitary_from_end(system, T, bc):
    if isinstance(bc, Dirichlet):
        return -stereographic(T @ system.dirichlet_start)
    if isinstance(bc, Periodic):
        return u_hat_k(embed_unitary(T), bc.k)
    if isinstance(bc, General):
        return dagger(stereographic(bc.frame(system.L))) @ stereographic(graph_frame(T))
    raise ContractViolation(f"unknown boundary condition {bc!r}")


def ham_eigenvalue_multiplicity(system, E, bc, steps=DEFAULT_STEPS, tol=RANK_TOL):
    """Number of independent solutions at `E` satisfying `bc`.

    General frames act on ``(Phi(0)_bot, Phi(1)_top, Phi(0)_top, Phi(1)_bot)``.
    """
    T, _ = end_matrices(system, float(E), steps, rtol=KERNEL_RTOL)
    if isinstance(bc, General):
        return intersection_dimension(graph_frame(T), bc.frame(system.L), tol)
    U = _unitary_from_end(system, T, bc)
    return kernel_dimension(U - np.eye(U.shape[-1]), tol, scale=1.0)


def energy_monotonicity_matrix(system, E, steps=DEFAULT_STEPS, budget=DRIFT_BUDGET):
    """``T(1)^* J dT(1)/dE`` as ``int_0^1 T(x)^* P(x) T(x) dx`` (Simpson on the RK4 grid)."""
    sol = fundamental_solution(system, E, steps, budget)
    _, _, _, P = system.generators(sol.steps)
    Pn = P[::2]
    f = dagger(sol.matrices) @ Pn @ sol.matrices
    h = 1.0 / sol.steps
    w = np.ones(sol.steps + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    M = (h / 3.0) * np.tensordot(w, f, axes=(0, 0))
    return 0.5 * (M + dagger(M))


def energy_monotonicity_fd(system, E, h=1e-5, steps=DEFAULT_STEPS):
    """Finite-difference counterpart ``T^* J (T(E+h) - T(E-h)) / 2h``."""
    sol = fundamental_solution(system, E, steps)
    T = _rk4(system, np.array([E - h, E, E + h]), sol.steps)
    return dagger(T[1]) @ J(system.L) @ (T[2] - T[0]) / (2 * h)


def space_prufer_path(system, E, samples=257, steps=None):
    """Lagrangian path ``x -> T(x) Psi_start`` sampled at `samples` points.

    Its passages through ``(0; 1)`` on ``(0, 1)`` count the eigenvalues
    below `E` for the separated condition; see
    :func:`count_by_space_sweep`.
    """
    if samples < 2:
        raise ContractViolation("samples must be at least 2")
    base = max(DEFAULT_STEPS, samples - 1) if steps is None else steps
    sol = fundamental_solution(system, E, base)
    idx = np.unique(np.rint(np.linspace(0, sol.steps, samples)).astype(int))
    frames = sol.matrices[idx] @ system.dirichlet_start
    frames = np.linalg.qr(frames)[0]
    return LagrangianPath(sol.x[idx], frames)


def count_by_space_sweep(system, E, samples=513):
    """Eigenvalues below `E` (separated condition) from the ``x`` sweep."""
    from .indices import intersection_index

    path = space_prufer_path(system, E, samples)
    return intersection_index(path, right_dirichlet_frame(system.L), include_initial=False)


def ham_find_eigenvalues(
    system, bc, emin, emax, tol=DEFAULT_TOL, grid_points=256, steps=DEFAULT_STEPS, budget=DRIFT_BUDGET
):
    """Eigenvalues in ``(emin, emax]`` by scanning monotone phases and bisection.

    The step count is fixed on the scan grid (the largest ``|E|`` is the
    hardest) from the drift budget and a step-doubling comparison, and
    reused for the bisection.

    Raises
    ------
    IntegrationError
        If no step count below the cap meets the drift budget.
    """
    if not emin < emax:
        raise ContractViolation("emin must be smaller than emax")
    if not (1e-12 < tol < 1e-3):
        raise ContractViolation(f"tol must lie in (1e-12, 1e-3), got {tol!r}")
    if grid_points < 2:
        raise ContractViolation("grid_points must be at least 2")
    if isinstance(bc, General):
        bc.frame(system.L)
    grid = np.linspace(emin, emax, grid_points)
    _, steps = end_matrices(system, grid, steps, budget, rtol=SCAN_RTOL)

    def func(E):
        T = _rk4(system, E, steps)
        return _unitary_from_end(system, T, bc)

    brackets, total = locate_crossings(func, grid, tol)
    # integration error splits exact degeneracies by about SCAN_RTOL
    groups = cluster(brackets, max(tol, MERGE_WINDOW * max(1.0, abs(emin), abs(emax))))
    E = np.array([g[3] for g in groups])
    mult = np.array([g[2] for g in groups], dtype=int)
    return SpectralResult(
        E,
        mult,
        str(bc),
        {"steps": steps, "range": [float(emin), float(emax)], "passages": total},
    )
