"""Eigenvalues from monotone eigenphase flows.

The unitary ``U(E)`` attached to a boundary condition has eigenphases that
move counter-clockwise as `E` grows, and ``E`` is an eigenvalue of
multiplicity ``m`` exactly when ``m`` phases sit at zero. Counting zero
passages therefore counts eigenvalues.

Counting on a short interval
----------------------------
Let ``d`` be the principal angle of ``det U(b) / det U(a)``. When the
total motion on ``[a, b]`` is below ``0.5`` rad, ``d`` *is* that motion. The
wrapped phase sum changes by ``d - 2 pi w`` where ``w`` is the number of
phases that wrapped from ``pi`` to ``-pi``, and with ``f`` the number of
phases in ``[-pi, 0)`` the number of zero passages in ``(a, b]`` is
``w - (f(b) - f(a))``. The whole solver reduces to evaluating this count
on brackets that are bisected until they are shorter than the tolerance.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import Dirichlet, General, Periodic
from .errors import CompletenessError, ContractViolation, NumericalWarning, SamplingError
from .jacobi import (
    boundary_derivative_matrix,
    boundary_unitary,
    closing_twist,
    expected_eigenvalue_count,
)
from .linalg import eigenphases, wrap_angle

MAX_STEP = 0.5
MAX_DEPTH = 40
DEFAULT_TOL = 1e-10
PAD = 0.1
BACKSTEP_TOL = 1e-10
MAX_REGRIDS = 6


def gershgorin_bounds(model):
    """Interval containing the spectrum for every corner phase ``|omega| <= 1``.

    Block disc ``n`` has centre range the spectrum of ``V_n`` and radius
    ``||T_n|| + ||T_{n+1}||`` with ``T_{N+1} = T_1``.
    """
    lo, hi = np.inf, -np.inf
    norms = np.linalg.norm(model.T, 2, axis=(1, 2))
    for n in range(model.N):
        ev = np.linalg.eigvalsh(model.V[n])
        r = norms[n] + norms[(n + 1) % model.N]
        lo = min(lo, ev[0] - r)
        hi = max(hi, ev[-1] + r)
    return float(lo), float(hi)


def asymptotic_unitary(k, L):
    """Limit of the Bloch unitary as ``E -> ±inf``; eigenphases ``±pi/2``, each ``L`` times."""
    return closing_twist(k, L)


def _jobs(jobs):
    env = os.environ.get("PRUFER_SPECTRA_JOBS")
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ContractViolation(f"PRUFER_SPECTRA_JOBS must be an integer, got {env!r}")
    return max(1, int(jobs or 1))


def evaluate_unitaries(func, x, jobs=1):
    """``func(x)`` on a 1-D array, optionally split into chunks over threads.

    The chunks are concatenated in input order, so the result does not
    depend on the number of workers.
    """
    x = np.asarray(x, dtype=float)
    jobs = _jobs(jobs)
    if jobs == 1 or x.size < 64:
        return func(x)
    chunks = np.array_split(x, jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(func, chunks))
    return np.concatenate(parts, axis=0)


# --------------------------------------------------------------- counting


@dataclass
class _Samples:
    x: np.ndarray
    phases: np.ndarray
    logdet: np.ndarray
    neg: np.ndarray


def _sample(func, x, jobs=1):
    U = evaluate_unitaries(func, x, jobs)
    th = eigenphases(U)
    return _Samples(np.asarray(x, dtype=float), th, np.angle(np.linalg.det(U)), np.sum(th < 0, axis=-1))


def _branch_steps(prev, cur):
    """Per-branch motion between two sorted phase lists (stacked).

    Tries every cyclic shift of `cur` and keeps the one with least total
    absolute motion; returns the signed steps for that shift.
    """
    m = prev.shape[-1]
    shifts = np.stack([np.roll(cur, -w, axis=-1) for w in range(m)], axis=-2)
    steps = np.angle(np.exp(1j * (shifts - prev[..., None, :])))
    best = np.argmin(np.sum(np.abs(steps), axis=-1), axis=-1)
    return np.take_along_axis(steps, best[..., None, None], axis=-2)[..., 0, :]


def _interval_counts(sa, sb):
    """Zero passages on each ``(a, b]`` plus the det motion ``d``."""
    d = np.angle(np.exp(1j * (sb.logdet - sa.logdet)))
    dsum = np.sum(sb.phases, axis=-1) - np.sum(sa.phases, axis=-1)
    wraps = np.rint((d - dsum) / (2 * np.pi)).astype(int)
    return wraps - (sb.neg - sa.neg), d


def _take(s, idx):
    return _Samples(s.x[idx], s.phases[idx], s.logdet[idx], s.neg[idx])


def _adequate_counts(func, x, max_step=MAX_STEP, max_depth=MAX_DEPTH, jobs=1):
    """Sample `func` at `x`, splitting intervals until each is adequate.

    An interval is adequate when its det motion lies in ``[0, max_step]``,
    no matched branch steps backwards, and its two halves give consistent
    counts.

    Returns
    -------
    left : _Samples
        Samples at the left ends of the adequate intervals, sorted.
    right : ndarray
        Right ends.
    counts : ndarray of int
        Zero passages per interval.
    last : _Samples
        The sample at the right end of the whole range.
    """
    x = np.asarray(x, dtype=float)
    s = _sample(func, x, jobs)
    sa, sb = _take(s, slice(0, -1)), _take(s, slice(1, None))
    last = _take(s, slice(len(x) - 1, None))
    acc_left, acc_right, acc_counts = [], [], []
    for depth in range(max_depth + 1):
        c, d = _interval_counts(sa, sb)
        mid = 0.5 * (sa.x + sb.x)
        sm = _sample(func, mid, jobs)
        c1, d1 = _interval_counts(sa, sm)
        c2, d2 = _interval_counts(sm, sb)
        # a phase that turned almost fully inside the interval shows up as a
        # small backward step of its branch
        back = np.minimum(
            np.min(_branch_steps(sa.phases, sb.phases), axis=-1),
            np.minimum(
                np.min(_branch_steps(sa.phases, sm.phases), axis=-1),
                np.min(_branch_steps(sm.phases, sb.phases), axis=-1),
            ),
        )
        ok = (
            (back >= -BACKSTEP_TOL)
            & (d >= -1e-9)
            & (d <= max_step)
            & (d1 >= -1e-9)
            & (d2 >= -1e-9)
            & (np.abs(d1 + d2 - d) <= 1e-9 + 1e-6 * np.abs(d))
            & (c1 + c2 == c)
        )
        acc_left.append(_take(sa, ok))
        acc_right.append(sb.x[ok])
        acc_counts.append(c[ok])
        bad = ~ok
        if not np.any(bad):
            break
        if depth == max_depth:
            i = int(np.nonzero(bad)[0][0])
            raise SamplingError(
                "eigenphase motion could not be resolved by refinement",
                (float(sa.x[i]), float(sb.x[i])),
            )
        sa, sm_bad, sb = _take(sa, bad), _take(sm, bad), _take(sb, bad)
        sa, sb = _concat(sa, sm_bad), _concat(sm_bad, sb)
    left = _concat(*acc_left)
    right = np.concatenate(acc_right)
    counts = np.concatenate(acc_counts)
    order = np.argsort(left.x, kind="stable")
    return _take(left, order), right[order], counts[order], last


def _concat(*parts):
    return _Samples(
        np.concatenate([p.x for p in parts]),
        np.concatenate([p.phases for p in parts]),
        np.concatenate([p.logdet for p in parts]),
        np.concatenate([p.neg for p in parts]),
    )


def locate_crossings(func, x, tol, max_step=MAX_STEP, jobs=1):
    """Zero passages of the eigenphases of ``func(x)`` on ``(x[0], x[-1]]``.

    `func` maps a 1-D array of parameters to a stack of unitaries whose
    eigenphases increase with the parameter. Brackets holding passages are
    bisected in lockstep until shorter than `tol`.

    Returns
    -------
    brackets : list of (lo, hi, count)
        Sorted, disjoint brackets of width ``<= tol`` and their passage counts.
    total : int
    """
    left, right, counts, _ = _adequate_counts(func, x, max_step, jobs=jobs)
    idx = np.nonzero(counts)[0]
    lo = left.x[idx]
    hi = right[idx]
    cnt = counts[idx]
    sl = _take(left, idx)
    total = int(np.sum(counts))
    done = []
    while lo.size:
        width = hi - lo
        floor = 8 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))
        fin = (width <= tol) | (width <= floor)
        for a, b, c in zip(lo[fin], hi[fin], cnt[fin]):
            done.append((float(a), float(b), int(c)))
        lo, hi, cnt = lo[~fin], hi[~fin], cnt[~fin]
        sl = _take(sl, ~fin)
        if not lo.size:
            break
        mid = 0.5 * (lo + hi)
        sm = _sample(func, mid, jobs)
        cl, _ = _interval_counts(sl, sm)
        cl = np.clip(cl, 0, cnt)
        cr = cnt - cl
        left = cl > 0
        right = cr > 0
        lo = np.concatenate([lo[left], mid[right]])
        hi = np.concatenate([mid[left], hi[right]])
        cnt = np.concatenate([cl[left], cr[right]])
        sl = _Samples(
            np.concatenate([sl.x[left], sm.x[right]]),
            np.concatenate([sl.phases[left], sm.phases[right]]),
            np.concatenate([sl.logdet[left], sm.logdet[right]]),
            np.concatenate([sl.neg[left], sm.neg[right]]),
        )
    done.sort()
    return done, total


def cluster(brackets, window):
    """Merge brackets whose midpoints lie within `window`, summing counts."""
    out = []
    for a, b, c in brackets:
        m = 0.5 * (a + b)
        if out and m - out[-1][3] <= window:
            lo, hi, cnt, _, wsum = out[-1]
            wsum = wsum + c * m
            out[-1] = [lo, b, cnt + c, m, wsum]
        else:
            out.append([a, b, c, m, c * m])
    return [(lo, hi, cnt, wsum / cnt) for lo, hi, cnt, _, wsum in out]


# ----------------------------------------------------------------- results


@dataclass
class SpectralResult:
    """Eigenvalues with multiplicities, ascending."""

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    boundary: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self):
        return int(np.sum(self.multiplicities))

    def expanded(self):
        """Eigenvalues repeated according to multiplicity."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    def to_dict(self):
        return {
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "multiplicities": [int(m) for m in self.multiplicities],
            "total": self.total,
        }


@dataclass
class EigenphaseFlow:
    """Eigenphases of a unitary path sampled on an energy grid.

    ``phases[i, j]`` is branch `j` at ``energies[i]``, wrapped into
    ``[-pi, pi)``. Branches are matched between neighbouring samples, so
    ``unwrapped()`` is nondecreasing along each column.
    """

    energies: np.ndarray
    phases: np.ndarray
    boundary: str = ""

    @property
    def branches(self):
        return self.phases.shape[1]

    def unwrapped(self):
        return np.unwrap(self.phases, axis=0)

    def zero_crossings(self):
        """``(E_left, E_right, branch)`` for every upward passage through zero."""
        th = self.phases
        out = []
        for i in range(len(self.energies) - 1):
            for j in range(self.branches):
                a, b = th[i, j], th[i + 1, j]
                if a < 0 <= b and b - a < np.pi:
                    out.append((float(self.energies[i]), float(self.energies[i + 1]), j))
        return out

    def crossing_energies(self):
        """Linear-interpolated energies of the zero passages, ascending."""
        E, th = self.energies, self.phases
        res = []
        for a, b, j in self.zero_crossings():
            i = int(np.searchsorted(E, a))
            ta, tb = th[i, j], th[i + 1, j]
            res.append(a - ta * (b - a) / (tb - ta) if tb != ta else b)
        return np.sort(np.array(res))


def match_branches(prev, cur):
    """Reorder `cur` (sorted phases) to continue the branches in `prev`.

    Phases move counter-clockwise by less than the adequacy bound, so the
    sorted list only changes by cyclic shifts where phases wrap at ``pi``;
    the shift with the smallest total motion is used.
    """
    steps = _branch_steps(prev, cur)
    return wrap_angle(prev + steps)


def _boundary_func(model, bc):
    def func(E):
        return boundary_unitary(model, E, bc)

    return func


def default_grid_points(model):
    return 64 * model.N * model.L


def scan_range(model, pad=PAD):
    lo, hi = gershgorin_bounds(model)
    w = hi - lo
    if w == 0:
        w = 1.0
    return lo - pad * w, hi + pad * w


def scan_flow(model, bc, grid_points=None, e_range=None, max_step=MAX_STEP, jobs=1):
    """Branch-matched eigenphases over the padded Gershgorin range.

    The uniform grid is refined wherever an interval is not adequate
    (det motion above `max_step` or inconsistent halves).
    """
    _check_bc(model, bc)
    n = default_grid_points(model) if grid_points is None else int(grid_points)
    if n < 2:
        raise ContractViolation("grid_points must be at least 2")
    lo, hi = scan_range(model) if e_range is None else e_range
    left, _, _, last = _adequate_counts(
        _boundary_func(model, bc), np.linspace(lo, hi, n), max_step, jobs=jobs
    )
    s = _concat(left, last)
    th = s.phases.copy()
    for i in range(1, th.shape[0]):
        th[i] = match_branches(th[i - 1], th[i])
    return EigenphaseFlow(s.x, th, str(bc))


def _check_bc(model, bc):
    if not isinstance(bc, (Dirichlet, Periodic, General)):
        raise ContractViolation(f"unknown boundary condition {bc!r}")
    if isinstance(bc, General):
        bc.frame(model.L)


def _compactified_func(model, bc):
    def func(t):
        return boundary_unitary(model, np.tan(t), bc)

    return func


def find_eigenvalues(model, bc, tol=DEFAULT_TOL, grid_points=None, jobs=1):
    """All eigenvalues of the chain with boundary condition `bc`.

    Phases are scanned on a grid over the padded Gershgorin range (general
    conditions: on ``E = tan t`` over the whole line), passages are
    bracketed by bisection to width `tol`, and brackets within
    ``max(tol, 1e-9 * spectral width)`` are merged into one eigenvalue.

    Each multiplicity is checked against the number of eigenphases at the
    located energy that lie within the reachable distance of zero; a
    mismatch is recorded in ``diagnostics['verification']`` and warned
    about.

    Raises
    ------
    ConditioningError
        If some ``T_n`` is nearly singular.
    CompletenessError
        If the multiplicities do not add up to ``N L`` (less the crossings
        at infinity for general conditions).
    """
    if not (1e-12 < tol < 1e-3):
        raise ContractViolation(f"tol must lie in (1e-12, 1e-3), got {tol!r}")
    _check_bc(model, bc)
    model.check_conditioning()
    expected = expected_eigenvalue_count(model, bc)
    n = default_grid_points(model) if grid_points is None else int(grid_points)
    n = max(n, 2)
    # a phase turning fully inside one grid cell can hide from every local
    # test; the known total exposes it, so retry on a finer grid
    for regrid in range(MAX_REGRIDS + 1):
        brackets, total, lo, hi = _brackets(model, bc, n, tol, jobs)
        if total == expected:
            break
        n *= 2
    window = max(tol, 1e-9 * (hi - lo))
    groups = cluster(brackets, window)
    E = np.array([g[3] for g in groups])
    mult = np.array([g[2] for g in groups], dtype=int)
    diag = {
        "scan_range": [float(lo), float(hi)],
        "grid_points": n,
        "regrids": regrid,
        "brackets": [[a, b, c] for a, b, c in brackets],
        "expected_total": expected,
    }
    diag["verification"] = verify_multiplicities(model, bc, groups)
    res = SpectralResult(E, mult, str(bc), diag)
    if res.total != expected or total != expected:
        raise CompletenessError(
            f"found {res.total} eigenvalues, expected {expected}",
            {"found": res.total, "expected": expected, "passages": total, **diag},
        )
    return res


def _brackets(model, bc, n, tol, jobs):
    if isinstance(bc, General):
        edge = 0.5 * np.pi * (1 - 1e-9)
        x = np.linspace(-edge, edge, n)
        # coarse brackets in t = arctan E, then bisected in E itself
        brackets, total = locate_crossings(_compactified_func(model, bc), x, 1e-6, jobs=jobs)
        brackets = [(float(np.tan(a)), float(np.tan(b)), c) for a, b, c in brackets]
        brackets = _refine_energy(model, bc, brackets, tol, jobs)
        lo, hi = (brackets[0][0], brackets[-1][1]) if brackets else (0.0, 1.0)
    else:
        lo, hi = scan_range(model)
        brackets, total = locate_crossings(
            _boundary_func(model, bc), np.linspace(lo, hi, n), tol, jobs=jobs
        )
    return brackets, total, lo, hi


def _refine_energy(model, bc, brackets, tol, jobs):
    """Bisect compactified brackets further in energy until width <= tol."""
    out = []
    func = _boundary_func(model, bc)
    for a, b, c in brackets:
        if b - a <= tol:
            out.append((a, b, c))
            continue
        sub, _ = locate_crossings(func, np.array([a, b]), tol, jobs=jobs)
        out.extend(sub)
    out.sort()
    return out


def verify_multiplicities(model, bc, groups, base_tol=1e-8):
    """Compare each multiplicity with the eigenphases found near zero.

    At the located energy a phase that crosses inside the bracket can be
    at most ``speed * width`` from zero, with ``speed`` the largest
    eigenvalue of the phase-velocity matrix.
    """
    report = []
    for lo, hi, cnt, E in groups:
        U = boundary_unitary(model, E, bc)
        D = boundary_derivative_matrix(model, E, bc)
        speed = float(np.max(np.linalg.eigvalsh(D)))
        reach = base_tol + 2 * speed * (hi - lo)
        near = int(np.sum(np.abs(eigenphases(U)) <= reach))
        report.append({"energy": float(E), "multiplicity": int(cnt), "kernel": near})
        if near != cnt:
            warnings.warn(
                f"multiplicity {cnt} at E={E:.12g} but {near} eigenphases near zero",
                NumericalWarning,
                stacklevel=3,
            )
    return report


def compactified_energy_path(model, samples=None, adaptive=True):
    """Closed Lagrangian path ``t -> graph plane of the chain at E = tan t``.

    Runs over ``t`` in ``[-pi/2, pi/2]``; both ends sit on the common
    limit plane at infinite energy, so the path is closed. Its
    intersection index with a boundary frame equals the number of
    eigenvalues for that condition.

    With `adaptive` the uniform grid of `samples` points is refined where
    the eigenphase motion between samples is not resolved.
    """
    from .indices import LagrangianPath
    from .jacobi import graph_unitary
    from .symplectic import psi_k_unitary

    L2 = 2 * model.L
    base = psi_k_unitary(0.0, model.L) @ closing_twist(0.0, model.L)
    edge = 0.5 * np.pi - 1e-12

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(base, t.shape + (L2, L2)).copy()
        inner = np.abs(t) < edge
        if np.any(inner):
            out[inner] = base @ graph_unitary(model, np.tan(t[inner]))
        return out

    n = 64 * model.N * model.L + 1 if samples is None else int(samples)
    t = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n)
    if adaptive:
        # the phases of base @ W are monotone, so the solver's adequacy
        # tests can pick the samples
        left, _, _, last = _adequate_counts(evaluate, t)
        t = np.concatenate([left.x, last.x])
    return LagrangianPath.from_unitaries(t, evaluate(t), True, evaluate)
