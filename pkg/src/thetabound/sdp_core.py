"""Dense symmetric linear algebra and convex feasibility for small Gram problems.

Everything here operates on full symmetric matrices of modest order (the
solver never needs more than K+1 <= ~32).  The eigensolver is a cyclic Jacobi
sweep, which at these orders is unconditionally robust; the feasibility kernel
is Dykstra's alternating projection between the PSD cone and an entrywise box.
Both inner loops are jit-compiled since Dykstra routinely runs tens of
thousands of iterations.

A feasibility problem is "box plus PSD": the box fixes the diagonal, bounds
off-diagonal entries, and encodes equality constraints as lower == upper.
Infeasibility is reported heuristically (no dual certificate): the caller is
expected to treat "infeasible" as "no certified feasible point found".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

JACOBI_SWEEP_BUDGET = 100
DYKSTRA_TOL = 1e-8
DYKSTRA_MAX_ITER = 50_000
# iterations without relative gap improvement before declaring a stall
DYKSTRA_STALL = 2_000


class NoConvergence(RuntimeError):
    pass


class NotPSD(ValueError):
    pass


def symmetrize(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + S.T)


@njit(cache=True)
def _jacobi_kernel(a, v, off_target, max_sweeps):  # pragma: no cover - jitted
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) <= off_target:
            return sweep, True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    off = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off += a[i, j] * a[i, j]
    return max_sweeps, math.sqrt(2.0 * off) <= off_target


@njit(cache=True)
def _psd_project_kernel(s, jac_rel, max_sweeps):  # pragma: no cover - jitted
    n = s.shape[0]
    a = np.empty((n, n))
    fro = 0.0
    for i in range(n):
        for j in range(n):
            a[i, j] = 0.5 * (s[i, j] + s[j, i])
            fro += a[i, j] * a[i, j]
    fro = math.sqrt(fro)
    v = np.eye(n)
    target = jac_rel * fro if fro > 0.0 else jac_rel
    _jacobi_kernel(a, v, target, max_sweeps)
    out = np.zeros((n, n))
    for r in range(n):
        lam = a[r, r]
        if lam > 0.0:
            for i in range(n):
                vir = v[i, r]
                for j in range(n):
                    out[i, j] += lam * vir * v[j, r]
    for i in range(n):
        for j in range(i + 1, n):
            m = 0.5 * (out[i, j] + out[j, i])
            out[i, j] = m
            out[j, i] = m
    return out


@njit(cache=True)
def _dykstra_kernel(
    lower, upper, start, tol, max_iter, stall, jac_rel, max_sweeps
):  # pragma: no cover - jitted
    n = start.shape[0]
    x = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            xv = 0.5 * (start[i, j] + start[j, i])
            if xv < lower[i, j]:
                xv = lower[i, j]
            elif xv > upper[i, j]:
                xv = upper[i, j]
            x[i, j] = xv
    p = np.zeros((n, n))
    q = np.zeros((n, n))
    best = 1e300
    last_improve = 0
    gap = 1e300
    it = 0
    for it in range(1, max_iter + 1):
        s = x + p
        y = _psd_project_kernel(s, jac_rel, max_sweeps)
        p = s - y
        t = y + q
        gap = 0.0
        for i in range(n):
            for j in range(n):
                xv = t[i, j]
                if xv < lower[i, j]:
                    xv = lower[i, j]
                elif xv > upper[i, j]:
                    xv = upper[i, j]
                d = y[i, j] - xv
                gap += d * d
                q[i, j] = t[i, j] - xv
                x[i, j] = xv
        gap = math.sqrt(gap)
        if gap <= tol:
            return x, it, True
        if gap < best * (1.0 - 1e-4):
            best = gap
            last_improve = it
        elif it - last_improve >= stall and gap > 10.0 * tol:
            return x, it, False
    return x, it, False


def eigh(S, tol: float = 1e-12, max_sweeps: int = JACOBI_SWEEP_BUDGET):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvector columns).  Sweeps stop once
    the off-diagonal Frobenius norm drops below tol * ||S||_F, so the
    reconstruction error ||S - V diag(w) V^T||_F is bounded by the same
    amount.  Raises NoConvergence if the sweep budget is exhausted.
    """
    a = symmetrize(S).copy()
    n = a.shape[0]
    v = np.eye(n)
    fro = float(np.linalg.norm(a))
    target = tol * fro if fro > 0.0 else tol
    _, converged = _jacobi_kernel(a, v, target, max_sweeps)
    if not converged:
        raise NoConvergence(
            f"Jacobi sweeps exhausted ({max_sweeps}) for order {n} matrix"
        )
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def psd_project(S, tol: float = 1e-13, max_sweeps: int = JACOBI_SWEEP_BUDGET):
    """Frobenius-nearest positive semidefinite matrix: clamp eigenvalues at 0."""
    return _psd_project_kernel(symmetrize(S), tol, max_sweeps)


@dataclass(frozen=True)
class EntryBox:
    """Entrywise bounds on a symmetric matrix; equalities have lower == upper."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = symmetrize(self.lower)
        up = symmetrize(self.upper)
        if lo.shape != up.shape or lo.shape[0] != lo.shape[1]:
            raise ValueError("box bounds must be square and congruent")
        if np.any(lo > up):
            raise ValueError("box has lower > upper somewhere")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def order(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class FeasibilityReport:
    point: np.ndarray
    residual_psd: float
    residual_box: float
    iterations: int
    feasible: bool


def box_project(S, box: EntryBox) -> np.ndarray:
    """Clamp each entry of S into the box (symmetry preserved)."""
    return np.clip(symmetrize(S), box.lower, box.upper)


def _psd_distance(S) -> float:
    w, _ = eigh(S)
    neg = np.minimum(w, 0.0)
    return float(np.sqrt((neg * neg).sum()))


def dykstra_feasibility(
    box: EntryBox,
    tol: float = DYKSTRA_TOL,
    max_iter: int = DYKSTRA_MAX_ITER,
    start: np.ndarray | None = None,
    stall: int = DYKSTRA_STALL,
) -> FeasibilityReport:
    """Search for a PSD matrix inside the box by Dykstra alternating projections.

    Feasible means both residuals ended up <= tol.  An exhausted budget (or a
    gap that stopped shrinking) is reported as infeasible; that verdict is
    heuristic, so callers must only rely on the *feasible* direction.
    """
    if start is None:
        start = np.zeros((box.order, box.order))
    x, iters, _ = _dykstra_kernel(
        box.lower,
        box.upper,
        np.asarray(start, dtype=float),
        tol,
        max_iter,
        stall,
        1e-13,
        JACOBI_SWEEP_BUDGET,
    )
    res_box = float(np.linalg.norm(x - box_project(x, box)))
    res_psd = _psd_distance(x)
    feasible = max(res_box, res_psd) <= tol
    return FeasibilityReport(
        point=x,
        residual_psd=res_psd,
        residual_box=res_box,
        iterations=iters,
        feasible=feasible,
    )


def gram_factor(G, tol: float = 1e-9):
    """Factor a (near-)PSD Gram matrix into vectors.

    Returns an r x order matrix whose columns v_i satisfy
    <v_i, v_j> ~= G[i][j]; r is the numerical rank (eigenvalues > tol).
    Eigenvalues in [-tol, 0) are clamped to zero; anything below -tol raises
    NotPSD.
    """
    w, V = eigh(G)
    if w[0] < -tol:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} below -{tol:g}")
    keep = w > tol
    r = int(keep.sum())
    if r == 0:
        return np.zeros((0, G.shape[0]))
    return np.sqrt(w[keep])[:, None] * V[:, keep].T
