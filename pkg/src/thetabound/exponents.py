"""Cut-off rate, expurgated coefficient, and the simplex quadratic they share.

Both rates reduce to

    min_P  P^T A P   over the probability simplex,

with A = B for the cut-off rate and A = B^(1/rho) entrywise for the
expurgated coefficient.  For PSD A the problem is convex and the projected
gradient method below finds the global minimum from any start; past the
point where the entrywise power stops being PSD the problem can be
indefinite, so the optimizer is run from a fixed multi-start set (uniform,
every vertex, seeded random) and the best local minimum is reported with
``certified=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import BhattacharyyaMatrix, _freeze

GRAD_TOL = 1e-10
MAX_ITER = 10_000
N_RANDOM_STARTS = 8
START_SEED = 20240801
PSD_TOL = 1e-9
KRON_ORDER_CAP = 64


class OrderOverflow(ValueError):
    pass


@dataclass(frozen=True)
class ExponentResult:
    value_nats: float
    distribution: np.ndarray
    starts_used: int
    best_start_kind: str  # "uniform" | "vertex" | "random"
    certified: bool


def simplex_project(c: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    n = c.shape[0]
    u = np.sort(c)[::-1]
    css = (np.cumsum(u) - 1.0) / np.arange(1, n + 1)
    k = np.nonzero(u > css)[0][-1]
    return np.maximum(c - css[k], 0.0)


def _pg_descend(A: np.ndarray, P0: np.ndarray, max_iter: int, grad_tol: float):
    """Projected gradient with Armijo backtracking from a single start."""
    P = P0.copy()
    f = float(P @ A @ P)
    for _ in range(max_iter):
        g = 2.0 * (A @ P)
        eta = 1.0
        # Armijo: accept the first step with sufficient decrease
        for _ in range(40):
            Pn = simplex_project(P - eta * g)
            fn = float(Pn @ A @ Pn)
            if fn <= f + 1e-4 * float(g @ (Pn - P)):
                break
            eta *= 0.5
        else:
            break
        step = float(np.linalg.norm(Pn - P))
        P, f = Pn, fn
        if step <= grad_tol:
            break
    return f, P


def min_quadratic_simplex(
    A,
    max_iter: int = MAX_ITER,
    grad_tol: float = GRAD_TOL,
    n_random: int = N_RANDOM_STARTS,
    seed: int = START_SEED,
):
    """Minimize P^T A P over the simplex; returns (value, distribution)."""
    value, P, _, _ = _min_quadratic_details(A, max_iter, grad_tol, n_random, seed)
    return value, P


def _min_quadratic_details(A, max_iter, grad_tol, n_random, seed):
    A = 0.5 * (np.asarray(A, dtype=float) + np.asarray(A, dtype=float).T)
    K = A.shape[0]
    if K == 1:
        return float(A[0, 0]), np.ones(1), 1, "uniform"
    rng = np.random.default_rng(seed)
    starts = [("uniform", np.full(K, 1.0 / K))]
    for i in range(K):
        e = np.zeros(K)
        e[i] = 1.0
        starts.append(("vertex", e))
    for _ in range(n_random):
        starts.append(("random", rng.dirichlet(np.ones(K))))
    best_f = math.inf
    best_P = starts[0][1]
    best_kind = "uniform"
    for kind, P0 in starts:
        f, P = _pg_descend(A, P0, max_iter, grad_tol)
        if f < best_f - 1e-15:
            best_f, best_P, best_kind = f, P, kind
    return best_f, best_P, len(starts), best_kind


def _entrywise_power(bm: BhattacharyyaMatrix, inv_rho: float) -> np.ndarray:
    """B^(1/rho) entrywise with the 0^(1/rho) = 0 convention."""
    A = np.where(bm.B > 0.0, bm.B, 0.0) ** inv_rho
    A[bm.support_disjoint] = 0.0
    np.fill_diagonal(A, 1.0)
    return A


def _is_psd(A: np.ndarray, tol: float = PSD_TOL) -> bool:
    return float(np.linalg.eigvalsh(A).min()) >= -tol


def cutoff_rate(bm: BhattacharyyaMatrix) -> ExponentResult:
    """R1 = -log min_P P^T B P.  B is PSD, so the minimum is global."""
    value, P, used, kind = _min_quadratic_details(
        bm.B, MAX_ITER, GRAD_TOL, N_RANDOM_STARTS, START_SEED
    )
    return ExponentResult(
        value_nats=-math.log(value),
        distribution=P,
        starts_used=used,
        best_start_kind=kind,
        certified=True,
    )


def expurgated_coeff(bm: BhattacharyyaMatrix, rho: float) -> ExponentResult:
    """Gallager's E_x(rho) = -rho log min_P P^T B^(1/rho) P.

    Beyond the entrywise-power PSD range the quadratic is indefinite; the
    returned value is then the best local minimum over the start set and is
    flagged ``certified=False`` (an overestimate of the inner minimum only
    underestimates E_x).
    """
    if rho < 1.0:
        raise ValueError(f"rho must be >= 1, got {rho}")
    A = _entrywise_power(bm, 1.0 / rho)
    value, P, used, kind = _min_quadratic_details(
        A, MAX_ITER, GRAD_TOL, N_RANDOM_STARTS, START_SEED
    )
    return ExponentResult(
        value_nats=-rho * math.log(value),
        distribution=P,
        starts_used=used,
        best_start_kind=kind,
        certified=_is_psd(A),
    )


def kron_power_bhatt(bm: BhattacharyyaMatrix, n: int) -> BhattacharyyaMatrix:
    """Bhattacharyya matrix of the n-fold product channel, n in {1, 2}.

    Entries multiply coordinatewise and supports are disjoint as soon as any
    coordinate pair is disjoint.
    """
    if n not in (1, 2):
        raise ValueError(f"only n in {{1, 2}} supported, got {n}")
    if n == 1:
        return bm
    K2 = bm.K * bm.K
    if K2 > KRON_ORDER_CAP:
        raise OrderOverflow(f"order {bm.K}^2 = {K2} exceeds cap {KRON_ORDER_CAP}")
    B2 = np.kron(bm.B, bm.B)
    d = bm.support_disjoint
    disjoint2 = np.kron(d, np.ones_like(d)) + np.kron(np.ones_like(d), d) > 0
    B2 = 0.5 * (B2 + B2.T)
    B2[disjoint2] = 0.0
    np.fill_diagonal(B2, 1.0)
    np.fill_diagonal(disjoint2, False)
    return BhattacharyyaMatrix(B=_freeze(B2), support_disjoint=_freeze(disjoint2))
