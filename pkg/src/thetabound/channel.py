"""Discrete memoryless channel model and Bhattacharyya-level geometry.

A channel is a row-stochastic K x J matrix W.  Each input symbol x has a unit
"state vector" psi_x = elementwise sqrt of row x, so that

    B[x][x'] = sum_y sqrt(W(y|x) W(y|x')) = <psi_x, psi_x'>

is the Bhattacharyya coefficient of the pair.  Two inputs are confusable
exactly when their output supports intersect; that relation is computed from
the exact zero pattern of W, never from floating-point values of B.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-9


class ChannelError(ValueError):
    """Base class for channel construction/usage errors."""


class EmptyMatrix(ChannelError):
    pass


class NegativeEntry(ChannelError):
    pass


class NonStochasticRow(ChannelError):
    pass


class OutOfRange(ChannelError):
    pass


class SameSymbol(ChannelError):
    pass


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Channel:
    """Row-stochastic transition matrix with K inputs and J outputs."""

    W: np.ndarray
    name: str = ""

    @property
    def K(self) -> int:
        return self.W.shape[0]

    @property
    def J(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class BhattacharyyaMatrix:
    """Gram matrix of the channel state vectors plus exact confusability.

    ``B`` is symmetric PSD with unit diagonal.  ``support_disjoint[x][x']`` is
    True exactly when rows x and x' of W have non-overlapping supports, in
    which case B[x][x'] is exactly 0.
    """

    B: np.ndarray
    support_disjoint: np.ndarray

    @property
    def K(self) -> int:
        return self.B.shape[0]


def channel_from_matrix(rows, name: str = "") -> Channel:
    """Validate a K x J probability matrix and wrap it as a Channel.

    Raises EmptyMatrix, NegativeEntry, or NonStochasticRow (row sum off by
    more than 1e-9).
    """
    W = np.asarray(rows, dtype=float)
    if W.size == 0 or W.ndim != 2:
        raise EmptyMatrix("channel matrix must be a nonempty 2-d array")
    if np.any(W < 0):
        i, j = np.argwhere(W < 0)[0]
        raise NegativeEntry(f"W[{i}][{j}] = {W[i, j]} is negative")
    sums = W.sum(axis=1)
    bad = np.where(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
    if bad.size:
        raise NonStochasticRow(
            f"row {bad[0]} sums to {sums[bad[0]]:.12g}, expected 1 within {ROW_SUM_TOL:g}"
        )
    return Channel(W=_freeze(W), name=name)


def bsc(eps: float, name: str = "") -> Channel:
    """Binary symmetric channel with crossover probability eps in [0, 1/2]."""
    if not 0.0 <= eps <= 0.5:
        raise OutOfRange(f"bsc crossover {eps} outside [0, 1/2]")
    return channel_from_matrix(
        [[1.0 - eps, eps], [eps, 1.0 - eps]], name=name or f"bsc({eps:g})"
    )


def noisy_typewriter(K: int, q: float, name: str = "") -> Channel:
    """Cyclic channel: input x goes to x with prob 1-q, to x+1 mod K with prob q."""
    if K < 2:
        raise OutOfRange(f"noisy typewriter needs K >= 2, got {K}")
    if not 0.0 <= q <= 1.0:
        raise OutOfRange(f"crossover {q} outside [0, 1]")
    W = np.zeros((K, K))
    for x in range(K):
        W[x, x] = 1.0 - q
        W[x, (x + 1) % K] += q
    return channel_from_matrix(W, name=name or f"typewriter({K},{q:g})")


def load_channel(path) -> Channel:
    """Read a channel from a JSON file {"name": ..., "W": [[...], ...]}.

    Exact zeros must be written as 0 in the file; they define the
    confusability structure.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "W" not in doc:
        raise EmptyMatrix(f"{path}: missing 'W' entry")
    return channel_from_matrix(doc["W"], name=str(doc.get("name", "")))


def bhattacharyya_matrix(ch: Channel) -> BhattacharyyaMatrix:
    """Gram matrix of state vectors and the exact support-disjointness relation."""
    sq = np.sqrt(ch.W)
    B = sq @ sq.T
    # exact structural zeros: supports computed from W == 0, not from B
    support = (ch.W > 0.0).astype(np.int64)
    disjoint = (support @ support.T) == 0
    B = 0.5 * (B + B.T)
    np.fill_diagonal(B, 1.0)
    B[disjoint] = 0.0
    np.clip(B, 0.0, 1.0, out=B)
    np.fill_diagonal(disjoint, False)
    return BhattacharyyaMatrix(B=_freeze(B), support_disjoint=_freeze(disjoint))


def confusability_edges(bm: BhattacharyyaMatrix) -> list[tuple[int, int]]:
    """Unordered confusable pairs {x, x'}: supports intersect, x != x'."""
    K = bm.K
    return [
        (x, xp)
        for x in range(K)
        for xp in range(x + 1, K)
        if not bm.support_disjoint[x, xp]
    ]


def _chernoff_objective(wx: np.ndarray, wxp: np.ndarray):
    """Return g(s) = sum_y wx^(1-s) wxp^s restricted to the common support."""
    mask = (wx > 0) & (wxp > 0)
    if not mask.any():
        return None
    la = np.log(wx[mask])
    lb = np.log(wxp[mask])

    def g(s: float) -> float:
        return float(np.exp((1.0 - s) * la + s * lb).sum())

    return g


def chernoff_exponent(
    ch: Channel, x: int, xp: int, s_tol: float = 1e-10
) -> tuple[float, float]:
    """Best pairwise discrimination exponent for inputs x != x'.

    Minimizes g(s) = sum_y W(y|x)^(1-s) W(y|x')^s over s in [0, 1] by ternary
    search (g is convex in s) and returns (-log min, argmin).  Disjoint
    supports give (inf, 0.5).
    """
    if x == xp:
        raise SameSymbol(f"need two distinct inputs, got x = x' = {x}")
    g = _chernoff_objective(ch.W[x], ch.W[xp])
    if g is None:
        return math.inf, 0.5
    lo, hi = 0.0, 1.0
    while hi - lo > s_tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if g(m1) <= g(m2):
            hi = m2
        else:
            lo = m1
    s_star = 0.5 * (lo + hi)
    return -math.log(g(s_star)), s_star


def is_pairwise_reversible(ch: Channel, tol: float = 1e-8) -> bool:
    """True when every confusable pair attains its Chernoff minimum at s = 1/2.

    The check is on the summed value: g(1/2) must be within ``tol`` (absolute)
    of min_s g(s).
    """
    bm = bhattacharyya_matrix(ch)
    for x, xp in confusability_edges(bm):
        g = _chernoff_objective(ch.W[x], ch.W[xp])
        exponent, _ = chernoff_exponent(ch, x, xp)
        if g(0.5) - math.exp(-exponent) > tol:
            return False
    return True
