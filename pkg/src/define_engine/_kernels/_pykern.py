"""Pure-numpy implementations of the numeric kernels.

Used whenever the compiled extension is unavailable or explicitly disabled
via DEFINE_KERNELS=python. Inputs are validated and made contiguous by the
dispatcher in __init__; these functions assume clean float64 arrays.
"""

from __future__ import annotations

import numpy as np


def accumulate_outer(winners: np.ndarray, losers: np.ndarray) -> np.ndarray:
    """Sum of outer products winner_k (x) loser_k with the diagonal zeroed.

    winners, losers: (K, M) arrays of flattened profile vectors, row k holding
    the preferred / dispreferred profile of pair k. Returns the (M, M) weight
    matrix W with W[x, y] = sum_k winners[k, x] * losers[k, y], x != y.
    """
    w = winners.T @ losers
    np.fill_diagonal(w, 0.0)
    return w


def bt_fit_loop(
    w: np.ndarray, p0: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, int, float]:
    """Minorization update loop for pairwise-strength fitting.

    Iterates p'_x = (sum_y w[x, y]) / (sum_{y != x} (w[x, y] + w[y, x]) / (p_x + p_y)),
    renormalizes to the simplex each sweep, and stops when the largest
    coordinate change falls below `tol`. Returns (p, iterations, last_change);
    the caller decides whether a final change >= tol is an error.

    Assumes w has a zero diagonal and every item interacts with at least one
    other item (positive row + column sum).
    """
    totals = w.sum(axis=1)
    s = w + w.T
    p = p0.copy()
    delta = np.inf
    for iteration in range(1, max_iter + 1):
        ratio = s / (p[:, None] + p[None, :])
        np.fill_diagonal(ratio, 0.0)
        p_new = totals / ratio.sum(axis=1)
        p_new /= p_new.sum()
        delta = float(np.abs(p_new - p).max())
        p = p_new
        if delta < tol:
            return p, iteration, delta
    return p, max_iter, delta


def kl_rows(target: np.ndarray, corpus: np.ndarray) -> np.ndarray:
    """Divergence of `target` from every row of `corpus` (natural log).

    target: (M,) strictly positive vector; corpus: (N, M) strictly positive
    rows. Returns (N,) with sum_x target[x] * ln(target[x] / corpus[i, x]).
    """
    log_ratio = np.log(target)[None, :] - np.log(corpus)
    return log_ratio @ target
