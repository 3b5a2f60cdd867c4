"""Pure-numpy t-SNE kernels (fallback when the compiled extension is absent).

Must stay semantically identical to _kernels_c.pyx: same bandwidth search
steps, same final-beta evaluation, same unclipped gradient.  Parity is
enforced by tests at tight tolerance (only libm-vs-numpy ulp noise allowed).
"""

from __future__ import annotations

import numpy as np


def conditional_affinities(
    dist: np.ndarray, perplexity: float, tol: float = 1e-5, max_iter: int = 50
) -> np.ndarray:
    """Row-stochastic conditional affinities with per-row bandwidth search.

    For each row, binary-search the precision beta so that the entropy of
    p_(j|i) = softmax_j(-beta * d_ij) hits ln(perplexity) within tol.
    Rows are shifted by their off-diagonal minimum before exponentiation;
    the entropy is shift-invariant, and the nearest neighbor always
    contributes exp(0)=1, so the row sum never underflows to zero.
    """
    n = dist.shape[0]
    target = np.log(perplexity)
    masked = dist.astype(np.float64).copy()
    np.fill_diagonal(masked, np.inf)
    shift = masked.min(axis=1)
    A = dist.astype(np.float64) - shift[:, None]
    np.fill_diagonal(A, 0.0)            # excluded below; keeps exp() finite

    def evaluate(beta):
        E = np.exp(-A * beta[:, None])
        np.fill_diagonal(E, 0.0)
        sumE = E.sum(axis=1)
        return E, sumE, (A * E).sum(axis=1)

    beta = np.ones(n)
    betamin = np.full(n, -np.inf)
    betamax = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        _, sumE, sumAE = evaluate(beta)
        H = np.log(sumE) + beta * (sumAE / sumE)
        diff = H - target
        done |= np.abs(diff) <= tol
        if done.all():
            break
        up = (~done) & (diff > 0)
        down = (~done) & ~(diff > 0)
        betamin[up] = beta[up]
        beta[up] = np.where(np.isinf(betamax[up]), beta[up] * 2.0, (beta[up] + betamax[up]) / 2.0)
        betamax[down] = beta[down]
        beta[down] = np.where(
            np.isinf(betamin[down]), beta[down] / 2.0, (beta[down] + betamin[down]) / 2.0
        )

    E, sumE, _ = evaluate(beta)
    return E / sumE[:, None]


def lowdim_kernel(Y: np.ndarray) -> tuple[np.ndarray, float]:
    """Student-t numerators 1/(1+||yi-yj||^2) with zero diagonal, and their sum."""
    diff = Y[:, None, :] - Y[None, :, :]
    num = 1.0 / (1.0 + (diff**2).sum(axis=2))
    np.fill_diagonal(num, 0.0)
    return num, float(num.sum())


def tsne_grad(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """KL gradient dC/dY = 4 sum_j (p_ij - q_ij) num_ij (y_i - y_j)."""
    num, Z = lowdim_kernel(Y)
    Q = num / Z
    PQ = (P - Q) * num
    return 4.0 * (PQ.sum(axis=1)[:, None] * Y - PQ @ Y)
