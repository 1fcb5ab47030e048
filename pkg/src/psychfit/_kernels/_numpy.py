"""Pure-numpy fallback implementations of the hot kernels."""
import numpy as np


def pattern_loglik(x, p):
    """Log-likelihood of each response pattern at each quadrature node.

    x: (N, J) responses in {0, 1}; p: (Q, J) correct probabilities.
    Returns (N, Q) array of sum_j log P(x_ij | theta_q).
    """
    x = np.asarray(x, dtype=np.float64)
    lp = np.log(p)
    lq = np.log1p(-p)
    return x @ lp.T + (1.0 - x) @ lq.T


def score_distribution(p):
    """Distribution of the number-correct score for independent items with
    success probabilities p (Lord-Wingersky recursion).
    """
    p = np.asarray(p, dtype=np.float64)
    s = np.zeros(p.shape[0] + 1)
    s[0] = 1.0
    for m, pm in enumerate(p):
        s[1 : m + 2] = s[1 : m + 2] * (1.0 - pm) + s[: m + 1] * pm
        s[0] *= 1.0 - pm
    return s
