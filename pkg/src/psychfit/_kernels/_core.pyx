# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: response-pattern log-likelihoods over a quadrature
grid and the score-distribution recursion."""
import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


def pattern_loglik(cnp.uint8_t[:, ::1] x, double[:, ::1] p):
    """Log-likelihood of each response pattern at each quadrature node.

    x: (N, J) responses in {0, 1}; p: (Q, J) correct probabilities.
    Returns (N, Q) array of sum_j log P(x_ij | theta_q).
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t j = x.shape[1]
    cdef Py_ssize_t q = p.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, q))
    cdef double[:, ::1] ov = out
    cdef cnp.ndarray[double, ndim=2] lp = np.empty((q, j))
    cdef cnp.ndarray[double, ndim=2] lq = np.empty((q, j))
    cdef double[:, ::1] lpv = lp
    cdef double[:, ::1] lqv = lq
    cdef Py_ssize_t i, k, m
    cdef double acc
    for k in range(q):
        for m in range(j):
            lpv[k, m] = log(p[k, m])
            lqv[k, m] = log(1.0 - p[k, m])
    for i in range(n):
        for k in range(q):
            acc = 0.0
            for m in range(j):
                if x[i, m]:
                    acc += lpv[k, m]
                else:
                    acc += lqv[k, m]
            ov[i, k] = acc
    return out


def score_distribution(double[::1] p):
    """Distribution of the number-correct score for independent items with
    success probabilities p (Lord-Wingersky recursion).

    Returns an array of length len(p) + 1.
    """
    cdef Py_ssize_t j = p.shape[0]
    cdef cnp.ndarray[double, ndim=1] s = np.zeros(j + 1)
    cdef double[::1] sv = s
    cdef Py_ssize_t m, k
    sv[0] = 1.0
    for m in range(j):
        for k in range(m + 1, 0, -1):
            sv[k] = sv[k] * (1.0 - p[m]) + sv[k - 1] * p[m]
        sv[0] = sv[0] * (1.0 - p[m])
    return s
