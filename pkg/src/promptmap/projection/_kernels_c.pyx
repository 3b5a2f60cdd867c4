# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled t-SNE kernels: bandwidth search and per-iteration gradient.

Semantics mirror _kernels_py.py exactly; only the loop strategy differs.
"""

from libc.math cimport exp, log, fabs, INFINITY

import numpy as np


def conditional_affinities(double[:, ::1] dist, double perplexity,
                           double tol=1e-5, int max_iter=50):
    cdef Py_ssize_t n = dist.shape[0]
    P = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] Pv = P
    cdef double target = log(perplexity)
    cdef Py_ssize_t i, j
    cdef int it
    cdef double beta, betamin, betamax, shift, sumE, sumAE, H, diff, a, e

    for i in range(n):
        shift = INFINITY
        for j in range(n):
            if j != i and dist[i, j] < shift:
                shift = dist[i, j]
        beta = 1.0
        betamin = -INFINITY
        betamax = INFINITY
        for it in range(max_iter):
            sumE = 0.0
            sumAE = 0.0
            for j in range(n):
                if j == i:
                    continue
                a = dist[i, j] - shift
                e = exp(-a * beta)
                sumE += e
                sumAE += a * e
            H = log(sumE) + beta * (sumAE / sumE)
            diff = H - target
            if fabs(diff) <= tol:
                break
            if diff > 0:
                betamin = beta
                if betamax == INFINITY:
                    beta = beta * 2.0
                else:
                    beta = (beta + betamax) / 2.0
            else:
                betamax = beta
                if betamin == -INFINITY:
                    beta = beta / 2.0
                else:
                    beta = (beta + betamin) / 2.0
        # final evaluation at the settled beta (matches the numpy fallback)
        sumE = 0.0
        for j in range(n):
            if j == i:
                Pv[i, j] = 0.0
                continue
            a = dist[i, j] - shift
            e = exp(-a * beta)
            Pv[i, j] = e
            sumE += e
        for j in range(n):
            Pv[i, j] /= sumE
    return P


def lowdim_kernel(double[:, ::1] Y):
    cdef Py_ssize_t n = Y.shape[0]
    num = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] numv = num
    cdef Py_ssize_t i, j
    cdef double dx, dy, v, Z = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = Y[i, 0] - Y[j, 0]
            dy = Y[i, 1] - Y[j, 1]
            v = 1.0 / (1.0 + dx * dx + dy * dy)
            numv[i, j] = v
            numv[j, i] = v
            Z += 2.0 * v
    return num, Z


def tsne_grad(double[:, ::1] P, double[:, ::1] Y):
    cdef Py_ssize_t n = Y.shape[0]
    num, Zpy = lowdim_kernel(np.asarray(Y))
    cdef double[:, ::1] numv = num
    cdef double Z = Zpy
    grad = np.zeros((n, 2), dtype=np.float64)
    cdef double[:, ::1] g = grad
    cdef Py_ssize_t i, j
    cdef double coeff, gx, gy
    for i in range(n):
        gx = 0.0
        gy = 0.0
        for j in range(n):
            if j == i:
                continue
            coeff = (P[i, j] - numv[i, j] / Z) * numv[i, j]
            gx += coeff * (Y[i, 0] - Y[j, 0])
            gy += coeff * (Y[i, 1] - Y[j, 1])
        g[i, 0] = 4.0 * gx
        g[i, 1] = 4.0 * gy
    return grad
