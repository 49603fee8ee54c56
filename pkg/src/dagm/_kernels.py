"""Numba kernels for the per-node subproblems.

Every kernel is written for the F-side: ``x`` is a row of the active block,
``Y`` the frozen block, and the CSR pair ``(indptr, indices)`` the active
neighbourhood (successors for F rows, predecessors for H rows). The H-side
reuses them with the arguments swapped. ``xptr/xind`` list held-out partners
that are excluded from both likelihood sums.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _log1mexp(d, eps):
    if d < eps:
        d = eps
    return np.log(-np.expm1(-d))


@njit(cache=True, nogil=True)
def row_objective(x, u, Y, indptr, indices, xptr, xind, sumY, eps):
    K = x.shape[0]
    edge_term = 0.0
    lin = 0.0
    for k in range(K):
        lin += x[k] * (sumY[k] - Y[u, k])
    for j in range(indptr[u], indptr[u + 1]):
        v = indices[j]
        d = 0.0
        for k in range(K):
            d += x[k] * Y[v, k]
        edge_term += _log1mexp(d, eps)
        lin -= d
    for j in range(xptr[u], xptr[u + 1]):
        v = xind[j]
        for k in range(K):
            lin -= x[k] * Y[v, k]
    return edge_term - lin


@njit(cache=True, nogil=True)
def row_gradient(x, u, Y, indptr, indices, xptr, xind, sumY, eps, out):
    K = x.shape[0]
    for k in range(K):
        out[k] = -(sumY[k] - Y[u, k])
    for j in range(indptr[u], indptr[u + 1]):
        v = indices[j]
        d = 0.0
        for k in range(K):
            d += x[k] * Y[v, k]
        if d < eps:
            d = eps
        ratio = np.exp(-d) / (-np.expm1(-d))
        for k in range(K):
            out[k] += Y[v, k] * (ratio + 1.0)
    for j in range(xptr[u], xptr[u + 1]):
        v = xind[j]
        for k in range(K):
            out[k] += Y[v, k]


@njit(cache=True, nogil=True)
def update_row(x, u, Y, indptr, indices, xptr, xind, sumY, eps,
               step0, beta, alpha, max_steps, clip, grad, cand):
    """Projected gradient step with backtracking; returns the accepted step (0 if none).

    ``x`` is overwritten with the accepted row. The search direction is the
    gradient clipped to ``[-clip, clip]`` with coordinates that would leave the
    orthant from zero removed.
    """
    K = x.shape[0]
    row_gradient(x, u, Y, indptr, indices, xptr, xind, sumY, eps, grad)
    nonzero = False
    for k in range(K):
        g = grad[k]
        if g > clip:
            g = clip
        elif g < -clip:
            g = -clip
        if x[k] <= 0.0 and g < 0.0:
            g = 0.0
        grad[k] = g
        if g != 0.0:
            nonzero = True
    if not nonzero:
        return 0.0
    f0 = row_objective(x, u, Y, indptr, indices, xptr, xind, sumY, eps)
    t = step0
    for _ in range(max_steps):
        gain = 0.0
        for k in range(K):
            c = x[k] + t * grad[k]
            if c < 0.0:
                c = 0.0
            cand[k] = c
            gain += grad[k] * (c - x[k])
        f1 = row_objective(cand, u, Y, indptr, indices, xptr, xind, sumY, eps)
        if f1 >= f0 + alpha * gain:
            for k in range(K):
                x[k] = cand[k]
            return t
        t *= beta
    return 0.0


@njit(cache=True, nogil=True)
def update_rows(X, Y, indptr, indices, xptr, xind, sumY, eps,
                step0, beta, alpha, max_steps, clip, lo, hi):
    K = X.shape[1]
    grad = np.empty(K)
    cand = np.empty(K)
    accepted = 0
    for u in range(lo, hi):
        t = update_row(X[u], u, Y, indptr, indices, xptr, xind, sumY, eps,
                       step0, beta, alpha, max_steps, clip, grad, cand)
        if t > 0.0:
            accepted += 1
    return accepted


@njit(cache=True, nogil=True)
def update_interleaved(F, H, out_ptr, out_ind, in_ptr, in_ind,
                       xo_ptr, xo_ind, xi_ptr, xi_ind, sumF, sumH, eps,
                       step0, beta, alpha, max_steps, clip):
    """Serial sweep updating F_u then H_u for each u with live column sums."""
    N, K = F.shape
    grad = np.empty(K)
    cand = np.empty(K)
    old = np.empty(K)
    for u in range(N):
        for k in range(K):
            old[k] = F[u, k]
        update_row(F[u], u, H, out_ptr, out_ind, xo_ptr, xo_ind, sumH, eps,
                   step0, beta, alpha, max_steps, clip, grad, cand)
        for k in range(K):
            sumF[k] += F[u, k] - old[k]
            old[k] = H[u, k]
        update_row(H[u], u, F, in_ptr, in_ind, xi_ptr, xi_ind, sumF, eps,
                   step0, beta, alpha, max_steps, clip, grad, cand)
        for k in range(K):
            sumH[k] += H[u, k] - old[k]


@njit(cache=True, nogil=True)
def row_objectives(X, Y, indptr, indices, xptr, xind, sumY, eps, lo, hi, out):
    for u in range(lo, hi):
        out[u] = row_objective(X[u], u, Y, indptr, indices, xptr, xind, sumY, eps)


@njit(cache=True, nogil=True)
def column_sums(X, out):
    N, K = X.shape
    for k in range(K):
        out[k] = 0.0
    for u in range(N):
        for k in range(K):
            out[k] += X[u, k]
