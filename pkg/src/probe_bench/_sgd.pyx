# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled SGD kernel: the hot inner loop of every grid run.

Contract mirrors probe_bench._sgd_py.run_sgd; see that module for the loss
bookkeeping definition. Releases the GIL for the whole training loop, so grid
workers scale across threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, isfinite, log

BACKEND = "cython"


def run_sgd(
    double[:, ::1] X,
    cnp.int32_t[::1] y,
    double[:, ::1] W,
    double[::1] b,
    double lr,
    double wd,
    Py_ssize_t batch_size,
    cnp.int64_t[:, ::1] perms,
    double[::1] epoch_losses,
):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t D = X.shape[1]
    cdef Py_ssize_t C = W.shape[0]
    cdef Py_ssize_t epochs = perms.shape[0]

    scratch_logits = np.empty(C, dtype=np.float64)
    scratch_gw = np.empty((C, D), dtype=np.float64)
    scratch_gb = np.empty(C, dtype=np.float64)
    cdef double[::1] logits = scratch_logits
    cdef double[:, ::1] gW = scratch_gw
    cdef double[::1] gb = scratch_gb

    cdef Py_ssize_t e, start, bi, B, k, i, c, d, yi
    cdef double s, maxl, se, log_denom, p, g, w2, ce, loss_accum, inv_b
    cdef Py_ssize_t bad_epoch = -1, bad_batch = -1
    cdef bint diverged = 0

    with nogil:
        for e in range(epochs):
            loss_accum = 0.0
            bi = 0
            start = 0
            while start < n:
                B = batch_size if start + batch_size <= n else n - start
                ce = 0.0
                for c in range(C):
                    gb[c] = 0.0
                    for d in range(D):
                        gW[c, d] = 0.0
                for k in range(B):
                    i = perms[e, start + k]
                    maxl = -1e308
                    for c in range(C):
                        s = b[c]
                        for d in range(D):
                            s += W[c, d] * X[i, d]
                        logits[c] = s
                        if s > maxl:
                            maxl = s
                    se = 0.0
                    for c in range(C):
                        se += exp(logits[c] - maxl)
                    log_denom = maxl + log(se)
                    yi = y[i]
                    ce += log_denom - logits[yi]
                    for c in range(C):
                        p = exp(logits[c] - log_denom)
                        g = p - (1.0 if c == yi else 0.0)
                        gb[c] += g
                        for d in range(D):
                            gW[c, d] += g * X[i, d]
                w2 = 0.0
                for c in range(C):
                    for d in range(D):
                        w2 += W[c, d] * W[c, d]
                loss_accum += ce + B * 0.5 * wd * w2
                inv_b = 1.0 / B
                for c in range(C):
                    b[c] -= lr * gb[c] * inv_b
                    for d in range(D):
                        W[c, d] -= lr * (gW[c, d] * inv_b + wd * W[c, d])
                for c in range(C):
                    if not isfinite(b[c]):
                        diverged = 1
                    for d in range(D):
                        if not isfinite(W[c, d]):
                            diverged = 1
                if diverged:
                    bad_epoch = e
                    bad_batch = bi
                    break
                start += batch_size
                bi += 1
            epoch_losses[e] = loss_accum / n
            if diverged:
                break

    return bad_epoch, bad_batch
