# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: greedy split scoring and lasso coordinate descent.

The arithmetic here is kept operation-for-operation identical to the numpy
backend (sequential prefix sums, same association of +/-/*//) so that split
scores agree bit-for-bit across backends. Coordinate-descent dot products
use plain sequential loops, which may differ from BLAS in the last ulp; the
solver's convergence checks absorb that.
"""

from libc.math cimport INFINITY, fabs


def best_split_feature(const double[::1] x_sorted, const double[::1] y_sorted,
                       Py_ssize_t min_leaf):
    """Best boundary position for one feature, rows pre-sorted by x.

    A boundary at position i puts rows [0, i) left and [i, n) right with
    threshold x_sorted[i]; it is valid when x_sorted[i-1] < x_sorted[i] and
    both sides keep at least min_leaf rows. Returns (pos, score) where score
    is the summed child squared error, or (-1, inf) when no boundary is valid.
    """
    cdef Py_ssize_t n = x_sorted.shape[0]
    cdef Py_ssize_t i
    cdef double total_sum = 0.0, total_ss = 0.0
    cdef double run_sum = 0.0, sl, sr, score
    cdef double best_score = INFINITY
    cdef Py_ssize_t best_pos = -1
    cdef double yi

    if n < 2 or n < 2 * min_leaf:
        return -1, INFINITY

    for i in range(n):
        yi = y_sorted[i]
        total_sum += yi
        total_ss += yi * yi

    for i in range(1, n):
        run_sum += y_sorted[i - 1]
        if i < min_leaf or n - i < min_leaf:
            continue
        if not (x_sorted[i - 1] < x_sorted[i]):
            continue
        sl = run_sum
        sr = total_sum - sl
        score = total_ss - (sl * sl) / i - (sr * sr) / (n - i)
        if score < best_score:
            best_score = score
            best_pos = i

    return best_pos, best_score


def cd_sweeps(const double[::1, :] x, double[::1] resid, double[::1] beta,
              const double[::1] col_nsq, double lam, double conv_tol,
              Py_ssize_t max_sweeps):
    """Cyclic coordinate-descent sweeps for the soft-thresholded lasso update.

    x is the centered design (Fortran order), resid the current residual
    y_centered - x @ beta, col_nsq[j] = (1/n) * ||x_j||^2. Mutates resid and
    beta in place. Stops after a full sweep whose largest coefficient change
    is below conv_tol (or exactly zero). Returns (sweeps_run, last_max_change).
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k = x.shape[1]
    cdef Py_ssize_t i, j, s
    cdef double nsq, bj, bn, dot, rho, d, ad
    cdef double maxd = 0.0
    cdef Py_ssize_t sweeps = 0

    for s in range(max_sweeps):
        maxd = 0.0
        for j in range(k):
            nsq = col_nsq[j]
            if nsq <= 0.0:
                continue
            bj = beta[j]
            dot = 0.0
            for i in range(n):
                dot += x[i, j] * resid[i]
            rho = dot / n + nsq * bj
            if rho > lam:
                bn = (rho - lam) / nsq
            elif rho < -lam:
                bn = (rho + lam) / nsq
            else:
                bn = 0.0
            d = bn - bj
            if d != 0.0:
                beta[j] = bn
                for i in range(n):
                    resid[i] -= d * x[i, j]
                ad = fabs(d)
                if ad > maxd:
                    maxd = ad
        sweeps += 1
        if maxd < conv_tol or maxd == 0.0:
            break

    return sweeps, maxd


def cd_sweeps_gram(const double[:, ::1] g, double[::1] c, double[::1] beta,
                   const double[::1] col_nsq, double lam, double conv_tol,
                   Py_ssize_t max_sweeps):
    """Coordinate-descent sweeps on the gram form of the lasso problem.

    g[j, t] = (1/n) <x_j, x_t> (symmetric, C order), c[j] = (1/n) <x_j, r>
    for the current residual r = y_centered - x @ beta; c and beta are
    mutated in place and kept consistent. Sweep cost depends only on the
    column count, so this form wins when rows outnumber active columns.
    Same stopping rule and return value as cd_sweeps.
    """
    cdef Py_ssize_t k = beta.shape[0]
    cdef Py_ssize_t j, t, s
    cdef double nsq, bj, bn, rho, d, ad
    cdef double maxd = 0.0
    cdef Py_ssize_t sweeps = 0

    for s in range(max_sweeps):
        maxd = 0.0
        for j in range(k):
            nsq = col_nsq[j]
            if nsq <= 0.0:
                continue
            bj = beta[j]
            rho = c[j] + nsq * bj
            if rho > lam:
                bn = (rho - lam) / nsq
            elif rho < -lam:
                bn = (rho + lam) / nsq
            else:
                bn = 0.0
            d = bn - bj
            if d != 0.0:
                beta[j] = bn
                for t in range(k):
                    c[t] -= d * g[j, t]
                ad = fabs(d)
                if ad > maxd:
                    maxd = ad
        sweeps += 1
        if maxd < conv_tol or maxd == 0.0:
            break

    return sweeps, maxd
