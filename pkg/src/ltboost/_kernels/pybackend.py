"""Pure-numpy fallback for the compiled kernels.

Split scoring mirrors the compiled kernel operation-for-operation: prefix
sums via np.cumsum (sequential accumulation, same rounding as the C loop)
and identically associated score arithmetic, so both backends pick the same
split under the same tie-break. Coordinate descent uses BLAS dot products,
which can differ from the C loop in the last ulp; results agree to solver
tolerance rather than bitwise.
"""

import numpy as np


def best_split_feature(x_sorted, y_sorted, min_leaf):
    """Best boundary position for one feature; see the compiled kernel."""
    n = x_sorted.shape[0]
    if n < 2 or n < 2 * min_leaf:
        return -1, np.inf

    cs = np.cumsum(y_sorted)
    css = np.cumsum(y_sorted * y_sorted)
    total_sum = cs[-1]
    total_ss = css[-1]

    n_left = np.arange(1, n, dtype=np.float64)
    sl = cs[:-1]
    sr = total_sum - sl
    scores = total_ss - (sl * sl) / n_left - (sr * sr) / (n - n_left)

    valid = x_sorted[:-1] < x_sorted[1:]
    if min_leaf > 1:
        pos = np.arange(1, n)
        valid &= (pos >= min_leaf) & (n - pos >= min_leaf)
    if not valid.any():
        return -1, np.inf

    scores = np.where(valid, scores, np.inf)
    best = int(np.argmin(scores))
    return best + 1, float(scores[best])


def cd_sweeps(x, resid, beta, col_nsq, lam, conv_tol, max_sweeps):
    """Cyclic coordinate-descent sweeps; see the compiled kernel."""
    n, k = x.shape
    maxd = 0.0
    sweeps = 0
    for _ in range(max_sweeps):
        maxd = 0.0
        for j in range(k):
            nsq = col_nsq[j]
            if nsq <= 0.0:
                continue
            bj = beta[j]
            col = x[:, j]
            rho = (col @ resid) / n + nsq * bj
            if rho > lam:
                bn = (rho - lam) / nsq
            elif rho < -lam:
                bn = (rho + lam) / nsq
            else:
                bn = 0.0
            d = bn - bj
            if d != 0.0:
                beta[j] = bn
                resid -= d * col
                ad = abs(d)
                if ad > maxd:
                    maxd = ad
        sweeps += 1
        if maxd < conv_tol or maxd == 0.0:
            break
    return sweeps, maxd


def cd_sweeps_gram(g, c, beta, col_nsq, lam, conv_tol, max_sweeps):
    """Coordinate-descent sweeps on the gram form; see the compiled kernel."""
    k = beta.shape[0]
    maxd = 0.0
    sweeps = 0
    for _ in range(max_sweeps):
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
                c -= d * g[j]
                ad = abs(d)
                if ad > maxd:
                    maxd = ad
        sweeps += 1
        if maxd < conv_tol or maxd == 0.0:
            break
    return sweeps, maxd
