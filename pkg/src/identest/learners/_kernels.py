"""Numba-compiled inner loops for the penalized learners and the forest.

Kept free of Python objects so the hot paths (coordinate-descent sweeps,
tree building, tree traversal) run at C speed on the single-core targets
this package is sized for.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def linear_cd(Xs, r, beta, lam, max_sweeps, tol):
    """Cyclic coordinate descent with soft thresholding.

    Xs: standardized design (zero-mean, unit-scale columns; constant
    columns all-zero). r: current residual, updated in place and assumed
    consistent with beta on entry. Returns the number of sweeps used.
    """
    n, p = Xs.shape
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            bj = beta[j]
            rho = 0.0
            for i in range(n):
                rho += Xs[i, j] * r[i]
            rho = rho / n + bj
            if rho > lam:
                bnew = rho - lam
            elif rho < -lam:
                bnew = rho + lam
            else:
                bnew = 0.0
            diff = bnew - bj
            if diff != 0.0:
                for i in range(n):
                    r[i] -= diff * Xs[i, j]
                beta[j] = bnew
                if abs(diff) > max_delta:
                    max_delta = abs(diff)
        if max_delta < tol:
            return sweep + 1
    return max_sweeps


@njit(cache=True)
def logistic_cd(Xs, y, lam, b0_init, beta, max_outer, tol):
    """Penalized logistic fit via quadratic majorization (Hessian bound 1/4).

    Each outer iteration solves the surrogate weighted lasso by cyclic
    coordinate descent with the same soft-threshold update as linear_cd.
    Returns (intercept, outer iterations used); beta is updated in place.
    """
    n, p = Xs.shape
    b0 = b0_init
    w = 0.25
    eta = np.empty(n)
    r = np.empty(n)
    for outer in range(max_outer):
        for i in range(n):
            e = b0
            for j in range(p):
                e += Xs[i, j] * beta[j]
            eta[i] = e
            if e > 30.0:
                e = 30.0
            elif e < -30.0:
                e = -30.0
            prob = 1.0 / (1.0 + np.exp(-e))
            # working response zeta = eta + (y - prob)/w; surrogate residual
            # r = zeta - eta at the current parameters
            r[i] = (y[i] - prob) / w
        max_outer_delta = 0.0
        # inner CD on the quadratic surrogate (constant weight w)
        for inner in range(1000):
            max_delta = 0.0
            # intercept (unpenalized)
            rbar = 0.0
            for i in range(n):
                rbar += r[i]
            rbar /= n
            if rbar != 0.0:
                b0 += rbar
                for i in range(n):
                    r[i] -= rbar
                if abs(rbar) > max_delta:
                    max_delta = abs(rbar)
            for j in range(p):
                bj = beta[j]
                rho = 0.0
                for i in range(n):
                    rho += Xs[i, j] * r[i]
                rho = w * rho / n + w * bj
                if rho > lam:
                    bnew = (rho - lam) / w
                elif rho < -lam:
                    bnew = (rho + lam) / w
                else:
                    bnew = 0.0
                diff = bnew - bj
                if diff != 0.0:
                    for i in range(n):
                        r[i] -= diff * Xs[i, j]
                    beta[j] = bnew
                    if abs(diff) > max_delta:
                        max_delta = abs(diff)
            if abs(max_delta) > max_outer_delta:
                max_outer_delta = max_delta
            if max_delta < 0.1 * tol:
                break
        if max_outer_delta < tol:
            return b0, outer + 1
    return b0, max_outer


@njit(cache=True)
def build_tree(X, y, rows, min_leaf, mtry, seed,
               feature, threshold, left, right, value):
    """Grow one variance-minimizing regression tree.

    rows: training row indices (bootstrap sample), reordered in place.
    The node arrays are preallocated by the caller; returns the number of
    nodes used. Leaves have feature == -1.
    """
    np.random.seed(seed)
    n_total = rows.size
    p = X.shape[1]
    pool = np.arange(p)
    # explicit stack of (node_id, start, end) ranges into rows
    stack_node = np.empty(2 * n_total + 2, dtype=np.int64)
    stack_lo = np.empty(2 * n_total + 2, dtype=np.int64)
    stack_hi = np.empty(2 * n_total + 2, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n_total
    n_nodes = 1
    while top >= 0:
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        top -= 1
        cnt = hi - lo
        total = 0.0
        for i in range(lo, hi):
            total += y[rows[i]]
        best_gain = 0.0
        best_feat = -1
        best_thresh = 0.0
        if cnt >= 2 * min_leaf:
            # draw mtry distinct candidate features
            for t in range(mtry):
                u = t + np.random.randint(p - t)
                tmp = pool[t]
                pool[t] = pool[u]
                pool[u] = tmp
            base = total * total / cnt
            for t in range(mtry):
                f = pool[t]
                vals = np.empty(cnt)
                ys = np.empty(cnt)
                for i in range(cnt):
                    vals[i] = X[rows[lo + i], f]
                order = np.argsort(vals, kind="mergesort")
                left_sum = 0.0
                for i in range(cnt - 1):
                    o = order[i]
                    left_sum += y[rows[lo + o]]
                    k = i + 1
                    if k < min_leaf or cnt - k < min_leaf:
                        continue
                    if vals[order[i]] == vals[order[i + 1]]:
                        continue
                    rs = total - left_sum
                    gain = left_sum * left_sum / k + rs * rs / (cnt - k) - base
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = f
                        best_thresh = 0.5 * (vals[order[i]] + vals[order[i + 1]])
        if best_feat < 0:
            feature[node] = -1
            # exact value for constant leaves so forest predictions are exact
            first = y[rows[lo]]
            constant = True
            for i in range(lo + 1, hi):
                if y[rows[i]] != first:
                    constant = False
                    break
            value[node] = first if constant else total / cnt
            continue
        # partition rows[lo:hi] by the chosen split, stably
        buf = np.empty(cnt, dtype=rows.dtype)
        nl = 0
        for i in range(lo, hi):
            if X[rows[i], best_feat] <= best_thresh:
                buf[nl] = rows[i]
                nl += 1
        nr = nl
        for i in range(lo, hi):
            if X[rows[i], best_feat] > best_thresh:
                buf[nr] = rows[i]
                nr += 1
        for i in range(cnt):
            rows[lo + i] = buf[i]
        feature[node] = best_feat
        threshold[node] = best_thresh
        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        left[node] = lchild
        right[node] = rchild
        top += 1
        stack_node[top] = lchild
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1
        stack_node[top] = rchild
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
    return n_nodes


@njit(cache=True)
def tree_predict(X, feature, threshold, left, right, value, out):
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
