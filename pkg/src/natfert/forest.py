"""Regression forest: bootstrap + random feature subsets + variance-reduction splits.

Randomness (bootstrap rows, candidate features at each node) comes from the
Philox stream keyed by the forest seed and addressed by (tree, node, draw),
so a fitted forest does not depend on how trees are scheduled on threads.
Among equally good splits the lowest feature index, then the lowest
threshold, wins.
"""

import math

import numba as nb
import numpy as np

from .errors import TooFewSamplesError
from .model import threads
from .rng import TAG_FOREST, philox4x32, split_key, to_unit

_TAG_BOOTSTRAP = TAG_FOREST + 1
_MASK32 = np.uint64(0xFFFFFFFF)


@nb.njit(cache=True, inline="always")
def _unit(k0, k1, a, b, c, tag):
    x0, x1, _, _ = philox4x32(np.uint64(a), np.uint64(b), np.uint64(c), np.uint64(tag), k0, k1)
    return to_unit(x0, x1)


@nb.njit(cache=True)
def _grow(X, y, rows, mtry, min_leaf, k0, k1, tree, feat, thr, left, right, value):
    """Grow one tree on ``rows`` (bootstrap indices). Returns the node count."""
    n = rows.shape[0]
    p = X.shape[1]
    idx = rows.copy()
    buf = np.empty(n, dtype=np.int64)
    perm = np.empty(p, dtype=np.int64)
    stack = np.empty((feat.shape[0], 3), dtype=np.int64)
    stack[0, 0], stack[0, 1], stack[0, 2] = 0, 0, n
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node, start, end = stack[top, 0], stack[top, 1], stack[top, 2]
        cnt = end - start
        total = 0.0
        ymin = np.inf
        ymax = -np.inf
        for i in range(start, end):
            v = y[idx[i]]
            total += v
            ymin = min(ymin, v)
            ymax = max(ymax, v)
        value[node] = total / cnt
        feat[node] = -1
        if cnt < 2 * min_leaf or ymin == ymax:
            continue

        for j in range(p):
            perm[j] = j
        for j in range(mtry):
            u = _unit(k0, k1, tree, node, j, TAG_FOREST)
            r = j + int(u * (p - j))
            perm[j], perm[r] = perm[r], perm[j]
        chosen = np.sort(perm[:mtry])

        parent = total * total / cnt
        best_gain = 0.0
        best_f = -1
        best_t = 0.0
        vals = np.empty(cnt)
        ys = np.empty(cnt)
        for f in chosen:
            for i in range(cnt):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals, kind="mergesort")
            for i in range(cnt):
                ys[i] = y[idx[start + order[i]]]
            left_sum = 0.0
            for i in range(1, cnt):
                left_sum += ys[i - 1]
                if i < min_leaf or cnt - i < min_leaf:
                    continue
                lo_v = vals[order[i - 1]]
                hi_v = vals[order[i]]
                if lo_v == hi_v:
                    continue
                right_sum = total - left_sum
                gain = left_sum * left_sum / i + right_sum * right_sum / (cnt - i) - parent
                # near-equal gains (same partition, different rounding) count as ties
                if gain > best_gain * (1.0 + 1e-10):
                    best_gain = gain
                    best_f = f
                    mid = lo_v + 0.5 * (hi_v - lo_v)
                    best_t = mid if mid < hi_v else lo_v
        if best_f < 0 or best_gain <= 1e-12 * (abs(parent) + 1e-300):
            continue

        nl = 0
        nr = 0
        for i in range(start, end):
            r = idx[i]
            if X[r, best_f] <= best_t:
                idx[start + nl] = r
                nl += 1
            else:
                buf[nr] = r
                nr += 1
        for i in range(nr):
            idx[start + nl + i] = buf[i]

        feat[node] = best_f
        thr[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0], stack[top, 1], stack[top, 2] = n_nodes, start, start + nl
        stack[top + 1, 0], stack[top + 1, 1], stack[top + 1, 2] = n_nodes + 1, start + nl, end
        top += 2
        n_nodes += 2
    return n_nodes


@nb.njit(cache=True, parallel=True)
def _fit(X, y, n_trees, mtry, min_leaf, bootstrap, k0, k1, max_nodes):
    n = X.shape[0]
    feat = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    thr = np.zeros((n_trees, max_nodes))
    left = np.zeros((n_trees, max_nodes), dtype=np.int64)
    right = np.zeros((n_trees, max_nodes), dtype=np.int64)
    value = np.zeros((n_trees, max_nodes))
    inbag = np.zeros((n_trees, n), dtype=np.int64)
    for t in nb.prange(n_trees):
        rows = np.empty(n, dtype=np.int64)
        for i in range(n):
            if bootstrap:
                rows[i] = min(int(_unit(k0, k1, t, i, 0, _TAG_BOOTSTRAP) * n), n - 1)
            else:
                rows[i] = i
            inbag[t, rows[i]] += 1
        _grow(X, y, rows, mtry, min_leaf, k0, k1, t, feat[t], thr[t], left[t], right[t], value[t])
    return feat, thr, left, right, value, inbag


@nb.njit(cache=True, parallel=True)
def _predict_trees(X, feat, thr, left, right, value):
    """(n_trees, n_samples) per-tree predictions."""
    n_trees = feat.shape[0]
    out = np.empty((n_trees, X.shape[0]))
    for s in nb.prange(X.shape[0]):
        for t in range(n_trees):
            node = 0
            while feat[t, node] >= 0:
                if X[s, feat[t, node]] <= thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            out[t, s] = value[t, node]
    return out


class RegressionForest:
    """Random forest for a single real-valued target."""

    def __init__(self, n_trees=500, min_samples_leaf=5, max_features=None, bootstrap=True, seed=0):
        self.n_trees = int(n_trees)
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features
        self.bootstrap = bool(bootstrap)
        self.seed = int(seed)

    def fit(self, X, y, n_threads=None):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        n, p = X.shape
        if y.shape != (n,):
            raise ValueError(f"y must have shape ({n},), got {y.shape}")
        if n < max(2, self.min_samples_leaf):
            raise TooFewSamplesError(
                f"{n} samples; need at least max(2, min_samples_leaf={self.min_samples_leaf})"
            )
        mtry = self.max_features or math.ceil(p / 3)
        mtry = max(1, min(int(mtry), p))
        max_nodes = 2 * (n // self.min_samples_leaf) + 1
        k0, k1 = split_key(self.seed)
        with threads(n_threads):
            fitted = _fit(X, y, self.n_trees, mtry, self.min_samples_leaf, self.bootstrap, k0, k1, max_nodes)
        self.feature_, self.threshold_, self.left_, self.right_, self.value_, inbag = fitted
        self.n_features_ = p
        self.y_range_ = (float(y.min()), float(y.max()))

        per_tree = self._per_tree(X, n_threads)
        oob = inbag == 0
        n_oob = oob.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.oob_prediction_ = np.where(n_oob > 0, (per_tree * oob).sum(axis=0) / n_oob, np.nan)
        ok = n_oob > 0
        if ok.sum() >= 2:
            resid = y[ok] - self.oob_prediction_[ok]
            self.oob_mse_ = float(np.mean(resid**2))
            var = float(np.var(y[ok]))
            self.oob_r2_ = 1.0 - self.oob_mse_ / var if var > 0 else float("nan")
        else:
            self.oob_mse_ = self.oob_r2_ = float("nan")
        return self

    def _per_tree(self, X, n_threads=None):
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        with threads(n_threads):
            return _predict_trees(X, self.feature_, self.threshold_, self.left_, self.right_, self.value_)

    def predict(self, X, n_threads=None):
        return self._per_tree(X, n_threads).mean(axis=0)
