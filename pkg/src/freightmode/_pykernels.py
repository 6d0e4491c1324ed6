"""Pure numpy implementations of the tree kernels.

Used when the compiled extension is unavailable, and as the reference the
compiled kernels are checked against. Every floating-point expression here
is evaluated in the same order as in ``_ckernels.pyx`` so that both back
ends grow bit-identical trees.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


class SplitMix64:
    """Small counter-based PRNG shared by both kernel back ends."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * _INV53

    def randint(self, n: int) -> int:
        return self.next() % n


class _NodeArrays:
    def __init__(self, n_outputs):
        self.n_outputs = n_outputs
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.cover = []
        self.gain = []

    def add_leaf(self, value, cover, parent, is_left):
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.cover.append(cover)
        self.gain.append(0.0)
        if parent >= 0:
            if is_left:
                self.left[parent] = node
            else:
                self.right[parent] = node
        return node

    def finish(self):
        return {
            "feature": np.asarray(self.feature, dtype=np.int32),
            "threshold": np.asarray(self.threshold, dtype=np.float64),
            "left": np.asarray(self.left, dtype=np.int32),
            "right": np.asarray(self.right, dtype=np.int32),
            "value": np.asarray(self.value, dtype=np.float64).reshape(-1, self.n_outputs),
            "cover": np.asarray(self.cover, dtype=np.float64),
            "gain": np.asarray(self.gain, dtype=np.float64),
        }


def _varying(Xt, lists, start, end):
    rows = np.arange(Xt.shape[0])
    return Xt[rows, lists[:, start]] < Xt[rows, lists[:, end - 1]]


def _partition(lists, goes_left, start, end, varying):
    # lists of node-constant features stay constant below; only list 0 (used
    # for node statistics) must always be partitioned
    feats = np.flatnonzero(varying)
    if not varying[0]:
        feats = np.concatenate(([0], feats))
    sub = lists[feats, start:end]
    go_right = ~goes_left[sub]
    perm = np.argsort(go_right, axis=1, kind="stable")
    lists[feats, start:end] = np.take_along_axis(sub, perm, axis=1)


def _candidate_features(varying, max_features, rng):
    n_features = len(varying)
    if max_features >= n_features:
        return [f for f in range(n_features) if varying[f]]
    perm = list(range(n_features))
    for i in range(n_features - 1, 0, -1):
        j = rng.randint(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    chosen = []
    for f in perm:
        if varying[f]:
            chosen.append(f)
            if len(chosen) == max_features:
                break
    chosen.sort()
    return chosen


def build_classifier_tree(Xt, y, counts, order, n_classes, max_depth, min_leaf,
                          min_gain, max_features, extra, seed):
    """Grow a Gini CART tree on presorted, multiplicity-weighted rows.

    ``Xt`` is feature-major (n_features, n_rows). ``counts`` holds the
    bootstrap multiplicity of each row (0 excludes it). ``order`` is the
    stable argsort of each row of ``Xt``. ``max_depth < 0`` means unbounded.
    """
    Xt = np.ascontiguousarray(Xt, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    n_features, n_rows = Xt.shape
    rng = SplitMix64(seed)
    lists = np.stack([np.repeat(order[f], counts[order[f]]) for f in range(n_features)])
    lists = lists.astype(np.int64)
    n_total = lists.shape[1]
    goes_left = np.zeros(n_rows, dtype=bool)
    out = _NodeArrays(n_classes)

    stack = [(0, n_total, 0, -1, False)]
    while stack:
        start, end, depth, parent, is_left = stack.pop()
        n = end - start
        cnt = np.bincount(y[lists[0, start:end]], minlength=n_classes).astype(np.int64)
        sp = int((cnt * cnt).sum())
        node = out.add_leaf(cnt / n, float(n), parent, is_left)
        if (max_depth >= 0 and depth >= max_depth) or n < 2 * min_leaf or sp == n * n:
            continue

        varying = _varying(Xt, lists, start, end)
        cands = _candidate_features(varying, max_features, rng)
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        best_nl = 0
        for f in cands:
            seg = lists[f, start:end]
            xs = Xt[f, seg]
            ys = y[seg]
            if extra:
                lo = xs[0]
                hi = xs[-1]
                thr = lo + rng.uniform() * (hi - lo)
                if thr >= hi:
                    thr = lo
                nl = int(np.searchsorted(xs, thr, side="right"))
                nr = n - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                cl = np.bincount(ys[:nl], minlength=n_classes).astype(np.int64)
                cr = cnt - cl
                score = float(int((cl * cl).sum())) / float(nl) + float(int((cr * cr).sum())) / float(nr)
                if score > best_score:
                    best_score, best_f, best_thr, best_nl = score, f, thr, nl
                continue
            onehot = np.zeros((n, n_classes), dtype=np.int64)
            onehot[np.arange(n), ys] = 1
            cl = np.cumsum(onehot, axis=0)[:-1]
            cr = cnt[None, :] - cl
            sl = (cl * cl).sum(axis=1).astype(np.float64)
            sr = (cr * cr).sum(axis=1).astype(np.float64)
            nl = np.arange(1, n, dtype=np.int64)
            nr = n - nl
            valid = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
            if not valid.any():
                continue
            score = sl / nl.astype(np.float64) + sr / nr.astype(np.float64)
            score = np.where(valid, score, -np.inf)
            i = int(np.argmax(score))
            if score[i] > best_score:
                a = xs[i]
                b = xs[i + 1]
                thr = (a + b) / 2.0
                if thr >= b:
                    thr = a
                best_score, best_f, best_thr, best_nl = float(score[i]), f, float(thr), i + 1

        if best_f < 0:
            continue
        gain = best_score / float(n) - float(sp) / (float(n) * float(n))
        if gain < 0.0:
            gain = 0.0
        if gain < min_gain:
            continue
        out.feature[node] = best_f
        out.threshold[node] = best_thr
        out.gain[node] = gain
        seg = lists[best_f, start:end]
        goes_left[seg] = Xt[best_f, seg] <= best_thr
        _partition(lists, goes_left, start, end, varying)
        stack.append((start + best_nl, end, depth + 1, node, False))
        stack.append((start, start + best_nl, depth + 1, node, True))
    return out.finish()


def build_regressor_tree(Xt, grad, hess, order, max_depth, min_leaf, reg_lambda,
                         min_gain, min_child_weight):
    """Grow one Newton regression tree on gradient/hessian statistics.

    Leaf weight is ``-G / (H + reg_lambda)``; a split is kept only when its
    structure-score gain exceeds ``min_gain``.
    """
    Xt = np.ascontiguousarray(Xt, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    n_features, n_rows = Xt.shape
    lists = np.array(order, dtype=np.int64, copy=True)
    goes_left = np.zeros(n_rows, dtype=bool)
    out = _NodeArrays(1)
    lam = float(reg_lambda)

    stack = [(0, n_rows, 0, -1, False)]
    while stack:
        start, end, depth, parent, is_left = stack.pop()
        n = end - start
        seg0 = lists[0, start:end]
        G = float(np.cumsum(grad[seg0])[-1])
        H = float(np.cumsum(hess[seg0])[-1])
        node = out.add_leaf([-G / (H + lam)], float(n), parent, is_left)
        if (max_depth >= 0 and depth >= max_depth) or n < 2 * min_leaf:
            continue

        varying = _varying(Xt, lists, start, end)
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        best_nl = 0
        for f in np.flatnonzero(varying):
            seg = lists[f, start:end]
            xs = Xt[f, seg]
            gl = np.cumsum(grad[seg])[:-1]
            hl = np.cumsum(hess[seg])[:-1]
            gr = G - gl
            hr = H - hl
            nl = np.arange(1, n, dtype=np.int64)
            nr = n - nl
            valid = ((xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
                     & (hl >= min_child_weight) & (hr >= min_child_weight))
            if not valid.any():
                continue
            score = gl * gl / (hl + lam) + gr * gr / (hr + lam)
            score = np.where(valid, score, -np.inf)
            i = int(np.argmax(score))
            if score[i] > best_score:
                a = xs[i]
                b = xs[i + 1]
                thr = (a + b) / 2.0
                if thr >= b:
                    thr = a
                best_score, best_f, best_thr, best_nl = float(score[i]), f, float(thr), i + 1

        if best_f < 0:
            continue
        gain = best_score - G * G / (H + lam)
        if not gain > min_gain:
            continue
        out.feature[node] = best_f
        out.threshold[node] = best_thr
        out.gain[node] = gain
        seg = lists[best_f, start:end]
        goes_left[seg] = Xt[best_f, seg] <= best_thr
        _partition(lists, goes_left, start, end, varying)
        stack.append((start + best_nl, end, depth + 1, node, False))
        stack.append((start, start + best_nl, depth + 1, node, True))
    return out.finish()


def apply_tree(X, feature, threshold, left, right):
    """Return the leaf index reached by every row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        idx = rows[active]
        nd = node[idx]
        f = feature[nd]
        go_left = X[idx, f] <= threshold[nd]
        node[idx] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node


# --- path-dependent TreeSHAP -------------------------------------------------

def _extend(path, pz, po, pi):
    # path: list of [feature, zero_fraction, one_fraction, weight]
    depth = len(path)
    path.append([pi, pz, po, 1.0 if depth == 0 else 0.0])
    for i in range(depth - 1, -1, -1):
        path[i + 1][3] += po * path[i][3] * (i + 1) / (depth + 1)
        path[i][3] = pz * path[i][3] * (depth - i) / (depth + 1)


def _unwind(path, i):
    depth = len(path) - 1
    po = path[i][2]
    pz = path[i][1]
    n = path[depth][3]
    out = [list(p) for p in path[:-1]]
    for j in range(depth - 1, -1, -1):
        if po != 0:
            t = out[j][3]
            out[j][3] = n * (depth + 1) / ((j + 1) * po)
            n = t - out[j][3] * pz * (depth - j) / (depth + 1)
        else:
            out[j][3] = out[j][3] * (depth + 1) / (pz * (depth - j))
    for j in range(i, depth):
        out[j][0] = path[j + 1][0]
        out[j][1] = path[j + 1][1]
        out[j][2] = path[j + 1][2]
    return out


def _unwound_sum(path, i):
    depth = len(path) - 1
    po = path[i][2]
    pz = path[i][1]
    nxt = path[depth][3]
    total = 0.0
    if po != 0:
        for j in range(depth - 1, -1, -1):
            tmp = nxt * (depth + 1) / ((j + 1) * po)
            total += tmp
            nxt = path[j][3] - tmp * pz * (depth - j) / (depth + 1)
    elif pz != 0:
        for j in range(depth - 1, -1, -1):
            total += path[j][3] / pz / ((depth - j) / (depth + 1))
    return total


def _shap_recurse(node, path, pz, po, pi, x, tree, phi):
    feature, threshold, left, right, value, cover = tree
    path = [list(p) for p in path]
    _extend(path, pz, po, pi)
    f = feature[node]
    if f < 0:
        for i in range(1, len(path)):
            w = _unwound_sum(path, i)
            phi[path[i][0]] += w * (path[i][2] - path[i][1]) * value[node]
        return
    if x[f] <= threshold[node]:
        hot, cold = left[node], right[node]
    else:
        hot, cold = right[node], left[node]
    iz = 1.0
    io = 1.0
    k = next((j for j in range(1, len(path)) if path[j][0] == f), -1)
    if k >= 0:
        iz = path[k][1]
        io = path[k][2]
        path = _unwind(path, k)
    _shap_recurse(hot, path, iz * cover[hot] / cover[node], io, f, x, tree, phi)
    _shap_recurse(cold, path, iz * cover[cold] / cover[node], 0.0, f, x, tree, phi)


def tree_shap(X, feature, threshold, left, right, value, cover):
    """Path-dependent TreeSHAP attributions, shape (n_rows, n_features, n_outputs)."""
    X = np.asarray(X, dtype=np.float64)
    value = np.asarray(value, dtype=np.float64)
    n_rows, n_features = X.shape
    phi = np.zeros((n_rows, n_features, value.shape[1]))
    tree = (feature, threshold, left, right, value, cover)
    for r in range(n_rows):
        _shap_recurse(0, [], 1.0, 1.0, -1, X[r], tree, phi[r])
    return phi
