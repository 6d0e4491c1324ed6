# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled tree kernels.

Same contract and same arithmetic order as ``_pykernels``; the two back ends
must produce bit-identical trees for identical inputs.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy
from libcpp.vector cimport vector

cnp.import_array()


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) noexcept nogil:
    return <double>(_next(state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline Py_ssize_t _randint(uint64_t* state, Py_ssize_t n) noexcept nogil:
    return <Py_ssize_t>(_next(state) % <uint64_t>n)


cdef struct StackItem:
    Py_ssize_t start
    Py_ssize_t end
    int depth
    Py_ssize_t parent
    bint is_left


cdef struct Nodes:
    vector[int32_t] feature
    vector[double] threshold
    vector[int32_t] left
    vector[int32_t] right
    vector[double] value
    vector[double] cover
    vector[double] gain


cdef Py_ssize_t _add_leaf(Nodes* out, double* value, int n_out, double cover,
                          Py_ssize_t parent, bint is_left) noexcept nogil:
    cdef Py_ssize_t node = out.feature.size()
    cdef int k
    out.feature.push_back(-1)
    out.threshold.push_back(0.0)
    out.left.push_back(-1)
    out.right.push_back(-1)
    for k in range(n_out):
        out.value.push_back(value[k])
    out.cover.push_back(cover)
    out.gain.push_back(0.0)
    if parent >= 0:
        if is_left:
            out.left[parent] = <int32_t>node
        else:
            out.right[parent] = <int32_t>node
    return node


cdef dict _finish(Nodes* out, int n_out):
    cdef Py_ssize_t n = out.feature.size()
    feature = np.empty(n, dtype=np.int32)
    threshold = np.empty(n, dtype=np.float64)
    left = np.empty(n, dtype=np.int32)
    right = np.empty(n, dtype=np.int32)
    value = np.empty((n, n_out), dtype=np.float64)
    cover = np.empty(n, dtype=np.float64)
    gain = np.empty(n, dtype=np.float64)
    cdef int32_t[::1] fv = feature
    cdef double[::1] tv = threshold
    cdef int32_t[::1] lv = left
    cdef int32_t[::1] rv = right
    cdef double[:, ::1] vv = value
    cdef double[::1] cv = cover
    cdef double[::1] gv = gain
    cdef Py_ssize_t i
    cdef int k
    for i in range(n):
        fv[i] = out.feature[i]
        tv[i] = out.threshold[i]
        lv[i] = out.left[i]
        rv[i] = out.right[i]
        cv[i] = out.cover[i]
        gv[i] = out.gain[i]
        for k in range(n_out):
            vv[i, k] = out.value[i * n_out + k]
    return {"feature": feature, "threshold": threshold, "left": left,
            "right": right, "value": value, "cover": cover, "gain": gain}


cdef void _mark_varying(const double[:, ::1] Xt, int64_t[:, ::1] lists, Py_ssize_t start,
                        Py_ssize_t end, unsigned char* varying) noexcept nogil:
    cdef Py_ssize_t f
    for f in range(Xt.shape[0]):
        varying[f] = Xt[f, lists[f, start]] < Xt[f, lists[f, end - 1]]


cdef void _partition(int64_t[:, ::1] lists, unsigned char* goes_left, int64_t* buf,
                     Py_ssize_t start, Py_ssize_t end, unsigned char* varying) noexcept nogil:
    # lists of node-constant features stay constant below; only list 0 (used
    # for node statistics) must always be partitioned
    cdef Py_ssize_t n_features = lists.shape[0]
    cdef Py_ssize_t f, i, a, b, r
    cdef Py_ssize_t n = end - start
    for f in range(n_features):
        if f != 0 and not varying[f]:
            continue
        a = 0
        for i in range(start, end):
            r = lists[f, i]
            if goes_left[r]:
                buf[a] = r
                a += 1
        b = a
        for i in range(start, end):
            r = lists[f, i]
            if not goes_left[r]:
                buf[b] = r
                b += 1
        for i in range(n):
            lists[f, start + i] = buf[i]


cdef Py_ssize_t _candidates(Py_ssize_t n_features, unsigned char* varying, Py_ssize_t max_features,
                            uint64_t* state, Py_ssize_t* perm, Py_ssize_t* chosen) noexcept nogil:
    cdef Py_ssize_t f, i, j, tmp, m = 0
    cdef Py_ssize_t a, b
    if max_features >= n_features:
        for f in range(n_features):
            if varying[f]:
                chosen[m] = f
                m += 1
        return m
    for f in range(n_features):
        perm[f] = f
    for i in range(n_features - 1, 0, -1):
        j = _randint(state, i + 1)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    for i in range(n_features):
        f = perm[i]
        if varying[f]:
            chosen[m] = f
            m += 1
            if m == max_features:
                break
    # insertion sort, candidate sets are small
    for a in range(1, m):
        tmp = chosen[a]
        b = a - 1
        while b >= 0 and chosen[b] > tmp:
            chosen[b + 1] = chosen[b]
            b -= 1
        chosen[b + 1] = tmp
    return m


def build_classifier_tree(Xt_in, y_in, counts_in, order_in, int n_classes, int max_depth,
                          Py_ssize_t min_leaf, double min_gain, Py_ssize_t max_features,
                          bint extra, uint64_t seed):
    cdef const double[:, ::1] Xt = np.ascontiguousarray(Xt_in, dtype=np.float64)
    cdef const int64_t[::1] y = np.ascontiguousarray(y_in, dtype=np.int64)
    cdef const int64_t[::1] counts = np.ascontiguousarray(counts_in, dtype=np.int64)
    cdef const int64_t[:, ::1] order = np.ascontiguousarray(order_in, dtype=np.int64)
    cdef Py_ssize_t n_features = Xt.shape[0]
    cdef Py_ssize_t n_rows = Xt.shape[1]
    cdef Py_ssize_t n_total = 0
    cdef Py_ssize_t i, f, r, c, pos
    for i in range(n_rows):
        n_total += counts[i]
    lists_arr = np.empty((n_features, n_total), dtype=np.int64)
    cdef int64_t[:, ::1] lists = lists_arr
    for f in range(n_features):
        pos = 0
        for i in range(n_rows):
            r = order[f, i]
            for c in range(counts[r]):
                lists[f, pos] = r
                pos += 1

    cdef uint64_t state = seed
    cdef Nodes out
    cdef vector[StackItem] stack
    cdef StackItem item, child
    cdef unsigned char* goes_left = <unsigned char*>malloc(n_rows)
    cdef int64_t* buf = <int64_t*>malloc((n_total + 1) * sizeof(int64_t))
    cdef Py_ssize_t* perm = <Py_ssize_t*>malloc((n_features + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* chosen = <Py_ssize_t*>malloc((n_features + 1) * sizeof(Py_ssize_t))
    cdef unsigned char* varying = <unsigned char*>malloc(n_features + 1)
    cdef int64_t* cnt = <int64_t*>malloc(n_classes * sizeof(int64_t))
    cdef int64_t* cl = <int64_t*>malloc(n_classes * sizeof(int64_t))
    cdef int64_t* cr = <int64_t*>malloc(n_classes * sizeof(int64_t))
    cdef double* val = <double*>malloc(n_classes * sizeof(double))
    cdef Py_ssize_t start, end, n, node, m, ci, nl, nr, best_nl, best_f
    cdef int k, yk
    cdef int64_t sp, sl, sr
    cdef double score, best_score, best_thr, thr, lo, hi, a, b, gain

    with nogil:
        item.start = 0
        item.end = n_total
        item.depth = 0
        item.parent = -1
        item.is_left = False
        stack.push_back(item)
        while stack.size() > 0:
            item = stack.back()
            stack.pop_back()
            start = item.start
            end = item.end
            n = end - start
            for k in range(n_classes):
                cnt[k] = 0
            for i in range(start, end):
                cnt[y[lists[0, i]]] += 1
            sp = 0
            for k in range(n_classes):
                sp += cnt[k] * cnt[k]
                val[k] = <double>cnt[k] / <double>n
            node = _add_leaf(&out, val, n_classes, <double>n, item.parent, item.is_left)
            if (max_depth >= 0 and item.depth >= max_depth) or n < 2 * min_leaf or sp == <int64_t>n * n:
                continue

            _mark_varying(Xt, lists, start, end, varying)
            m = _candidates(n_features, varying, max_features, &state, perm, chosen)
            best_score = -1.0 / 0.0
            best_f = -1
            best_thr = 0.0
            best_nl = 0
            for ci in range(m):
                f = chosen[ci]
                if extra:
                    lo = Xt[f, lists[f, start]]
                    hi = Xt[f, lists[f, end - 1]]
                    thr = lo + _uniform(&state) * (hi - lo)
                    if thr >= hi:
                        thr = lo
                    for k in range(n_classes):
                        cl[k] = 0
                    nl = 0
                    for i in range(start, end):
                        r = lists[f, i]
                        if Xt[f, r] > thr:
                            break
                        cl[y[r]] += 1
                        nl += 1
                    nr = n - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    sl = 0
                    sr = 0
                    for k in range(n_classes):
                        sl += cl[k] * cl[k]
                        sr += (cnt[k] - cl[k]) * (cnt[k] - cl[k])
                    score = <double>sl / <double>nl + <double>sr / <double>nr
                    if score > best_score:
                        best_score = score
                        best_f = f
                        best_thr = thr
                        best_nl = nl
                    continue

                for k in range(n_classes):
                    cl[k] = 0
                    cr[k] = cnt[k]
                sl = 0
                sr = sp
                for i in range(start, end - 1):
                    r = lists[f, i]
                    yk = <int>y[r]
                    # (c+1)^2 - c^2 = 2c + 1 ; (c-1)^2 - c^2 = -2c + 1
                    sl += 2 * cl[yk] + 1
                    sr += -2 * cr[yk] + 1
                    cl[yk] += 1
                    cr[yk] -= 1
                    nl = i - start + 1
                    nr = n - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    a = Xt[f, r]
                    b = Xt[f, lists[f, i + 1]]
                    if not a < b:
                        continue
                    score = <double>sl / <double>nl + <double>sr / <double>nr
                    if score > best_score:
                        thr = (a + b) / 2.0
                        if thr >= b:
                            thr = a
                        best_score = score
                        best_f = f
                        best_thr = thr
                        best_nl = nl

            if best_f < 0:
                continue
            gain = best_score / <double>n - <double>sp / (<double>n * <double>n)
            if gain < 0.0:
                gain = 0.0
            if gain < min_gain:
                continue
            out.feature[node] = <int32_t>best_f
            out.threshold[node] = best_thr
            out.gain[node] = gain
            for i in range(start, end):
                r = lists[best_f, i]
                goes_left[r] = Xt[best_f, r] <= best_thr
            _partition(lists, goes_left, buf, start, end, varying)
            child.depth = item.depth + 1
            child.parent = node
            child.start = start + best_nl
            child.end = end
            child.is_left = False
            stack.push_back(child)
            child.start = start
            child.end = start + best_nl
            child.is_left = True
            stack.push_back(child)

    free(goes_left)
    free(buf)
    free(varying)
    free(perm)
    free(chosen)
    free(cnt)
    free(cl)
    free(cr)
    free(val)
    return _finish(&out, n_classes)


def build_regressor_tree(Xt_in, grad_in, hess_in, order_in, int max_depth, Py_ssize_t min_leaf,
                         double reg_lambda, double min_gain, double min_child_weight):
    cdef const double[:, ::1] Xt = np.ascontiguousarray(Xt_in, dtype=np.float64)
    cdef const double[::1] grad = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef const double[::1] hess = np.ascontiguousarray(hess_in, dtype=np.float64)
    lists_arr = np.array(order_in, dtype=np.int64, copy=True, order="C")
    cdef int64_t[:, ::1] lists = lists_arr
    cdef Py_ssize_t n_features = Xt.shape[0]
    cdef Py_ssize_t n_rows = Xt.shape[1]
    cdef Nodes out
    cdef vector[StackItem] stack
    cdef StackItem item, child
    cdef unsigned char* goes_left = <unsigned char*>malloc(n_rows + 1)
    cdef int64_t* buf = <int64_t*>malloc((n_rows + 1) * sizeof(int64_t))
    cdef unsigned char* varying = <unsigned char*>malloc(n_features + 1)
    cdef Py_ssize_t start, end, n, node, i, f, r, nl, nr, best_nl, best_f
    cdef double G, H, gl, hl, gr, hr, score, best_score, best_thr, thr, a, b, gain, leaf
    cdef double lam = reg_lambda

    with nogil:
        item.start = 0
        item.end = n_rows
        item.depth = 0
        item.parent = -1
        item.is_left = False
        stack.push_back(item)
        while stack.size() > 0:
            item = stack.back()
            stack.pop_back()
            start = item.start
            end = item.end
            n = end - start
            G = 0.0
            H = 0.0
            for i in range(start, end):
                r = lists[0, i]
                G = G + grad[r]
                H = H + hess[r]
            leaf = -G / (H + lam)
            node = _add_leaf(&out, &leaf, 1, <double>n, item.parent, item.is_left)
            if (max_depth >= 0 and item.depth >= max_depth) or n < 2 * min_leaf:
                continue

            best_score = -1.0 / 0.0
            best_f = -1
            best_thr = 0.0
            best_nl = 0
            _mark_varying(Xt, lists, start, end, varying)
            for f in range(n_features):
                if not varying[f]:
                    continue
                gl = 0.0
                hl = 0.0
                for i in range(start, end - 1):
                    r = lists[f, i]
                    gl = gl + grad[r]
                    hl = hl + hess[r]
                    nl = i - start + 1
                    nr = n - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    a = Xt[f, r]
                    b = Xt[f, lists[f, i + 1]]
                    if not a < b:
                        continue
                    gr = G - gl
                    hr = H - hl
                    if hl < min_child_weight or hr < min_child_weight:
                        continue
                    score = gl * gl / (hl + lam) + gr * gr / (hr + lam)
                    if score > best_score:
                        thr = (a + b) / 2.0
                        if thr >= b:
                            thr = a
                        best_score = score
                        best_f = f
                        best_thr = thr
                        best_nl = nl

            if best_f < 0:
                continue
            gain = best_score - G * G / (H + lam)
            if not gain > min_gain:
                continue
            out.feature[node] = <int32_t>best_f
            out.threshold[node] = best_thr
            out.gain[node] = gain
            for i in range(start, end):
                r = lists[best_f, i]
                goes_left[r] = Xt[best_f, r] <= best_thr
            _partition(lists, goes_left, buf, start, end, varying)
            child.depth = item.depth + 1
            child.parent = node
            child.start = start + best_nl
            child.end = end
            child.is_left = False
            stack.push_back(child)
            child.start = start
            child.end = start + best_nl
            child.is_left = True
            stack.push_back(child)

    free(goes_left)
    free(buf)
    free(varying)
    return _finish(&out, 1)


def apply_tree(X_in, feature_in, threshold_in, left_in, right_in):
    cdef const double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef const int32_t[::1] feature = np.ascontiguousarray(feature_in, dtype=np.int32)
    cdef const double[::1] threshold = np.ascontiguousarray(threshold_in, dtype=np.float64)
    cdef const int32_t[::1] left = np.ascontiguousarray(left_in, dtype=np.int32)
    cdef const int32_t[::1] right = np.ascontiguousarray(right_in, dtype=np.int32)
    out_arr = np.empty(X.shape[0], dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int32_t node, f
    with nogil:
        for i in range(X.shape[0]):
            node = 0
            f = feature[node]
            while f >= 0:
                if X[i, f] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
                f = feature[node]
            out[i] = node
    return out_arr


# --- path-dependent TreeSHAP -------------------------------------------------

cdef struct PathElem:
    int feature
    double zero_fraction
    double one_fraction
    double weight


cdef void _extend(PathElem* path, int depth, double pz, double po, int pi) noexcept nogil:
    path[depth].feature = pi
    path[depth].zero_fraction = pz
    path[depth].one_fraction = po
    path[depth].weight = 1.0 if depth == 0 else 0.0
    cdef int i
    for i in range(depth - 1, -1, -1):
        path[i + 1].weight += po * path[i].weight * (i + 1) / <double>(depth + 1)
        path[i].weight = pz * path[i].weight * (depth - i) / <double>(depth + 1)


cdef void _unwind(PathElem* path, int depth, int i) noexcept nogil:
    # in place; path has depth + 1 elements, leaves depth elements
    cdef double po = path[i].one_fraction
    cdef double pz = path[i].zero_fraction
    cdef double n = path[depth].weight
    cdef double t
    cdef int j
    for j in range(depth - 1, -1, -1):
        if po != 0:
            t = path[j].weight
            path[j].weight = n * (depth + 1) / ((j + 1) * po)
            n = t - path[j].weight * pz * (depth - j) / <double>(depth + 1)
        else:
            path[j].weight = path[j].weight * (depth + 1) / (pz * (depth - j))
    for j in range(i, depth):
        path[j].feature = path[j + 1].feature
        path[j].zero_fraction = path[j + 1].zero_fraction
        path[j].one_fraction = path[j + 1].one_fraction


cdef double _unwound_sum(PathElem* path, int depth, int i) noexcept nogil:
    cdef double po = path[i].one_fraction
    cdef double pz = path[i].zero_fraction
    cdef double nxt = path[depth].weight
    cdef double total = 0.0
    cdef double tmp
    cdef int j
    if po != 0:
        for j in range(depth - 1, -1, -1):
            tmp = nxt * (depth + 1) / ((j + 1) * po)
            total += tmp
            nxt = path[j].weight - tmp * pz * (depth - j) / <double>(depth + 1)
    elif pz != 0:
        for j in range(depth - 1, -1, -1):
            total += path[j].weight / pz / ((depth - j) / <double>(depth + 1))
    return total


cdef void _recurse(int node, PathElem* parent_path, int depth, double pz, double po, int pi,
                   const double* x, const int32_t* feature, const double* threshold,
                   const int32_t* left, const int32_t* right, const double* value,
                   const double* cover, int n_out, double* phi) noexcept nogil:
    # each level gets its own copy of the path right after its parent's
    cdef PathElem* path = parent_path + depth
    cdef int i, k, hot, cold, f
    cdef double w, iz, io
    if depth > 0:
        memcpy(path, parent_path, depth * sizeof(PathElem))
    _extend(path, depth, pz, po, pi)
    f = feature[node]
    if f < 0:
        for i in range(1, depth + 1):
            w = _unwound_sum(path, depth, i)
            for k in range(n_out):
                phi[path[i].feature * n_out + k] += w * (path[i].one_fraction - path[i].zero_fraction) * value[node * n_out + k]
        return
    if x[f] <= threshold[node]:
        hot = left[node]
        cold = right[node]
    else:
        hot = right[node]
        cold = left[node]
    iz = 1.0
    io = 1.0
    k = -1
    for i in range(1, depth + 1):
        if path[i].feature == f:
            k = i
            break
    if k >= 0:
        iz = path[k].zero_fraction
        io = path[k].one_fraction
        _unwind(path, depth, k)
        depth -= 1
    _recurse(hot, path, depth + 1, iz * cover[hot] / cover[node], io, f,
             x, feature, threshold, left, right, value, cover, n_out, phi)
    _recurse(cold, path, depth + 1, iz * cover[cold] / cover[node], 0.0, f,
             x, feature, threshold, left, right, value, cover, n_out, phi)


cdef int _max_depth(const int32_t* left, const int32_t* right, int node) noexcept nogil:
    if left[node] < 0:
        return 0
    cdef int a = _max_depth(left, right, left[node])
    cdef int b = _max_depth(left, right, right[node])
    return 1 + (a if a > b else b)


def tree_shap(X_in, feature_in, threshold_in, left_in, right_in, value_in, cover_in):
    cdef const double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef const int32_t[::1] feature = np.ascontiguousarray(feature_in, dtype=np.int32)
    cdef const double[::1] threshold = np.ascontiguousarray(threshold_in, dtype=np.float64)
    cdef const int32_t[::1] left = np.ascontiguousarray(left_in, dtype=np.int32)
    cdef const int32_t[::1] right = np.ascontiguousarray(right_in, dtype=np.int32)
    cdef const double[:, ::1] value = np.ascontiguousarray(value_in, dtype=np.float64)
    cdef const double[::1] cover = np.ascontiguousarray(cover_in, dtype=np.float64)
    cdef Py_ssize_t n_rows = X.shape[0]
    cdef Py_ssize_t n_features = X.shape[1]
    cdef int n_out = value.shape[1]
    phi_arr = np.zeros((n_rows, n_features, n_out), dtype=np.float64)
    cdef double[:, :, ::1] phi = phi_arr
    if n_rows == 0:
        return phi_arr
    cdef int depth = _max_depth(&left[0], &right[0], 0) + 2
    # a path of length <= depth is stored at every recursion level
    cdef PathElem* path = <PathElem*>malloc(((depth * (depth + 1)) // 2 + depth + 1) * sizeof(PathElem))
    cdef Py_ssize_t r
    with nogil:
        for r in range(n_rows):
            _recurse(0, path, 0, 1.0, 1.0, -1, &X[r, 0], &feature[0], &threshold[0],
                     &left[0], &right[0], &value[0, 0], &cover[0], n_out, &phi[r, 0, 0])
    free(path)
    return phi_arr
