# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: kd-tree nearest-neighbour queries and farthest point sampling.

Both functions mirror ``cpccd._pykernels`` exactly, including tie-breaking by
lowest point index, so the two backends are interchangeable bit for bit.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.int64_t i64


def nn_query(const double[:, ::1] points,
             const i64[::1] perm,
             const i64[::1] node_lo,
             const i64[::1] node_hi,
             const i64[::1] node_dim,
             const double[::1] node_split,
             const i64[::1] node_left,
             const i64[::1] node_right,
             const double[:, ::1] queries,
             const i64[::1] skip):
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t n_nodes = node_lo.shape[0]
    out_idx_arr = np.full(m, -1, dtype=np.int64)
    out_d2_arr = np.full(m, np.inf, dtype=np.float64)
    cdef i64[::1] out_idx = out_idx_arr
    cdef double[::1] out_d2 = out_d2_arr
    # depth of a median-split tree is ~log2(n); 128 covers any realistic cloud
    cdef i64[128] stack
    cdef double[128] stack_bound
    cdef Py_ssize_t qi, top, j
    cdef i64 node, p, best_i, sk, near, far, d
    cdef double qx, qy, qz, dx, dy, dz, d2, best, diff, bound

    if n_nodes == 0:
        return out_idx_arr, out_d2_arr

    with nogil:
        for qi in range(m):
            qx = queries[qi, 0]
            qy = queries[qi, 1]
            qz = queries[qi, 2]
            sk = skip[qi]
            best = INFINITY
            best_i = -1
            top = 0
            stack[0] = 0
            stack_bound[0] = 0.0
            top = 1
            while top > 0:
                top -= 1
                node = stack[top]
                bound = stack_bound[top]
                if bound > best:
                    continue
                d = node_dim[node]
                if d < 0:
                    for j in range(node_lo[node], node_hi[node]):
                        p = perm[j]
                        if p == sk:
                            continue
                        dx = points[p, 0] - qx
                        dy = points[p, 1] - qy
                        dz = points[p, 2] - qz
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 < best or (d2 == best and p < best_i):
                            best = d2
                            best_i = p
                    continue
                if d == 0:
                    diff = qx - node_split[node]
                elif d == 1:
                    diff = qy - node_split[node]
                else:
                    diff = qz - node_split[node]
                if diff < 0:
                    near = node_left[node]
                    far = node_right[node]
                else:
                    near = node_right[node]
                    far = node_left[node]
                # far pushed first so the near side is explored first
                stack[top] = far
                stack_bound[top] = diff * diff
                top += 1
                stack[top] = near
                stack_bound[top] = 0.0
                top += 1
            out_idx[qi] = best_i
            out_d2[qi] = best
    return out_idx_arr, out_d2_arr


def farthest_point_sample(const double[:, ::1] points, i64 first, i64 k):
    cdef Py_ssize_t n = points.shape[0]
    out_arr = np.empty(k, dtype=np.int64)
    cdef i64[::1] out = out_arr
    min_d2_arr = np.full(n, np.inf, dtype=np.float64)
    cdef double[::1] min_d2 = min_d2_arr
    cdef Py_ssize_t s, i
    cdef i64 cur = first, arg
    cdef double cx, cy, cz, dx, dy, dz, d2, best

    with nogil:
        for s in range(k):
            out[s] = cur
            min_d2[cur] = -1.0
            if s == k - 1:
                break
            cx = points[cur, 0]
            cy = points[cur, 1]
            cz = points[cur, 2]
            best = -1.0
            arg = -1
            for i in range(n):
                if min_d2[i] < 0.0:
                    continue
                dx = points[i, 0] - cx
                dy = points[i, 1] - cy
                dz = points[i, 2] - cz
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < min_d2[i]:
                    min_d2[i] = d2
                if min_d2[i] > best:
                    best = min_d2[i]
                    arg = i
            cur = arg
    return out_arr
