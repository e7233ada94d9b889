"""Pure numpy fallback for the compiled kernels in ``_ckernels.pyx``.

``nn_query`` ignores the tree arrays and scans blocks of queries against every
point. Squared distances are formed as ``dx*dx + dy*dy + dz*dz`` in the same
order as the compiled loop, and ``argmin`` returns the first minimum, so both
backends agree exactly.
"""
from __future__ import annotations

import numpy as np

# queries x points per block, bounds the temporary distance matrix to ~32 MB
_BLOCK_ELEMS = 1 << 22


def nn_query(points, perm, node_lo, node_hi, node_dim, node_split, node_left, node_right,
             queries, skip):
    n = points.shape[0]
    m = queries.shape[0]
    out_idx = np.full(m, -1, dtype=np.int64)
    out_d2 = np.full(m, np.inf, dtype=np.float64)
    if n == 0 or m == 0:
        return out_idx, out_d2
    px, py, pz = points[:, 0], points[:, 1], points[:, 2]
    step = max(1, _BLOCK_ELEMS // n)
    for start in range(0, m, step):
        stop = min(m, start + step)
        q = queries[start:stop]
        dx = px[None, :] - q[:, 0:1]
        dy = py[None, :] - q[:, 1:2]
        dz = pz[None, :] - q[:, 2:3]
        d2 = dx * dx + dy * dy + dz * dz
        sk = skip[start:stop]
        rows = np.nonzero(sk >= 0)[0]
        if rows.size:
            d2[rows, sk[rows]] = np.inf
        idx = np.argmin(d2, axis=1)
        best = d2[np.arange(stop - start), idx]
        valid = np.isfinite(best)
        out_idx[start:stop] = np.where(valid, idx, -1)
        out_d2[start:stop] = best
    return out_idx, out_d2


def farthest_point_sample(points, first, k):
    n = points.shape[0]
    out = np.empty(k, dtype=np.int64)
    min_d2 = np.full(n, np.inf)
    chosen = np.zeros(n, dtype=bool)
    cur = int(first)
    for s in range(k):
        out[s] = cur
        chosen[cur] = True
        if s == k - 1:
            break
        diff = points - points[cur]
        d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1] + diff[:, 2] * diff[:, 2]
        np.minimum(min_d2, d2, out=min_d2)
        cand = np.where(chosen, -1.0, min_d2)
        cur = int(np.argmax(cand))
    return out
