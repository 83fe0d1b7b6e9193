"""
Exact k-th nearest-neighbor distances under the Euclidean metric.

Two interchangeable backends are provided.  ``"tree"`` uses a median-split
kd-tree (:class:`scipy.spatial.cKDTree` with ``balanced_tree=True``) and is
the default; ``"brute"`` forms all pairwise squared distances block by block
and serves as the reference the tree is checked against.

Samples are plain ``(N, m)`` float arrays, one observation per row.
"""

from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import DimensionMismatch, DuplicatePoints, InvalidK

__all__ = [
    "Backend",
    "as_points",
    "kth_nn_distances_within",
    "kth_nn_distances_cross",
]

# Upper bound on the number of float64 entries held by one brute-force block.
_BLOCK_ENTRIES = 1 << 22


class Backend(str, Enum):
    BRUTE = "brute"
    TREE = "tree"


def as_points(x, name="sample"):
    """Validate *x* as an ``(N, m)`` finite float array.

    A 1-D input is read as N scalar observations (m = 1).
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array (N, m), got shape {arr.shape}")
    n, m = arr.shape
    if n < 1 or m < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return np.ascontiguousarray(arr)


def _check_k(k, limit, what):
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k!r}")
    if k > limit:
        raise InvalidK(f"k={k} exceeds the number of available {what} ({limit})")
    return int(k)


def _brute_kth(queries, refs, k, exclude_self):
    n = queries.shape[0]
    out = np.empty(n)
    rows = max(1, _BLOCK_ENTRIES // max(1, refs.shape[0] * refs.shape[1]))
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        diff = queries[start:stop, None, :] - refs[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        if exclude_self:
            idx = np.arange(start, stop)
            d2[idx - start, idx] = np.inf
        out[start:stop] = np.partition(d2, k - 1, axis=1)[:, k - 1]
    return np.sqrt(out)


def _tree_kth(queries, refs, k, exclude_self):
    tree = cKDTree(refs, balanced_tree=True, compact_nodes=True)
    # The query point is its own nearest neighbor at distance 0, so the
    # (k+1)-th radius over all points is the k-th radius over the others.
    kk = k + 1 if exclude_self else k
    dist, _ = tree.query(queries, k=[kk])
    return np.ascontiguousarray(dist[:, 0])


def _dispatch(backend):
    backend = Backend(backend)
    return _tree_kth if backend is Backend.TREE else _brute_kth


def _check_zero(dist, allow_zero):
    if not allow_zero and np.any(dist == 0.0):
        count = int(np.count_nonzero(dist == 0.0))
        raise DuplicatePoints(
            f"{count} k-th nearest-neighbor distance(s) are exactly zero; "
            "the sample contains repeated points (use a jitter policy or a larger k)"
        )
    return dist


def kth_nn_distances_within(points, k, backend=Backend.TREE, allow_zero=False):
    """Distance from each point to its k-th nearest *other* point of the same set.

    Parameters
    ----------
    points : array_like, shape (N, m)
    k : int
        Neighbor rank, ``1 <= k <= N - 1``.
    backend : {"tree", "brute"}
    allow_zero : bool
        If False, a zero radius (repeated points) raises :class:`DuplicatePoints`.

    Returns
    -------
    ndarray, shape (N,)
    """
    x = as_points(points, "points")
    k = _check_k(k, x.shape[0] - 1, "other points")
    dist = _dispatch(backend)(x, x, k, True)
    return _check_zero(dist, allow_zero)


def kth_nn_distances_cross(queries, references, k, backend=Backend.TREE, allow_zero=False):
    """Distance from each query to its k-th nearest point of *references*.

    Queries are not removed from the reference set; the two samples are
    assumed disjoint.
    """
    q = as_points(queries, "queries")
    r = as_points(references, "references")
    if q.shape[1] != r.shape[1]:
        raise DimensionMismatch(
            f"queries have dimension {q.shape[1]} but references have {r.shape[1]}"
        )
    k = _check_k(k, r.shape[0], "reference points")
    dist = _dispatch(backend)(q, r, k, False)
    return _check_zero(dist, allow_zero)
