"""Small deterministic k-means with k-means++ seeding.

Used by the clustering filter and by surrogate-corpus grouping. A fixed
iteration budget keeps runs reproducible under a caller-owned rng.
"""
from __future__ import annotations

import numpy as np

from .core import RngStream


def kmeans_labels(
    points: np.ndarray, k: int, rng: RngStream, n_iters: int = 20
) -> np.ndarray:
    """Cluster rows of `points` into k groups; returns a label per row.

    Empty clusters keep their previous center and may stay empty.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        raise ValueError("cannot cluster an empty point set")
    k = min(max(1, int(k)), n)
    centers = _kmeans_pp_centers(points, k, rng)
    labels = np.zeros(n, dtype=int)
    for _ in range(n_iters):
        d2 = _sq_dists(points, centers)
        labels = np.argmin(d2, axis=1)
        for j in range(k):
            members = points[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return labels


def _kmeans_pp_centers(points: np.ndarray, k: int, rng: RngStream) -> np.ndarray:
    n = len(points)
    chosen = [int(rng.np.integers(0, n))]
    while len(chosen) < k:
        d2 = _sq_dists(points, points[chosen]).min(axis=1)
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a center: pick any unchosen
            remaining = [i for i in range(n) if i not in chosen]
            chosen.append(remaining[int(rng.np.integers(0, len(remaining)))])
        else:
            chosen.append(int(rng.np.choice(n, p=d2 / total)))
    return points[chosen].copy()


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)
