"""Spatial statistics of point patterns (texel centroids).

All functions accept an (n, d) coordinate array with d = 2 for grid
patterns or d = 1 for stripe patterns projected onto their normal.
Scores are normalized so that 0 means a perfect lattice and values grow
with disorder.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

ORIENTATION_BIN_EDGES = np.array([0.0, 60.0, 120.0, 180.0])


class DegenerateGeometryError(ValueError):
    """Point pattern collapsed to zero extent along the measured axis."""


def _as_points(points, expect_min: int = 1) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] not in (1, 2):
        raise ValueError(f"points must be (n, 1) or (n, 2), got shape {pts.shape}")
    if len(pts) < expect_min:
        raise ValueError(f"need at least {expect_min} points, got {len(pts)}")
    return pts


def quadrat_counts(points, canvas: float, grid: tuple[int, int] = (4, 4)) -> np.ndarray:
    """Counts per cell of a gx x gy partition of the [0, canvas]^2 window."""
    pts = _as_points(points)
    gx, gy = grid
    ix = np.clip((pts[:, 0] / canvas * gx).astype(int), 0, gx - 1)
    iy = np.clip((pts[:, 1] / canvas * gy).astype(int), 0, gy - 1)
    return np.bincount(ix * gy + iy, minlength=gx * gy).astype(float)


def _chi2_normalized(counts: np.ndarray, n: int) -> float:
    expected = n / len(counts)
    if expected <= 0:
        return 0.0
    return float(((counts - expected) ** 2 / expected).sum() / n)


def quadrat_statistic(points, canvas: float, grid: tuple[int, int] = (4, 4)) -> float:
    """Chi-square quadrat-count statistic divided by N.

    0 for counts matching the uniform expectation exactly; N points in
    one cell of an m-cell grid score m - 1.
    """
    pts = _as_points(points, expect_min=1)
    return _chi2_normalized(quadrat_counts(pts, canvas, grid), len(pts))


def quadrat_statistic_1d(x, bins: int = 8) -> float:
    """1D analogue over the projected extent of the pattern."""
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    lo, hi = xs[0], xs[-1]
    if hi - lo < 1e-9:
        raise DegenerateGeometryError("projected pattern has zero extent")
    idx = np.clip(((xs - lo) / (hi - lo) * bins).astype(int), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(float)
    return _chi2_normalized(counts, len(xs))


def knn_vectors(points, k: int) -> np.ndarray:
    """(n, k, d) vectors from each point to its k nearest neighbors."""
    pts = _as_points(points, expect_min=2)
    k = min(k, len(pts) - 1)
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k + 1)
    idx = np.atleast_2d(idx)[:, 1:]
    return pts[idx] - pts[:, None, :]


def pair_orientation_histogram(points, k: int = 8) -> np.ndarray:
    """Normalized 3-bin histogram of point-pair vector angles in [0, 180).

    Uses vectors to the k nearest neighbors of every point (all other
    points when fewer are available).
    """
    vecs = knn_vectors(points, k)
    if vecs.shape[2] == 1:
        angles = np.zeros(vecs.shape[:2]).ravel()
    else:
        angles = np.degrees(np.arctan2(vecs[..., 1], vecs[..., 0])).ravel() % 180.0
    hist, _ = np.histogram(angles, bins=ORIENTATION_BIN_EDGES)
    hist = hist.astype(float)
    total = hist.sum()
    return hist / total if total > 0 else hist


def reflective_symmetry(points, k: int = 4) -> float:
    """Mean normalized residual of k-neighborhoods under point reflection.

    Each point's neighborhood is reflected through the point; the score
    averages, over reflected neighbors, the distance to the nearest
    original neighbor, normalized by the mean neighbor distance.
    Neighborhoods whose reflection leaves the pattern's bounding box are
    skipped (they cannot be symmetric for any finite pattern), so exact
    lattices score 0.  Returns NaN when every neighborhood is skipped
    or fewer than 5 points are given.
    """
    pts = _as_points(points)
    if len(pts) < 5:
        return float("nan")
    k = min(k, len(pts) - 1)
    tree = cKDTree(pts)
    dist, idx = tree.query(pts, k=k + 1)
    dist, idx = dist[:, 1:], idx[:, 1:]
    neighbors = pts[idx]                                  # (n, k, d)
    reflected = 2.0 * pts[:, None, :] - neighbors         # (n, k, d)

    lo = pts.min(axis=0) - 1e-9
    hi = pts.max(axis=0) + 1e-9
    inside = ((reflected >= lo) & (reflected <= hi)).all(axis=(1, 2))
    if not inside.any():
        return float("nan")

    # Distance from each reflected point to the nearest original neighbor.
    diff = reflected[:, :, None, :] - neighbors[:, None, :, :]
    nearest = np.sqrt((diff**2).sum(-1)).min(axis=2)      # (n, k)
    scores = nearest.mean(axis=1) / dist.mean(axis=1)
    return float(scores[inside].mean())


def translational_symmetry(points, k: int = 4) -> float:
    """Mean normalized residual of k-neighborhoods translated by their own
    neighbor vectors, measured against the full point set.

    For each point c and neighbor vector t, the set {c} + N(c) is
    shifted by t; the record is the mean distance of shifted points to
    their nearest pattern point, divided by |t|.  The result averages
    all records; lattice closure makes interior records exactly 0.
    Returns NaN for fewer than 5 points.
    """
    pts = _as_points(points)
    if len(pts) < 5:
        return float("nan")
    k = min(k, len(pts) - 1)
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k + 1)
    idx = idx[:, 1:]
    neighbors = pts[idx]                                   # (n, k, d)
    t = neighbors - pts[:, None, :]                        # (n, k, d)
    block = np.concatenate([pts[:, None, :], neighbors], axis=1)  # (n, k+1, d)
    shifted = block[:, None, :, :] + t[:, :, None, :]      # (n, k, k+1, d)
    flat = shifted.reshape(-1, pts.shape[1])
    nearest, _ = tree.query(flat)
    nearest = nearest.reshape(len(pts), k, k + 1)
    t_len = np.sqrt((t**2).sum(-1))                        # (n, k)
    records = nearest.mean(axis=2) / np.maximum(t_len, 1e-12)
    return float(records.mean())
