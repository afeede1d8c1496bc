"""K-means speed clustering, silhouette-based K selection, and state bands.

One-dimensional Lloyd iteration with a deterministic seeded start, a
silhouette sweep to pick the cluster count, midpoint boundaries between
adjacent centers, and the four-way congestion classification used by the
navigation endpoint.
"""

from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateClusteringError, DomainError


class TrafficState(enum.Enum):
    """Four congestion levels ordered from worst to best."""

    SEVERELY_CONGESTED = "severely_congested"
    CONGESTED = "congested"
    SLOW = "slow"
    SMOOTH = "smooth"

    @property
    def severity(self) -> int:
        """3 = severely congested ... 0 = smooth."""
        return 3 - _STATE_ORDER.index(self)

    @property
    def color(self) -> str:
        return _STATE_COLORS[self]


_STATE_ORDER = [
    TrafficState.SEVERELY_CONGESTED,
    TrafficState.CONGESTED,
    TrafficState.SLOW,
    TrafficState.SMOOTH,
]

_STATE_COLORS = {
    TrafficState.SEVERELY_CONGESTED: "dark_red",
    TrafficState.CONGESTED: "red",
    TrafficState.SLOW: "yellow",
    TrafficState.SMOOTH: "green",
}


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centers: tuple[float, ...]  # sorted ascending
    objective: float  # within-cluster sum of squares
    seed: int
    iterations_run: int

    def __post_init__(self):
        if self.k < 1 or len(self.centers) != self.k:
            raise DomainError("center count must equal k >= 1")
        if any(b <= a for a, b in zip(self.centers, self.centers[1:])):
            raise DomainError("centers must be strictly increasing")
        if self.objective < 0:
            raise DomainError("objective must be non-negative")


@dataclass(frozen=True)
class StateBands:
    """Three ascending speed thresholds partitioning (0, inf) into four states."""

    boundaries: tuple[float, float, float]  # km/h

    def __post_init__(self):
        b = self.boundaries
        if len(b) != 3 or not (b[0] < b[1] < b[2]):
            raise DomainError(f"boundaries must be 3 strictly ascending values, got {b}")


def assign_points(points: Sequence[float], centers: Sequence[float]) -> np.ndarray:
    """Nearest-center labels; ties go to the lowest-index center."""
    pts = np.asarray(points, dtype=float)
    ctr = np.asarray(centers, dtype=float)
    return np.argmin(np.abs(pts[:, None] - ctr[None, :]), axis=1)


def _wcss(pts: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> float:
    return float(np.sum((pts - centers[labels]) ** 2))


def _farthest_point_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """First center nearest the median, then greedy max-min-distance picks."""
    median = np.median(pts)
    chosen = [int(np.argmin(np.abs(pts - median)))]
    for _ in range(k - 1):
        dmin = np.min(np.abs(pts[:, None] - pts[chosen][None, :]), axis=1)
        tied = np.flatnonzero(dmin == dmin.max())
        chosen.append(int(rng.choice(tied)))
    return pts[chosen].copy()


def _lloyd(pts: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    prev_obj = np.inf
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        labels = assign_points(pts, centers)
        new_centers = centers.copy()
        repaired = False
        for i in range(len(centers)):
            members = pts[labels == i]
            if members.size:
                new_centers[i] = members.mean()
            else:
                # Empty-cluster repair: reseed at the point farthest from its center.
                far = int(np.argmax(np.abs(pts - centers[labels])))
                new_centers[i] = pts[far]
                repaired = True
        obj = _wcss(pts, new_centers, assign_points(pts, new_centers))
        if not repaired:
            assert obj <= prev_obj + 1e-9 * max(1.0, prev_obj), "objective increased"
        prev_obj = obj
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift < tol:
            break
    labels = assign_points(pts, centers)
    return centers, labels, _wcss(pts, centers, labels), iterations


def kmeans(
    points: Sequence[float],
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
    restarts: int = 16,
) -> ClusterModel:
    """Deterministic seeded Lloyd clustering of 1-D values.

    Restart 0 uses a farthest-point start anchored at the median; further
    restarts draw distinct initial points from a seeded generator.  The
    best within-cluster sum of squares wins.
    """
    pts = np.asarray(points, dtype=float)
    if k < 1:
        raise DomainError("k must be >= 1")
    if pts.size < k:
        raise DomainError(f"need at least {k} points, got {pts.size}")
    if max_iter < 1 or tol < 0:
        raise DomainError("max_iter must be >= 1 and tol >= 0")
    distinct = np.unique(pts)
    if distinct.size < k:
        raise DegenerateClusteringError(
            f"only {distinct.size} distinct values; cannot form {k} clusters"
        )

    best = None
    for r in range(max(1, restarts)):
        rng = np.random.default_rng([seed, r])
        if r == 0:
            init = _farthest_point_init(pts, k, rng)
        else:
            init = rng.choice(distinct, size=k, replace=False).astype(float)
        centers, _, obj, iterations = _lloyd(pts, init, max_iter, tol)
        if best is None or obj < best[1]:
            best = (centers, obj, iterations)
    centers, obj, iterations = best
    return ClusterModel(
        k=k,
        centers=tuple(float(c) for c in np.sort(centers)),
        objective=obj,
        seed=seed,
        iterations_run=iterations,
    )


def silhouette(points: Sequence[float], assignments: Sequence[int]) -> float:
    """Mean silhouette coefficient; singleton-cluster points score 0."""
    pts = np.asarray(points, dtype=float)
    labels = np.asarray(assignments, dtype=int)
    if pts.size != labels.size:
        raise DomainError("points and assignments must be equal-length")
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise DomainError("silhouette undefined for fewer than 2 clusters")
    dist = np.abs(pts[:, None] - pts[None, :])
    onehot = labels[:, None] == clusters[None, :]  # (n, C)
    counts = onehot.sum(axis=0)
    sums = dist @ onehot  # (n, C): summed distance to each cluster

    own_col = np.searchsorted(clusters, labels)
    n_own = counts[own_col]
    # Intra-cluster mean excludes the point itself (its self-distance is 0).
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(pts.size), own_col] / (n_own - 1)
        means = sums / counts[None, :]
        means[np.arange(pts.size), own_col] = np.inf
        b = means.min(axis=1)
        scores = np.where(
            np.maximum(a, b) > 0, (b - a) / np.maximum(a, b), 0.0
        )
    scores = np.where(n_own == 1, 0.0, scores)  # singleton convention: s = 0
    return float(scores.mean())


@dataclass(frozen=True)
class KSelection:
    best_k: int
    silhouette_by_k: dict[int, float]


def select_k(
    points: Sequence[float],
    k_range: Sequence[int],
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
    restarts: int = 16,
) -> KSelection:
    """Silhouette sweep over candidate cluster counts; ties go to smaller K."""
    pts = np.asarray(points, dtype=float)
    ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 2 or ks[-1] > pts.size - 1:
        raise DomainError(f"k_range must lie within [2, {pts.size - 1}]")
    table = {}
    for k in ks:
        model = kmeans(pts, k, seed=seed, max_iter=max_iter, tol=tol, restarts=restarts)
        table[k] = silhouette(pts, assign_points(pts, model.centers))
    best_k = max(ks, key=lambda k: (table[k], -k))
    return KSelection(best_k=best_k, silhouette_by_k=table)


def bands_from_clusters(model: ClusterModel) -> StateBands:
    """Midpoints between adjacent sorted centers; requires exactly 4 clusters."""
    if model.k != 4:
        raise DomainError(f"state bands need exactly 4 clusters, got {model.k}")
    c = model.centers
    return StateBands(boundaries=tuple((a + b) / 2 for a, b in zip(c, c[1:])))


def classify_speed(bands: StateBands, v: float) -> TrafficState:
    """Map a positive speed to its band; upper bounds inclusive except smooth."""
    if v <= 0:
        raise DomainError(f"speed must be positive, got {v}")
    return _STATE_ORDER[bisect_left(bands.boundaries, v)]


def classify_flow_density(
    bands: StateBands, flow: float, density: float
) -> tuple[float, TrafficState]:
    """Estimate speed as flow/density and classify it."""
    if density <= 0:
        raise DomainError(f"density must be positive, got {density}")
    if flow < 0:
        raise DomainError(f"flow must be non-negative, got {flow}")
    v = flow / density
    return v, classify_speed(bands, v)
