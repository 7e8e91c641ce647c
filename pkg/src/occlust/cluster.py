"""The four clustering algorithms (k-means, k-medoids, dbscan, spectral)
plus the dbscan epsilon sweep and silhouette-based cluster-count selection.

k-means and spectral clustering consume coordinates; k-medoids and dbscan
consume a distance matrix, so they apply equally to raw embeddings and to
reduced data.  All estimators are pure functions of (input, seed) and
bit-reproducible for a fixed seed.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .exceptions import ContractError, ParameterError
from .linalg import knn_graph, laplacian, pairwise_distances, sym_eig
from .metrics import SilhouetteSelection, select_by_silhouette
from .validation import as_matrix, check_count, check_distance_matrix, rng_from_seed


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-point integer labels; -1 marks dbscan noise.

    Non-noise labels are contiguous 0..k-1.  inertia carries the k-means /
    k-medoids cost when applicable.
    """

    labels: np.ndarray = field(repr=False)
    k: int
    inertia: float | None = None

    @classmethod
    def from_labels(cls, labels, inertia=None):
        """Relabel non-noise clusters contiguously by order of first appearance."""
        labels = np.asarray(labels, dtype=np.intp).ravel()
        out = np.full(labels.shape[0], -1, dtype=np.intp)
        mapping = {}
        for i, lab in enumerate(labels):
            if lab < 0:
                continue
            if lab not in mapping:
                mapping[lab] = len(mapping)
            out[i] = mapping[lab]
        out.setflags(write=False)
        return cls(labels=out, k=len(mapping), inertia=inertia)

    def validate(self):
        non_noise = self.labels[self.labels >= 0]
        ids = np.unique(non_noise)
        if ids.size != self.k or (ids.size and (ids.min() != 0 or ids.max() != self.k - 1)):
            raise ContractError("non-noise labels are not contiguous 0..k-1")
        return self


def _squared_distances(X, C):
    d = X @ C.T
    d *= -2.0
    d += np.einsum("ij,ij->i", X, X)[:, None]
    d += np.einsum("ij,ij->i", C, C)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _kmeans_pp(X, k, rng):
    """k-means++ seeding: D^2-weighted sampling after a uniform first pick."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _squared_distances(X, centers[:1]).ravel()
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[j] = X[idx]
        np.minimum(closest, _squared_distances(X, centers[j : j + 1]).ravel(), out=closest)
    return centers


def _lloyd(X, centers, max_iter):
    """Lloyd iterations to an assignment fixpoint; returns the inertia history."""
    n, k = X.shape[0], centers.shape[0]
    labels = np.full(n, -1, dtype=np.intp)
    history = []
    for _ in range(max_iter):
        sq = _squared_distances(X, centers)
        new_labels = sq.argmin(axis=1)
        history.append(float(sq[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        mindist = sq[np.arange(n), labels]
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
            else:
                # empty cluster: adopt the point farthest from its centroid
                far = int(mindist.argmax())
                centers[j] = X[far]
                mindist[far] = 0.0
    return labels, centers, history


class KMeans(BaseEstimator, ClusterMixin):
    """Lloyd's algorithm with k-means++ seeding, best of n_restarts by inertia.

    Restart r uses seed + r, so a fixed seed makes the fit bit-reproducible.
    """

    def __init__(self, n_clusters=23, seed=0, n_restarts=10, max_iter=300):
        self.n_clusters = n_clusters
        self.seed = seed
        self.n_restarts = n_restarts
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = as_matrix(X)
        n = X.shape[0]
        k = check_count(self.n_clusters, "n_clusters", minimum=1)
        if k > n:
            raise ParameterError(f"n_clusters={k} exceeds the number of points {n}")
        best = None
        for r in range(check_count(self.n_restarts, "n_restarts", minimum=1)):
            rng = rng_from_seed(self.seed + r)
            centers = _kmeans_pp(X, k, rng)
            labels, centers, history = _lloyd(X, centers.copy(), self.max_iter)
            inertia = history[-1]
            if best is None or inertia < best[0]:
                best = (inertia, labels, centers, history)
        inertia, labels, centers, history = best
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.inertia_ = inertia
        self.inertia_history_ = history
        self.assignment_ = ClusterAssignment.from_labels(labels, inertia=inertia)
        return self


class KMedoids(BaseEstimator, ClusterMixin):
    """PAM on a precomputed distance matrix: seeded greedy build, then
    best-improvement swaps until no (medoid, non-medoid) exchange lowers
    the total distance to assigned medoids."""

    def __init__(self, n_clusters=23, seed=0):
        self.n_clusters = n_clusters
        self.seed = seed

    def fit(self, D, y=None):
        D = check_distance_matrix(D)
        n = D.shape[0]
        k = check_count(self.n_clusters, "n_clusters", minimum=1)
        if k > n:
            raise ParameterError(f"n_clusters={k} exceeds the number of points {n}")
        rng = rng_from_seed(self.seed)
        medoids = [int(rng.integers(n))]
        nearest = D[:, medoids[0]].copy()
        while len(medoids) < k:
            costs = np.minimum(nearest[:, None], D).sum(axis=0)
            costs[medoids] = np.inf
            h = int(costs.argmin())
            medoids.append(h)
            np.minimum(nearest, D[:, h], out=nearest)
        medoids = np.array(medoids, dtype=np.intp)

        while True:
            cols = D[:, medoids]
            order = cols.argsort(axis=1, kind="stable")
            nearest_pos = order[:, 0]
            d1 = cols[np.arange(n), nearest_pos]
            d2 = cols[np.arange(n), order[:, 1]] if k > 1 else np.full(n, np.inf)
            current = float(d1.sum())
            best_cost, best_swap = current, None
            for pos in range(k):
                without = np.where(nearest_pos == pos, d2, d1)
                costs = np.minimum(without[:, None], D).sum(axis=0)
                costs[medoids] = np.inf
                h = int(costs.argmin())
                if costs[h] < best_cost:
                    best_cost, best_swap = float(costs[h]), (pos, h)
            if best_swap is None:
                break
            medoids[best_swap[0]] = best_swap[1]

        cols = D[:, medoids]
        labels = cols.argmin(axis=1)
        cost = float(cols[np.arange(n), labels].sum())
        self.medoid_indices_ = medoids
        self.labels_ = ClusterAssignment.from_labels(labels).labels
        self.inertia_ = cost
        self.assignment_ = ClusterAssignment.from_labels(labels, inertia=cost)
        return self


class DBSCAN(BaseEstimator, ClusterMixin):
    """Density clustering on a precomputed distance matrix.

    A point is core when at least min_samples points (itself included) lie
    within eps.  Clusters are grown from core points in index order; border
    points join the first cluster that reaches them; the rest are noise
    (-1).
    """

    def __init__(self, eps=0.5, min_samples=5):
        self.eps = eps
        self.min_samples = min_samples

    def fit(self, D, y=None):
        D = check_distance_matrix(D)
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        n = D.shape[0]
        adjacency = D <= self.eps
        core = adjacency.sum(axis=1) >= check_count(self.min_samples, "min_samples", minimum=1)
        labels = np.full(n, -1, dtype=np.intp)
        cid = 0
        for start in range(n):
            if not core[start] or labels[start] >= 0:
                continue
            labels[start] = cid
            queue = deque([start])
            while queue:
                p = queue.popleft()
                if not core[p]:
                    continue
                for q in np.flatnonzero(adjacency[p]):
                    if labels[q] < 0:
                        labels[q] = cid
                        queue.append(q)
            cid += 1
        self.labels_ = labels
        self.core_mask_ = core
        self.assignment_ = ClusterAssignment(labels=labels, k=cid)
        return self


def dbscan_sweep(D, min_pts, eps_grid, target=23):
    """Run dbscan over an increasing epsilon grid and keep the epsilon whose
    cluster count is closest to the target (ties: the smaller epsilon).

    Returns (eps, ClusterAssignment).
    """
    eps_grid = np.asarray(eps_grid, dtype=np.float64).ravel()
    if eps_grid.size == 0:
        raise ParameterError("epsilon grid is empty")
    if np.any(np.diff(eps_grid) <= 0):
        raise ParameterError("epsilon grid must be strictly increasing")
    D = check_distance_matrix(D)
    best = None
    for eps in eps_grid:
        assignment = DBSCAN(eps=float(eps), min_samples=min_pts).fit(D).assignment_
        gap = abs(assignment.k - target)
        if best is None or gap < best[0]:
            best = (gap, float(eps), assignment)
    return best[1], best[2]


class SpectralClustering(BaseEstimator, ClusterMixin):
    """Normalized spectral clustering on a binary symmetric kNN affinity.

    Embeds the points with the n_clusters smallest eigenvectors of
    L_sym = I - D^{-1/2} W D^{-1/2}, renormalizes the rows to unit length,
    and clusters them with KMeans under the same seed policy.
    """

    def __init__(self, n_clusters=23, n_neighbors=10, seed=0):
        self.n_clusters = n_clusters
        self.n_neighbors = n_neighbors
        self.seed = seed

    def fit(self, X, y=None):
        X = as_matrix(X)
        n = X.shape[0]
        k = check_count(self.n_clusters, "n_clusters", minimum=1)
        if k > n:
            raise ParameterError(f"n_clusters={k} exceeds the number of points {n}")
        graph = knn_graph(pairwise_distances(X), self.n_neighbors)
        W = graph.binary_weights()
        _, deg = laplacian(W)  # raises DegeneracyError on isolated vertices
        inv_sqrt = 1.0 / np.sqrt(deg)
        lsym = np.eye(n) - (inv_sqrt[:, None] * W) * inv_sqrt[None, :]
        pairs = sym_eig(lsym, order="smallest", count=k)
        rows = pairs.vectors
        norms = np.linalg.norm(rows, axis=1)
        rows = rows / np.where(norms > 0, norms, 1.0)[:, None]
        km = KMeans(n_clusters=k, seed=self.seed).fit(rows)
        self.embedding_ = rows
        self.labels_ = km.labels_
        self.assignment_ = km.assignment_
        return self


def write_assignment_csv(soc_codes, labels, path):
    """Dump an assignment as (soc_code, label) CSV rows."""
    if len(soc_codes) != len(labels):
        raise ContractError("soc_codes and labels must have equal lengths")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("soc_code,label\n")
        for code, label in zip(soc_codes, labels):
            handle.write(f"{code},{int(label)}\n")
    return path


CLUSTERERS = {
    "kmeans": KMeans,
    "kmedoids": KMedoids,
    "dbscan": DBSCAN,
    "spectral": SpectralClustering,
}

# which input each clusterer consumes
CONSUMES = {
    "kmeans": "points",
    "kmedoids": "distances",
    "dbscan": "distances",
    "spectral": "points",
}


@dataclass(frozen=True)
class KSelection:
    """Result of silhouette-driven cluster-count (or epsilon) selection."""

    k: float
    assignment: ClusterAssignment
    mean_silhouette: float


def select_k_by_silhouette(data, clusterer, k_range, seed, distances=None,
                           min_pts=5, n_neighbors=10):
    """Choose the cluster count (epsilon for dbscan) with the best mean
    silhouette, ties going to the smallest candidate.

    data is coordinates for kmeans/spectral and a distance matrix for
    kmedoids/dbscan; silhouette always uses the distances of the space the
    clusterer consumed (pass ``distances`` to override).
    """
    if clusterer not in CLUSTERERS:
        raise ParameterError(f"unknown clusterer {clusterer!r}")
    n = np.asarray(data).shape[0]
    if distances is None:
        distances = data if CONSUMES[clusterer] == "distances" else pairwise_distances(data)

    if clusterer == "dbscan":
        candidates = [float(e) for e in np.asarray(k_range, dtype=np.float64).ravel()]
        if not candidates:
            raise ParameterError("empty epsilon grid")

        def assign(eps):
            return DBSCAN(eps=eps, min_samples=min_pts).fit(data).labels_

    else:
        candidates = [int(k) for k in k_range]
        if not candidates:
            raise ParameterError("empty k range")
        if min(candidates) < 2 or max(candidates) > n - 1:
            raise ParameterError(f"k range must lie within [2, {n - 1}]")

        def assign(k):
            if clusterer == "kmeans":
                est = KMeans(n_clusters=k, seed=seed)
            elif clusterer == "kmedoids":
                est = KMedoids(n_clusters=k, seed=seed)
            else:
                est = SpectralClustering(n_clusters=k, n_neighbors=n_neighbors, seed=seed)
            return est.fit(data).labels_

    picked: SilhouetteSelection = select_by_silhouette(candidates, assign, distances)
    return KSelection(
        k=picked.selected,
        assignment=ClusterAssignment.from_labels(picked.labels),
        mean_silhouette=picked.mean_silhouette,
    )
