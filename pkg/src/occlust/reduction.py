"""The seven dimensionality reductions: PCA, classical MDS, Laplacian
Eigenmaps, Locally Linear Embedding, Locality Preserving Projections,
Neighborhood Preserving Embedding, and exact t-SNE.

PCA, LLE, LPP, NPE and t-SNE consume an (n, m) coordinate matrix; MDS and
LE consume an (n, n) distance matrix, so they work identically on raw and
already-reduced data.  All estimators expose ``embedding_`` after fit and
are deterministic for fixed inputs (and seed, for t-SNE).
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import (
    AffinityError,
    DegeneracyError,
    DivergenceError,
    NumericalError,
    ParameterError,
)
from .linalg import (
    connected_components,
    gen_eig,
    knn_graph,
    knn_indices,
    laplacian,
    pairwise_distances,
    sym_eig,
)
from .validation import as_matrix, check_count, check_distance_matrix, rng_from_seed


def _fix_signs(V):
    """Flip eigenvector columns so the largest-magnitude entry is positive."""
    V = np.array(V, copy=True)
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _rotate_zero_space(values, vectors, weight=None):
    """Rotate the numerically-zero eigenspace so its first basis vector is
    the constant one.

    Graph Laplacian problems always have the constant vector in their
    kernel; when the kernel has multiplicity > 1 (disconnected graphs) the
    solver returns an arbitrary basis, so the constant direction must be
    exposed explicitly before it can be discarded.  ``weight`` is the
    diagonal of B for generalized problems (B-orthonormal bases).
    """
    tol = max(1e-12, 1e-9 * float(np.abs(values).max()))
    z = int(np.count_nonzero(np.abs(values) <= tol))
    if z <= 1:
        return vectors
    n = vectors.shape[0]
    c = np.ones(n)
    bc = c if weight is None else weight * c
    c_norm = np.sqrt(float(c @ bc))
    u = vectors[:, :z].T @ (bc / c_norm)
    if np.linalg.norm(u) <= 1e-6:
        return vectors  # constant direction not in the retrieved span
    basis = np.concatenate([u[:, None], np.eye(z)], axis=1)
    Q = np.linalg.qr(basis)[0]
    if float(Q[:, 0] @ u) < 0:
        Q[:, 0] = -Q[:, 0]
    rotated = vectors.copy()
    rotated[:, :z] = vectors[:, :z] @ Q
    return rotated


def _binary_knn_laplacian(D, n_neighbors):
    """Binary symmetric kNN adjacency with its Laplacian and degree vector."""
    graph = knn_graph(D, n_neighbors)
    W = graph.binary_weights()
    L, deg = laplacian(W)
    return graph, W, L, deg


class PCA(BaseEstimator, TransformerMixin):
    """Projection on the top eigenvectors of the sample covariance."""

    consumes = "points"

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = as_matrix(X)
        n, m = X.shape
        m2 = check_count(self.n_components, "n_components", minimum=1)
        if m2 > min(n - 1, m):
            raise ParameterError(
                f"n_components={m2} exceeds min(n-1, m)={min(n - 1, m)}"
            )
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        cov = Xc.T @ Xc / (n - 1)
        pairs = sym_eig(0.5 * (cov + cov.T), order="largest", count=m2)
        self.components_ = _fix_signs(pairs.vectors)
        self.explained_variance_ = pairs.values
        self.embedding_ = Xc @ self.components_
        return self

    def transform(self, X):
        X = as_matrix(X)
        return (X - self.mean_) @ self.components_


class ClassicalMDS(BaseEstimator):
    """Classical (Torgerson) MDS from a precomputed distance matrix.

    Double-centers the squared distances, keeps the top nonnegative
    eigenpairs and scales the eigenvectors by sqrt(eigenvalue); negative
    eigenvalues are truncated to zero coordinates.
    """

    consumes = "distances"

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, D, y=None):
        D = check_distance_matrix(D)
        n = D.shape[0]
        m2 = check_count(self.n_components, "n_components", minimum=1)
        if m2 >= n:
            raise ParameterError(f"n_components={m2} must be < n={n}")
        sq = D * D
        row_mean = sq.mean(axis=1)
        B = -0.5 * (sq - row_mean[:, None] - row_mean[None, :] + sq.mean())
        B = 0.5 * (B + B.T)
        pairs = sym_eig(B, order="largest", count=m2)
        scale = max(1.0, float(np.abs(B).max()))
        if pairs.values[0] <= 1e-12 * scale:
            raise DegeneracyError("no positive eigenvalue: input is not embeddable")
        lam = np.clip(pairs.values, 0.0, None)
        self.eigenvalues_ = pairs.values
        self.embedding_ = _fix_signs(pairs.vectors) * np.sqrt(lam)[None, :]
        return self

    def fit_transform(self, D, y=None):
        return self.fit(D).embedding_


class LaplacianEigenmaps(BaseEstimator):
    """Embedding from the smallest generalized eigenvectors of (L, Delta)
    on a binary symmetric kNN graph; the constant eigenvector is dropped."""

    consumes = "distances"

    def __init__(self, n_components=2, n_neighbors=10):
        self.n_components = n_components
        self.n_neighbors = n_neighbors

    def fit(self, D, y=None):
        D = check_distance_matrix(D)
        n = D.shape[0]
        m2 = check_count(self.n_components, "n_components", minimum=1)
        if m2 + 1 > n:
            raise ParameterError(f"n_components={m2} needs at least {m2 + 1} points")
        graph, W, L, deg = _binary_knn_laplacian(D, self.n_neighbors)
        n_comp, _ = connected_components(graph.mask)
        if n_comp > m2 + 1:
            raise DegeneracyError(
                f"neighbor graph splits into {n_comp} connected components; "
                f"at most {m2 + 1} are representable at n_components={m2}"
            )
        pairs = gen_eig(L, np.diag(deg), order="smallest", count=m2 + 1)
        vectors = _rotate_zero_space(pairs.values, pairs.vectors, weight=deg)
        self.eigenvalues_ = pairs.values[1:]
        self.embedding_ = _fix_signs(vectors[:, 1:])
        return self

    def fit_transform(self, D, y=None):
        return self.fit(D).embedding_


def reconstruction_weights(X, neighbors):
    """Affine weights reconstructing each point from its nearest neighbors.

    Minimizes the reconstruction error subject to the weights of each row
    summing to one.  The local Gram matrix gets the standard conditioning
    shift 1e-3 * trace / k when k exceeds the ambient dimension, and a tiny
    jitter otherwise so that degenerate (collinear, duplicated)
    neighborhoods stay solvable.
    """
    n, m = X.shape
    k = neighbors.shape[1]
    ones = np.ones(k)
    weights = np.empty((n, k))
    for i in range(n):
        Z = X[neighbors[i]] - X[i]
        G = Z @ Z.T
        trace = float(np.trace(G))
        reg = 1e-3 if k > m else 1e-12
        G.flat[:: k + 1] += reg * (trace / k) if trace > 0 else reg
        try:
            w = np.linalg.solve(G, ones)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular regularized Gram at point {i}") from exc
        total = float(w.sum())
        if total == 0 or not np.isfinite(total):
            raise NumericalError(f"unusable reconstruction weights at point {i}")
        weights[i] = w / total
    return weights


def _lle_embedding_matrix(X, n_neighbors):
    """(I - W)^T (I - W) from the LLE reconstruction weights of X."""
    n = X.shape[0]
    nbrs = knn_indices(pairwise_distances(X), n_neighbors)
    weights = reconstruction_weights(X, nbrs)
    Wmat = np.zeros((n, n))
    np.put_along_axis(Wmat, nbrs, weights, axis=1)
    IW = np.eye(n) - Wmat
    M = IW.T @ IW
    return 0.5 * (M + M.T), weights, nbrs


class LocallyLinearEmbedding(BaseEstimator):
    """Embedding from the bottom eigenvectors of (I - W)^T (I - W), the
    constant eigenvector dropped."""

    consumes = "points"

    def __init__(self, n_components=2, n_neighbors=10):
        self.n_components = n_components
        self.n_neighbors = n_neighbors

    def fit(self, X, y=None):
        X = as_matrix(X)
        n = X.shape[0]
        m2 = check_count(self.n_components, "n_components", minimum=1)
        k = check_count(self.n_neighbors, "n_neighbors", minimum=2)
        if m2 + 1 > n:
            raise ParameterError(f"n_components={m2} needs at least {m2 + 1} points")
        M, weights, nbrs = _lle_embedding_matrix(X, k)
        pairs = sym_eig(M, order="smallest", count=m2 + 1)
        vectors = _rotate_zero_space(pairs.values, pairs.vectors)
        self.weights_ = weights
        self.neighbors_ = nbrs
        self.eigenvalues_ = pairs.values[1:]
        self.embedding_ = _fix_signs(vectors[:, 1:])
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


def _regularized(B):
    trace = float(np.trace(B))
    shift = 1e-8 * trace if trace > 0 else 1e-8
    return B + shift * np.eye(B.shape[0])


def _principal_subspace(X):
    """Orthonormal basis of the column space of X (rank-revealing).

    Rank-deficient inputs (n < m, or data inside a subspace) would
    otherwise feed the projection solvers a singular right-hand matrix
    whose null-space directions win with spurious zero eigenvalues.
    """
    S = X.T @ X
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    tol = float(vals[-1]) * max(X.shape) * np.finfo(np.float64).eps
    keep = vals > max(tol, 0.0)
    return vecs[:, keep]


def _projected_directions(X, A_of, B_of, m2):
    """Solve A a = lambda B a inside the principal subspace of X and map
    the directions back; short ranks are padded with zero directions so
    the output always has m2 columns."""
    m = X.shape[1]
    P = _principal_subspace(X)
    rank = P.shape[1]
    if rank == 0:
        return np.zeros((m, m2)), np.zeros(m2)
    Xp = X @ P
    A = A_of(Xp)
    B = B_of(Xp)
    count = min(m2, rank)
    pairs = gen_eig(0.5 * (A + A.T), _regularized(0.5 * (B + B.T)),
                    order="smallest", count=count)
    directions = P @ pairs.vectors
    values = pairs.values
    if count < m2:
        directions = np.hstack([directions, np.zeros((m, m2 - count))])
        values = np.concatenate([values, np.full(m2 - count, np.nan)])
    return directions, values


class LocalityPreservingProjection(BaseEstimator, TransformerMixin):
    """Linear map minimizing the graph-Laplacian objective of LE: solves
    X^T L X a = lambda X^T Delta X a on centered data."""

    consumes = "points"

    def __init__(self, n_components=2, n_neighbors=10):
        self.n_components = n_components
        self.n_neighbors = n_neighbors

    def fit(self, X, y=None):
        X = as_matrix(X)
        m = X.shape[1]
        m2 = check_count(self.n_components, "n_components", minimum=1)
        if m2 > m:
            raise ParameterError(f"n_components={m2} exceeds input dimension {m}")
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        _, W, L, deg = _binary_knn_laplacian(pairwise_distances(Xc), self.n_neighbors)
        self.directions_, self.eigenvalues_ = _projected_directions(
            Xc,
            lambda Xp: Xp.T @ L @ Xp,
            lambda Xp: Xp.T @ (deg[:, None] * Xp),
            m2,
        )
        self.embedding_ = Xc @ self.directions_
        return self

    def transform(self, X):
        X = as_matrix(X)
        return (X - self.mean_) @ self.directions_


class NeighborhoodPreservingEmbedding(BaseEstimator, TransformerMixin):
    """Linear map preserving the LLE reconstruction weights: solves
    X^T M X a = lambda X^T X a with M = (I - W)^T (I - W)."""

    consumes = "points"

    def __init__(self, n_components=2, n_neighbors=10):
        self.n_components = n_components
        self.n_neighbors = n_neighbors

    def fit(self, X, y=None):
        X = as_matrix(X)
        m = X.shape[1]
        m2 = check_count(self.n_components, "n_components", minimum=1)
        k = check_count(self.n_neighbors, "n_neighbors", minimum=2)
        if m2 > m:
            raise ParameterError(f"n_components={m2} exceeds input dimension {m}")
        M, weights, _ = _lle_embedding_matrix(X, k)
        self.weights_ = weights
        self.directions_, self.eigenvalues_ = _projected_directions(
            X,
            lambda Xp: Xp.T @ M @ Xp,
            lambda Xp: Xp.T @ Xp,
            m2,
        )
        self.embedding_ = X @ self.directions_
        return self

    def transform(self, X):
        return as_matrix(X) @ self.directions_


def conditional_affinities(squared_distances, perplexity, tol=1e-5, max_steps=200):
    """Row-stochastic Gaussian affinities whose base-2 entropy matches
    log2(perplexity), bandwidth found per point by bisection.

    Raises AffinityError when a row cannot reach the target entropy within
    max_steps bisection steps.
    """
    D2 = np.asarray(squared_distances, dtype=np.float64)
    n = D2.shape[0]
    target = np.log2(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        row = np.delete(D2[i], i)
        row = row - row.min()  # shift-invariant; prevents exp underflow
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_steps):
            p = np.exp(-beta * row)
            total = p.sum()
            p /= total
            nz = p > 0
            entropy_bits = float(-np.sum(p[nz] * np.log2(p[nz])))
            diff = entropy_bits - target
            if abs(diff) <= tol:
                break
            if diff > 0:
                lo = beta
                beta = beta * 2.0 if np.isinf(hi) else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = 0.5 * (lo + hi)
        else:
            raise AffinityError(
                f"perplexity bisection failed for point {i} after {max_steps} steps"
            )
        P[i, np.arange(n) != i] = p
    return P


def _student_q(Y):
    d2 = Y @ Y.T
    diag = np.diag(d2).copy()
    d2 *= -2.0
    d2 += diag[:, None]
    d2 += diag[None, :]
    np.maximum(d2, 0.0, out=d2)
    W = 1.0 / (1.0 + d2)
    np.fill_diagonal(W, 0.0)
    return W, W / W.sum()


def kl_divergence_and_grad(Y, P):
    """KL(P || Q) and its gradient for a Student-t (1 dof) low-dimensional
    similarity Q; used by the t-SNE descent and verifiable against finite
    differences."""
    Y = np.asarray(Y, dtype=np.float64)
    W, Q = _student_q(Y)
    mask = P > 0
    kl = float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300))))
    PQW = (P - Q) * W
    grad = 4.0 * (PQW.sum(axis=1)[:, None] * Y - PQW @ Y)
    return kl, grad


class TSNE(BaseEstimator):
    """Exact (O(n^2) gradient) t-SNE.

    Early exaggeration multiplies the affinities by 12 for the first 250
    iterations; momentum switches 0.5 -> 0.8 at iteration 250; the
    learning rate is n / 12.  Initialization is a seeded Gaussian with
    sigma 1e-4.
    """

    consumes = "points"

    EXAGGERATION = 12.0
    EXAGGERATION_ITERS = 250

    def __init__(self, n_components=2, perplexity=30.0, n_iter=1000, seed=0):
        self.n_components = n_components
        self.perplexity = perplexity
        self.n_iter = n_iter
        self.seed = seed

    def fit(self, X, y=None):
        X = as_matrix(X)
        n = X.shape[0]
        m2 = check_count(self.n_components, "n_components", minimum=1)
        check_count(self.n_iter, "n_iter", minimum=1)
        if not 0 < self.perplexity < n:
            raise ParameterError(f"perplexity must be in (0, n={n}), got {self.perplexity}")
        D2 = cdist(X, X, metric="sqeuclidean")
        cond = conditional_affinities(D2, self.perplexity)
        P = (cond + cond.T) / (2.0 * n)
        rng = rng_from_seed(self.seed)
        Y = rng.normal(0.0, 1e-4, size=(n, m2))
        update = np.zeros_like(Y)
        lr = n / self.EXAGGERATION
        kl_curve = np.empty(self.n_iter)
        for it in range(self.n_iter):
            exaggerate = it < self.EXAGGERATION_ITERS
            W, Q = _student_q(Y)
            mask = P > 0
            kl_curve[it] = float(
                np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300)))
            )
            Peff = P * self.EXAGGERATION if exaggerate else P
            PQW = (Peff - Q) * W
            grad = 4.0 * (PQW.sum(axis=1)[:, None] * Y - PQW @ Y)
            if not np.all(np.isfinite(grad)):
                raise DivergenceError(f"non-finite gradient at iteration {it}")
            momentum = 0.5 if exaggerate else 0.8
            update = momentum * update - lr * grad
            Y = Y + update
            Y = Y - Y.mean(axis=0)
        self.affinities_ = P
        self.kl_curve_ = kl_curve
        self.embedding_ = Y
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


def write_embedding_csv(Y, path):
    """Dump reduced coordinates as header-less CSV rows (for plotting)."""
    Y = np.asarray(Y)
    with open(path, "w", encoding="utf-8") as handle:
        for row in Y:
            handle.write(",".join(repr(float(v)) for v in row) + "\n")
    return path


REDUCTIONS = {
    "PCA": PCA,
    "MDS": ClassicalMDS,
    "LE": LaplacianEigenmaps,
    "LLE": LocallyLinearEmbedding,
    "LPP": LocalityPreservingProjection,
    "NPE": NeighborhoodPreservingEmbedding,
    "TSNE": TSNE,
}


@dataclass(frozen=True)
class ReductionSpec:
    """Configuration of one reduction: method, target dimension and the
    hyperparameters the method actually uses."""

    method: str
    target_dim: int
    k_nn: int = 10
    perplexity: float = 30.0
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.method not in REDUCTIONS:
            raise ParameterError(f"unknown reduction method {self.method!r}")
        if self.target_dim < 1:
            raise ParameterError(f"target_dim must be >= 1, got {self.target_dim}")
        if self.k_nn < 1:
            raise ParameterError(f"k_nn must be >= 1, got {self.k_nn}")
        if not self.perplexity > 0:
            raise ParameterError(f"perplexity must be positive, got {self.perplexity}")
        if self.iterations < 1:
            raise ParameterError(f"iterations must be >= 1, got {self.iterations}")

    @property
    def consumes(self):
        return REDUCTIONS[self.method].consumes

    def build(self):
        cls = REDUCTIONS[self.method]
        if self.method in ("PCA", "MDS"):
            return cls(n_components=self.target_dim)
        if self.method == "TSNE":
            return cls(
                n_components=self.target_dim,
                perplexity=self.perplexity,
                n_iter=self.iterations,
                seed=self.seed,
            )
        return cls(n_components=self.target_dim, n_neighbors=self.k_nn)
