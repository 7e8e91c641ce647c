"""Dense linear-algebra and graph primitives shared by the reduction and
clustering algorithms: pairwise distances, k-nearest-neighbor graphs, and
standard / generalized symmetric eigenproblems.

All functions are pure; the eigen routines delegate the factorizations to
LAPACK (via scipy) behind the contracts below.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .exceptions import DegeneracyError, NumericalError, ParameterError, ValidationError
from .validation import as_matrix, check_count, check_distance_matrix, check_symmetric


def pairwise_distances(X):
    """Euclidean distance matrix between the rows of X.

    Parameters
    ----------
    X : (n, m) array
        Finite coordinates, one point per row.

    Returns
    -------
    (n, n) array, symmetric, nonnegative, zero diagonal.
    """
    X = as_matrix(X)
    D = cdist(X, X, metric="euclidean")
    # cdist evaluates (i, j) and (j, i) independently; enforce exact symmetry
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def knn_indices(D, k):
    """Indices of the k nearest neighbors of every point, self excluded.

    Distance ties are broken toward the smaller point index, which makes the
    selection fully deterministic.

    Returns an (n, k) integer array; row i holds kNN(i) in increasing
    distance order.
    """
    D = check_distance_matrix(D)
    n = D.shape[0]
    k = check_count(k, "k", minimum=1)
    if k >= n:
        raise ParameterError(f"k must be < n, got k={k} with n={n}")
    out = np.empty((n, k), dtype=np.intp)
    for i in range(n):
        order = np.argsort(D[i], kind="stable")
        out[i] = order[order != i][:k]
    return out


@dataclass
class NeighborGraph:
    """Symmetric k-nearest-neighbor graph over n points.

    mask is the boolean adjacency (no self loops); weights carries the
    distance on present edges and 0 elsewhere.  Symmetrization is by edge
    union, so every node keeps degree >= k.
    """

    n: int
    k: int
    mask: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def degrees(self):
        return self.mask.sum(axis=1)

    def edges(self):
        """Yield (i, j, weight) with i < j."""
        ii, jj = np.nonzero(np.triu(self.mask, 1))
        for i, j in zip(ii, jj):
            yield int(i), int(j), float(self.weights[i, j])

    def binary_weights(self):
        return self.mask.astype(np.float64)

    def n_components(self):
        return connected_components(self.mask)[0]


def knn_graph(D, k):
    """Build the union-symmetrized kNN graph of a distance matrix.

    Edge (i, j) is present when i is among the k nearest of j or vice versa;
    its weight is the distance D[i, j].
    """
    idx = knn_indices(D, k)
    n = D.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), k)
    mask[rows, idx.ravel()] = True
    mask |= mask.T
    np.fill_diagonal(mask, False)
    weights = np.where(mask, D, 0.0)
    return NeighborGraph(n=n, k=int(k), mask=mask, weights=weights)


def connected_components(mask):
    """Label connected components of a boolean adjacency matrix.

    Returns (count, labels); labels follow the order of first discovery in
    an index-ordered scan.
    """
    n = mask.shape[0]
    labels = np.full(n, -1, dtype=np.intp)
    count = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        frontier = np.zeros(n, dtype=bool)
        frontier[start] = True
        labels[start] = count
        while frontier.any():
            reach = mask[frontier].any(axis=0) & (labels < 0)
            labels[reach] = count
            frontier = reach
        count += 1
    return count, labels


@dataclass
class EigenPairs:
    """Eigenpairs in the requested order, one eigenvector per column.

    The standard solver returns unit-norm, mutually orthogonal vectors; the
    generalized solver returns B-orthonormal vectors (unit B-norm rather
    than unit Euclidean norm).
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.shape[1] != self.values.shape[0]:
            raise ValidationError("one eigenvector column required per eigenvalue")


def _select(order, count, w, V):
    if order not in ("smallest", "largest"):
        raise ParameterError(f"order must be 'smallest' or 'largest', got {order!r}")
    if order == "smallest":
        w, V = w[:count], V[:, :count]
    else:
        w, V = w[::-1][:count], V[:, ::-1][:, :count]
    return EigenPairs(values=w.copy(), vectors=V.copy())


def sym_eig(A, order="smallest", count=None):
    """Eigenpairs of a symmetric matrix via a dense LAPACK solver.

    Parameters
    ----------
    A : (n, n) array, symmetric within 1e-10 (relative to its magnitude).
    order : 'smallest' | 'largest'
        Sort direction of the returned eigenvalues.
    count : int, optional
        Number of pairs to return (default: all n).
    """
    A = check_symmetric(A, "A", tol=1e-10)
    n = A.shape[0]
    count = n if count is None else check_count(count, "count", minimum=1, maximum=n)
    w, V = scipy.linalg.eigh(0.5 * (A + A.T))
    return _select(order, count, w, V)


def gen_eig(A, B, order="smallest", count=None):
    """Eigenpairs of the generalized problem A v = lambda B v.

    B must be symmetric positive definite; the problem is reduced to a
    standard symmetric one through the Cholesky factor of B (LAPACK sygvd),
    and the returned vectors are B-orthonormal.
    """
    A = check_symmetric(A, "A", tol=1e-10)
    B = check_symmetric(B, "B", tol=1e-10)
    if A.shape != B.shape:
        raise ValidationError(f"A and B must have equal shapes, got {A.shape} and {B.shape}")
    n = A.shape[0]
    count = n if count is None else check_count(count, "count", minimum=1, maximum=n)
    try:
        w, V = scipy.linalg.eigh(0.5 * (A + A.T), 0.5 * (B + B.T))
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"B is not positive definite: {exc}") from exc
    return _select(order, count, w, V)


def laplacian(W):
    """Combinatorial Laplacian L = Delta - W and the degree vector.

    Any node with zero degree makes the eigenproblems downstream singular,
    so it is reported instead of silently propagated.
    """
    W = check_symmetric(W, "W")
    deg = W.sum(axis=1)
    if np.any(deg <= 0):
        isolated = int(np.flatnonzero(deg <= 0)[0])
        raise DegeneracyError(
            f"vertex {isolated} is isolated (zero degree); increase the neighbor count"
        )
    return np.diag(deg) - W, deg
