import numpy as np
import pytest

from occlust.exceptions import AffinityError, DegeneracyError, ParameterError
from occlust.linalg import gen_eig, knn_graph, laplacian, pairwise_distances, sym_eig
from occlust.reduction import (
    ClassicalMDS,
    LaplacianEigenmaps,
    LocalityPreservingProjection,
    LocallyLinearEmbedding,
    NeighborhoodPreservingEmbedding,
    PCA,
    REDUCTIONS,
    ReductionSpec,
    TSNE,
    conditional_affinities,
    kl_divergence_and_grad,
    reconstruction_weights,
    _lle_embedding_matrix,
)
from synthdata import blob_points


class TestPCA:
    def test_rank_one_data(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        pca = PCA(n_components=1).fit(X)
        direction = pca.components_[:, 0]
        np.testing.assert_allclose(np.abs(direction), [1 / np.sqrt(2)] * 2, atol=1e-12)
        # residual variance is zero: the projection reconstructs the data
        recon = pca.embedding_ @ pca.components_.T + pca.mean_
        np.testing.assert_allclose(recon, X, atol=1e-12)

    def test_full_dimension_preserves_distances(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(12, 4))
        Y = PCA(n_components=4).fit(X).embedding_
        np.testing.assert_allclose(
            pairwise_distances(Y), pairwise_distances(X), atol=1e-8
        )

    def test_column_variances_match_covariance_eigenvalues(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 5)) @ np.diag([3.0, 2.0, 1.5, 1.0, 0.5])
        pca = PCA(n_components=3).fit(X)
        oracle = np.sort(np.linalg.eigh(np.cov(X.T))[0])[::-1][:3]
        np.testing.assert_allclose(pca.embedding_.var(axis=0, ddof=1), oracle, atol=1e-10)
        np.testing.assert_allclose(pca.explained_variance_, oracle, atol=1e-10)

    def test_n_components_too_large(self):
        with pytest.raises(ParameterError):
            PCA(n_components=3).fit(np.zeros((5, 2)) + np.eye(5, 2))

    def test_transform_matches_fit_embedding(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(15, 4))
        pca = PCA(n_components=2).fit(X)
        np.testing.assert_allclose(pca.transform(X), pca.embedding_, atol=1e-12)


class TestClassicalMDS:
    def test_two_points(self):
        D = np.array([[0.0, 1.0], [1.0, 0.0]])
        Y = ClassicalMDS(n_components=1).fit_transform(D)
        np.testing.assert_allclose(np.sort(Y.ravel()), [-0.5, 0.5], atol=1e-12)

    def test_planar_points_recovered(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(14, 2))
        D = pairwise_distances(X)
        Y = ClassicalMDS(n_components=2).fit_transform(D)
        np.testing.assert_allclose(pairwise_distances(Y), D, atol=1e-8)

    def test_frobenius_gap_matches_eigen_truncation(self):
        rng = np.random.default_rng(4)
        U = rng.normal(size=(10, 384))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        D = pairwise_distances(U)
        for m2 in (4, 9):
            Y = ClassicalMDS(n_components=m2).fit_transform(D)
            gap = np.linalg.norm(D - pairwise_distances(Y))
            # independent truncation oracle on the double-centered matrix
            n = 10
            J = np.eye(n) - 1.0 / n
            B = -0.5 * J @ (D * D) @ J
            vals, vecs = np.linalg.eigh(B)
            keep = np.argsort(vals)[::-1][:m2]
            lam = np.clip(vals[keep], 0, None)
            Yo = vecs[:, keep] * np.sqrt(lam)
            oracle_gap = np.linalg.norm(D - pairwise_distances(Yo))
            assert gap == pytest.approx(oracle_gap, abs=1e-8)

    def test_rank10_is_exact_for_10_points(self):
        rng = np.random.default_rng(5)
        U = rng.normal(size=(10, 384))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        D = pairwise_distances(U)
        Y = ClassicalMDS(n_components=9).fit_transform(D)
        assert np.linalg.norm(D - pairwise_distances(Y)) <= 1e-8

    def test_degenerate_input(self):
        with pytest.raises(DegeneracyError):
            ClassicalMDS(n_components=1).fit(np.zeros((3, 3)))


def path_graph_distances(n=6):
    return pairwise_distances(np.arange(float(n)).reshape(-1, 1))


class TestLaplacianEigenmaps:
    def test_constant_vector_is_null(self):
        D = path_graph_distances()
        graph = knn_graph(D, 1)
        L, deg = laplacian(graph.binary_weights())
        pairs = gen_eig(L, np.diag(deg), order="smallest", count=1)
        assert abs(pairs.values[0]) <= 1e-10
        v = pairs.vectors[:, 0]
        assert np.abs(v - v[0]).max() <= 1e-8

    def test_two_disconnected_edges(self):
        D = pairwise_distances(np.array([[0.0], [0.1], [10.0], [10.1]]))
        Y = LaplacianEigenmaps(n_components=1, n_neighbors=1).fit_transform(D).ravel()
        assert abs(Y[0] - Y[1]) <= 1e-9 and abs(Y[2] - Y[3]) <= 1e-9
        assert abs(Y[0] - Y[2]) > 1e-3

    def test_path_graph_matches_dense_oracle(self):
        D = path_graph_distances()
        le = LaplacianEigenmaps(n_components=2, n_neighbors=1).fit(D)
        graph = knn_graph(D, 1)
        L, deg = laplacian(graph.binary_weights())
        oracle = gen_eig(L, np.diag(deg), order="smallest", count=3)
        for j in range(2):
            got = le.embedding_[:, j]
            want = oracle.vectors[:, j + 1]
            agree = min(np.abs(got - want).max(), np.abs(got + want).max())
            assert agree <= 1e-8

    def test_too_many_components_named(self):
        # three far-apart pairs, k=1: three connected components
        D = pairwise_distances(np.array([[0.0], [0.1], [10.0], [10.1], [20.0], [20.1]]))
        with pytest.raises(DegeneracyError, match="3 connected components"):
            LaplacianEigenmaps(n_components=1, n_neighbors=1).fit(D)


class TestLocallyLinearEmbedding:
    def test_weight_rows_sum_to_one(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(20, 3))
        lle = LocallyLinearEmbedding(n_components=2, n_neighbors=5).fit(X)
        np.testing.assert_allclose(lle.weights_.sum(axis=1), 1.0, atol=1e-9)

    def test_collinear_interior_points_exact(self):
        t = np.array([0.0, 1.0, 2.5, 4.0, 5.0])
        X = t[:, None] * np.array([1.0, 1.0, 1.0])
        nbrs_dist = pairwise_distances(X)
        from occlust.linalg import knn_indices

        nbrs = knn_indices(nbrs_dist, 2)
        W = reconstruction_weights(X, nbrs)
        for i in range(1, 4):  # interior points have neighbors on both sides
            recon = W[i] @ X[nbrs[i]]
            assert np.linalg.norm(recon - X[i]) <= 1e-6

    def test_embedding_matrix_null_is_constant(self):
        rng = np.random.default_rng(7)
        t = rng.uniform(0, 3 * np.pi, size=20)
        X = np.c_[t * np.cos(t), rng.uniform(0, 5, size=20), t * np.sin(t)]
        M, _, _ = _lle_embedding_matrix(X, 4)
        pairs = sym_eig(M, order="smallest", count=1)
        assert abs(pairs.values[0]) <= 1e-9
        v = pairs.vectors[:, 0]
        assert np.abs(np.abs(v) - 1 / np.sqrt(20)).max() <= 1e-6

    def test_requires_two_neighbors(self):
        with pytest.raises(ParameterError):
            LocallyLinearEmbedding(n_components=1, n_neighbors=1).fit(np.eye(4))


class TestLocalityPreservingProjection:
    def test_directions_delta_orthonormal(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(25, 5))
        lpp = LocalityPreservingProjection(n_components=2, n_neighbors=4).fit(X)
        Xc = X - X.mean(axis=0)
        _, deg = laplacian(knn_graph(pairwise_distances(Xc), 4).binary_weights())
        B = Xc.T @ (deg[:, None] * Xc)
        gram = lpp.directions_.T @ B @ lpp.directions_
        assert np.abs(gram - np.eye(2)).max() <= 1e-6

    def test_subspace_objective_matches_dense_oracle(self):
        rng = np.random.default_rng(9)
        Z = rng.normal(size=(25, 2))
        R = np.linalg.qr(rng.normal(size=(6, 2)))[0].T  # orthonormal rows
        X = Z @ R
        lpp = LocalityPreservingProjection(n_components=2, n_neighbors=4).fit(X)
        Zc = Z - Z.mean(axis=0)
        _, W, = (None,) * 2
        graph = knn_graph(pairwise_distances(Zc), 4)
        L, deg = laplacian(graph.binary_weights())
        oracle = gen_eig(Zc.T @ L @ Zc, Zc.T @ (deg[:, None] * Zc), "smallest", 2)
        np.testing.assert_allclose(lpp.eigenvalues_, oracle.values, atol=1e-6)

    def test_identical_points_no_crash(self):
        X = np.ones((8, 3))
        lpp = LocalityPreservingProjection(n_components=2, n_neighbors=2).fit(X)
        assert np.all(np.isfinite(lpp.embedding_))
        assert lpp.embedding_.shape == (8, 2)


class TestNeighborhoodPreservingEmbedding:
    def test_line_preserves_neighbor_order(self):
        t = np.linspace(0.0, 5.0, 12)
        X = t[:, None] * np.array([2.0, -1.0, 0.5])
        Y = NeighborhoodPreservingEmbedding(n_components=1, n_neighbors=2).fit_transform(X)
        diffs = np.diff(Y.ravel())
        assert (diffs > 0).all() or (diffs < 0).all()

    def test_directions_gram_orthonormal(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(20, 4))
        npe = NeighborhoodPreservingEmbedding(n_components=2, n_neighbors=4).fit(X)
        gram = npe.directions_.T @ (X.T @ X) @ npe.directions_
        assert np.abs(gram - np.eye(2)).max() <= 1e-6

    def test_rayleigh_quotient_is_smallest_eigenvalue(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(15, 4))
        npe = NeighborhoodPreservingEmbedding(n_components=1, n_neighbors=3).fit(X)
        M, _, _ = _lle_embedding_matrix(X, 3)
        a = npe.directions_[:, 0]
        quotient = (a @ (X.T @ M @ X) @ a) / (a @ (X.T @ X) @ a)
        oracle = gen_eig(X.T @ M @ X, X.T @ X, order="smallest", count=1)
        assert quotient == pytest.approx(float(oracle.values[0]), abs=1e-8)


def simplex_points():
    # regular tetrahedron: all pairwise distances equal
    return np.array([
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]) / np.sqrt(3.0)


class TestTSNE:
    def test_equidistant_conditionals_uniform(self):
        from scipy.spatial.distance import cdist

        X = simplex_points()
        D2 = cdist(X, X, "sqeuclidean")
        P = conditional_affinities(D2, perplexity=3.0)
        for i in range(4):
            row = np.delete(P[i], i)
            np.testing.assert_allclose(row, 1.0 / 3.0, atol=1e-9)
            perp = 2.0 ** float(-np.sum(row * np.log2(row)))
            assert perp == pytest.approx(3.0, abs=1e-4)

    def test_unreachable_perplexity_raises(self):
        from scipy.spatial.distance import cdist

        X = simplex_points()
        with pytest.raises(AffinityError):
            conditional_affinities(cdist(X, X, "sqeuclidean"), perplexity=2.0)

    def test_joint_affinities_properties(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(15, 4))
        t = TSNE(n_components=2, perplexity=5, n_iter=5, seed=0).fit(X)
        P = t.affinities_
        assert P.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.abs(P - P.T).max() <= 1e-15
        assert np.abs(np.diag(P)).max() == 0.0

    def test_gradient_matches_finite_differences(self):
        from scipy.spatial.distance import cdist

        rng = np.random.default_rng(13)
        X = rng.normal(size=(12, 5))
        P = conditional_affinities(cdist(X, X, "sqeuclidean"), perplexity=4.0)
        P = (P + P.T) / (2 * 12)
        Y = rng.normal(size=(12, 2))
        _, grad = kl_divergence_and_grad(Y, P)
        fd = np.zeros_like(Y)
        h = 1e-6
        for i in range(12):
            for j in range(2):
                Yp, Ym = Y.copy(), Y.copy()
                Yp[i, j] += h
                Ym[i, j] -= h
                fd[i, j] = (kl_divergence_and_grad(Yp, P)[0]
                            - kl_divergence_and_grad(Ym, P)[0]) / (2 * h)
        rel = np.linalg.norm(grad - fd) / np.linalg.norm(fd)
        assert rel <= 1e-4

    def test_kl_non_increasing_after_exaggeration(self):
        X, _ = blob_points(40, 4, 3, separation=8.0, seed=0)
        t = TSNE(n_components=2, perplexity=10, n_iter=400, seed=1).fit(X)
        tail = np.diff(t.kl_curve_[-100:])
        assert (tail <= 1e-6).all()

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(20, 4))
        a = TSNE(n_components=2, perplexity=6, n_iter=60, seed=3).fit(X).embedding_
        b = TSNE(n_components=2, perplexity=6, n_iter=60, seed=3).fit(X).embedding_
        assert (a == b).all()

    def test_perplexity_bound(self):
        with pytest.raises(ParameterError):
            TSNE(perplexity=10, n_iter=5).fit(np.eye(5))


class TestEmbeddingDump:
    def test_roundtrip(self, tmp_path):
        from occlust.reduction import write_embedding_csv

        Y = np.array([[0.5, -1.25], [3.0, 0.0]])
        path = write_embedding_csv(Y, str(tmp_path / "y.csv"))
        back = np.loadtxt(path, delimiter=",")
        assert (back == Y).all()


class TestCommonInvariants:
    @pytest.mark.parametrize("name", list(REDUCTIONS))
    def test_shape_finite_deterministic(self, name):
        X, _ = blob_points(25, 6, 3, separation=6.0, seed=20)
        spec = ReductionSpec(method=name, target_dim=2, k_nn=4, perplexity=6,
                             iterations=30, seed=5)
        source = pairwise_distances(X) if spec.consumes == "distances" else X
        a = spec.build().fit(source).embedding_
        b = spec.build().fit(source).embedding_
        assert a.shape == (25, 2)
        assert np.all(np.isfinite(a))
        assert (a == b).all()

    @pytest.mark.parametrize("name", ["PCA", "MDS"])
    def test_permutation_equivariance(self, name):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(18, 5))
        perm = rng.permutation(18)
        if name == "PCA":
            base = PCA(n_components=2).fit(X).embedding_
            shuffled = PCA(n_components=2).fit(X[perm]).embedding_
        else:
            D = pairwise_distances(X)
            base = ClassicalMDS(n_components=2).fit_transform(D)
            shuffled = ClassicalMDS(n_components=2).fit_transform(D[np.ix_(perm, perm)])
        unperm = np.empty_like(shuffled)
        unperm[perm] = shuffled
        for j in range(2):
            agree = min(
                np.abs(unperm[:, j] - base[:, j]).max(),
                np.abs(unperm[:, j] + base[:, j]).max(),
            )
            assert agree <= 1e-8

    def test_spectral_objectives_beat_random_candidates(self):
        rng = np.random.default_rng(22)
        X, _ = blob_points(20, 5, 2, separation=4.0, seed=23)
        D = pairwise_distances(X)

        # LE: Rayleigh quotient of the returned coordinate vs 100 random
        # feasible candidates (Delta-orthogonal to the constant vector)
        graph = knn_graph(D, 4)
        L, deg = laplacian(graph.binary_weights())
        y = LaplacianEigenmaps(n_components=1, n_neighbors=4).fit_transform(D).ravel()
        obj = (y @ L @ y) / (y @ (deg * y))
        for _ in range(100):
            cand = rng.normal(size=20)
            cand -= (cand @ deg) / deg.sum()
            assert obj <= (cand @ L @ cand) / (cand @ (deg * cand)) + 1e-9

        # LLE: same with the embedding matrix M
        M, _, _ = _lle_embedding_matrix(X, 4)
        y = LocallyLinearEmbedding(n_components=1, n_neighbors=4).fit_transform(X).ravel()
        obj = (y @ M @ y) / (y @ y)
        for _ in range(100):
            cand = rng.normal(size=20)
            cand -= cand.mean()
            assert obj <= (cand @ M @ cand) / (cand @ cand) + 1e-9

        # LPP / NPE: generalized Rayleigh quotient over random directions
        Xc = X - X.mean(axis=0)
        lpp = LocalityPreservingProjection(n_components=1, n_neighbors=4).fit(X)
        A = Xc.T @ L @ Xc
        B = Xc.T @ (deg[:, None] * Xc)
        a = lpp.directions_[:, 0]
        obj = (a @ A @ a) / (a @ B @ a)
        for _ in range(100):
            cand = rng.normal(size=5)
            assert obj <= (cand @ A @ cand) / (cand @ B @ cand) + 1e-6

        npe = NeighborhoodPreservingEmbedding(n_components=1, n_neighbors=4).fit(X)
        A2 = X.T @ M @ X
        B2 = X.T @ X
        a2 = npe.directions_[:, 0]
        obj2 = (a2 @ A2 @ a2) / (a2 @ B2 @ a2)
        for _ in range(100):
            cand = rng.normal(size=5)
            assert obj2 <= (cand @ A2 @ cand) / (cand @ B2 @ cand) + 1e-6
