import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boltzfold import ValidationError
from boltzfold.analysis.attribution import AttributionModel, cluster_delta, recommend, restrict_and_rerun, ridge_fit
from boltzfold.analysis.clustering import Clustering, knn_similarity, laplacian, silhouette_sweep, \
    spectral_clustering
from boltzfold.analysis.io import format_clustering, parse_clustering, parse_table, format_table
from boltzfold.analysis.topics import frobenius, nmf
from boltzfold.analysis.tsne import joint_probabilities, tsne
from boltzfold.selex import AptamerProfile
from fixtures import agreement, blobs


# --- topics ---------------------------------------------------------------------


def test_nmf_rank_one():
    rng = np.random.default_rng(0)
    X = np.outer(rng.random(20) + 0.1, rng.random(15) + 0.1)
    tm = nmf(X, topics=1, max_iters=2000, tol=0)
    assert tm.final_objective < 1e-6
    assert frobenius(X, tm.M, tm.H) == pytest.approx(tm.final_objective)


def test_nmf_monotone_nonnegative_deterministic():
    X = np.random.default_rng(1).random((50, 40))
    tm = nmf(X, topics=5, max_iters=500, tol=0, seed=3)
    h = np.asarray(tm.history)
    assert len(h) == 501 and tm.n_iter == 500
    assert np.all(np.diff(h) <= 1e-10)
    assert (tm.M >= 0).all() and (tm.H >= 0).all()
    again = nmf(X, topics=5, max_iters=500, tol=0, seed=3)
    assert np.array_equal(tm.M, again.M) and np.array_equal(tm.H, again.H)


def test_nmf_zero_row_and_errors():
    X = np.random.default_rng(2).random((8, 6))
    X[3] = 0
    tm = nmf(X, topics=2, max_iters=300)
    assert np.abs(tm.M[3]).max() < 1e-8
    with pytest.raises(ValidationError):
        nmf(-X, topics=2)
    with pytest.raises(ValidationError):
        nmf(X, topics=7)


def test_nmf_stops_on_tolerance():
    X = np.random.default_rng(4).random((10, 10))
    assert nmf(X, topics=3, max_iters=5000, tol=1e-3).n_iter < 5000


# --- similarity and spectral clustering ---------------------------------------------


def test_knn_examples():
    A = knn_similarity(np.array([[0.0], [1.0]]), 1)
    assert A[0, 1] == A[1, 0] > 0 and A[0, 0] == A[1, 1] == 0
    A = knn_similarity(np.zeros((4, 2)), 2)
    assert set(np.unique(A[A > 0])) == {1.0}
    X, y = blobs(10, seed=1)
    A = knn_similarity(X, 3)
    assert not A[np.not_equal.outer(y, y)].any()
    assert np.array_equal(A, A.T)
    with pytest.raises(ValidationError):
        knn_similarity(X, len(X))


def test_two_components_recovered():
    A = np.zeros((8, 8))
    A[:4, :4] = 1
    A[4:, 4:] = 1
    np.fill_diagonal(A, 0)
    cl = spectral_clustering(A, k_clusters=2, seed=0)
    assert cl.assignments.tolist() == [1, 1, 1, 1, 2, 2, 2, 2]


def test_planted_blobs_recovered():
    X, y = blobs(30, seed=2)
    cl = spectral_clustering(knn_similarity(X, 8), k_clusters=3, seed=0)
    assert agreement(cl.assignments, y) == 1.0
    assert -1 <= cl.silhouette <= 1 and cl.assignments.min() == 1 and cl.assignments.max() == 3


def test_spectral_partition_invariant_under_row_permutation():
    X, _ = blobs(20, seed=3)
    perm = np.random.default_rng(0).permutation(len(X))
    a = spectral_clustering(knn_similarity(X, 6), k_clusters=3).assignments
    b = spectral_clustering(knn_similarity(X[perm], 6), k_clusters=3).assignments
    assert agreement(a[perm], b) == 1.0


def test_spectral_rejects_bad_input():
    with pytest.raises(ValidationError):
        spectral_clustering(np.array([[0.0, 1.0], [0.5, 0.0]]))
    with pytest.raises(ValidationError):
        spectral_clustering(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(ValidationError):
        spectral_clustering(np.ones((2, 2)))


def test_sweep():
    X, _ = blobs(20, seed=4)
    best, scores = silhouette_sweep(X, 2, 8, k_neighbors=6)
    assert best == 3 and sorted(scores) == list(range(2, 9))
    with pytest.raises(ValidationError):
        silhouette_sweep(np.ones((20, 3)), 2, 5)
    with pytest.raises(ValidationError):
        silhouette_sweep(X, 2, len(X))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_laplacian_psd_with_constant_null_vector(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) + 0.01
    A = (A + A.T) / 2
    np.fill_diagonal(A, 0)
    L = laplacian(A)
    vals = np.linalg.eigvalsh(L)
    assert vals.min() >= -1e-10 and abs(vals[0]) < 1e-10
    assert np.allclose(L @ np.ones(n), 0, atol=1e-12)


# --- ridge and delta scores ---------------------------------------------------------


def test_ridge_identity():
    y = np.array([3.0, -1.0, 0.5, 2.0])
    m = ridge_fit(np.eye(4), y, lam=0.0)
    assert np.array_equal(m.w, y)
    assert m.negative_set == [1] and m.positive_set == [0, 2, 3]
    assert m.top_neg == [1] and m.top_pos == [0, 3, 2]
    with pytest.raises(ValidationError):
        ridge_fit(np.eye(4), y, lam=-1)
    with pytest.raises(ValidationError):
        ridge_fit(np.eye(4), y[:3])


def _gradient_descent(X, y, lam, steps=200_000):
    G, b = X.T @ X + lam * np.eye(X.shape[1]), X.T @ y
    step = 1.0 / np.linalg.eigvalsh(G).max()
    w = np.zeros(X.shape[1])
    for _ in range(steps):
        g = G @ w - b
        if np.abs(g).max() < 1e-13:
            break
        w -= step * g
    return w


def test_ridge_matches_gradient_descent_and_lstsq():
    rng = np.random.default_rng(5)
    X, y = rng.random((30, 8)), rng.standard_normal(30)
    assert np.abs(ridge_fit(X, y, 1.0).w - _gradient_descent(X, y, 1.0)).max() <= 1e-5
    assert np.abs(ridge_fit(X, y, 0.0).w - np.linalg.lstsq(X, y, rcond=None)[0]).max() <= 1e-8


def test_ridge_shrinks():
    rng = np.random.default_rng(6)
    X, y = rng.random((20, 5)), rng.standard_normal(20)
    norms = [np.linalg.norm(ridge_fit(X, y, lam).w) for lam in (0.1, 1, 10, 100, 1e4, 1e8)]
    assert all(b < a for a, b in zip(norms, norms[1:])) and norms[-1] < 1e-6


def _model(top_neg, top_pos, d=10):
    w = np.zeros(d)
    w[top_neg] = -1
    w[top_pos] = 1
    return AttributionModel(w, 1.0, [c for c in range(d) if w[c] < 0], [c for c in range(d) if w[c] >= 0],
                            list(top_neg), list(top_pos))


def test_delta_examples():
    X = np.zeros((4, 10))
    X[:2, 0] = 2.0
    X[2:, 9] = 2.0
    cl = Clustering(np.array([1, 1, 2, 2]), 2, 0.0)
    rep = cluster_delta(X, _model([0, 1, 2, 3, 4], [5, 6, 7, 8, 9]), cl, top_m=1)
    assert rep.delta == {1: pytest.approx(0.4), 2: pytest.approx(-0.4)}
    assert rep.anomalous == {1}
    assert cluster_delta(X, _model([0, 1, 2, 3, 4], [5, 6, 7, 8, 9]), cl, top_m=5).anomalous == {1, 2}
    assert cluster_delta(np.zeros((4, 10)), _model([0], [9]), cl).delta == {1: 0.0, 2: 0.0}


def test_delta_skips_empty_cluster():
    cl = Clustering(np.array([1, 1, 3]), 3, 0.0)
    rep = cluster_delta(np.ones((3, 10)), _model([0], [9]), cl)
    assert rep.skipped == [2] and 2 not in rep.delta


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_delta_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((12, 10))
    cl = Clustering(rng.integers(1, 4, 12), 3, 0.0)
    cl.assignments[:3] = [1, 2, 3]
    a = cluster_delta(X, _model([0, 1, 2, 3, 4], [5, 6, 7, 8, 9]), cl).delta
    b = cluster_delta(X, _model([5, 6, 7, 8, 9], [0, 1, 2, 3, 4]), cl).delta
    assert all(a[c] == -b[c] for c in a)


# --- restriction and recommendation ---------------------------------------------


def test_restrict_examples():
    X, y = blobs(12, dim=6, seed=7)
    X = np.abs(X)
    cl = Clustering(y + 1, 3, 0.0)
    model = _model([0, 1], [2, 3, 4, 5], d=6)
    neg, pos = restrict_and_rerun(X, model, cl, {2}, topics=2, clusters=2, k_neighbors=4)
    assert len(pos.rows) == len(X) - 12 and 12 not in pos.rows
    assert len(neg.rows) == len(X) and neg.columns == [0, 1] and pos.columns == [2, 3, 4, 5]
    _, pos = restrict_and_rerun(X, model, cl, set(), topics=2, clusters=2, k_neighbors=4)
    assert len(pos.rows) == len(X)
    with pytest.raises(ValidationError):
        restrict_and_rerun(X, _model([], [0, 1, 2, 3, 4, 5], d=6), cl, set())


def _p(i, c, r):
    return AptamerProfile(f"apt{i}", "ACGT", {}, c, r)


def test_recommend_examples():
    cl = Clustering(np.array([1, 2, 2, 3, 3]), 3, 0.0)
    profiles = [_p(0, 0.5, 1.0), _p(1, 0.9, 0.1), _p(2, 0.1, 3.0), _p(3, 0.95, 5.0), _p(4, 0.2, 0.0)]
    assert recommend(cl, profiles) == {1: ("apt0", "apt0"), 2: ("apt1", "apt2"), 3: ("apt3", "apt3")}
    with pytest.raises(ValidationError):
        recommend(cl, profiles[:4])


# --- t-SNE -------------------------------------------------------------------------


def _purity(Y, y, k=10):
    D = ((Y[:, None] - Y[None]) ** 2).sum(-1)
    np.fill_diagonal(D, np.inf)
    nn = np.argsort(D, axis=1)[:, :k]
    return float((y[nn] == y[:, None]).mean())


def test_tsne_blobs():
    X, y = blobs(30, seed=8)
    res = tsne(X, perplexity=10, iters=500, seed=0)
    assert res.Y.shape == (90, 2)
    assert min(res.kl) >= 0
    assert _purity(res.Y, y) >= 0.9
    again = tsne(X, perplexity=10, iters=500, seed=0)
    assert np.array_equal(res.Y, again.Y)


def test_tsne_affinities_and_errors():
    X, _ = blobs(10, seed=9)
    P = joint_probabilities(X, 5.0)
    assert np.allclose(P, P.T) and P.sum() == pytest.approx(1.0) and np.all(np.diag(P) == 0)
    with pytest.raises(ValidationError):
        tsne(X[:10], perplexity=5)


# --- serialization ---------------------------------------------------------------


def test_table_and_clustering_round_trip():
    ids = ["a", "b", "c"]
    vals = np.array([[0.1, 2.0], [1 / 3, 0.0], [5e-17, 7.0]])
    header, got_ids, got = parse_table(format_table(["id", "x", "y"], ids, vals))
    assert header == ["id", "x", "y"] and got_ids == ids and np.array_equal(got, vals)
    cl = Clustering(np.array([1, 2, 1]), 2, 0.25)
    got_ids, back = parse_clustering(format_clustering(cl, ids))
    assert got_ids == ids and back.assignments.tolist() == [1, 2, 1] and back.k == 2 and back.silhouette == 0.25
