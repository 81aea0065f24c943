"""Smoke tests for the python bindings."""

import numpy as np
import pytest

import afgrl


@pytest.fixture(scope="module")
def sbm():
    return afgrl.generate_sbm(
        blocks=[20, 20], p_in=0.4, p_out=0.05, feature_dim=8, feature_shift=1.5, seed=7
    )


def test_graph_surface(sbm):
    assert sbm.num_nodes == 40
    assert sbm.num_features == 8
    assert sbm.num_classes == 2
    assert sbm.features.shape == (40, 8)
    assert sbm.labels[:20] == [0] * 20
    indptr, indices = sbm.adjacency
    assert indptr.shape == (41,)
    assert indptr[-1] == len(indices)
    assert "afgrl.Graph" in repr(sbm)


def test_normalize_adjacency_rows(sbm):
    indptr, indices, values = afgrl.normalize_adjacency(sbm)
    assert values.min() > 0.0
    # diagonal entries exist for every node (self-loops added)
    for node in range(sbm.num_nodes):
        row_cols = indices[indptr[node]:indptr[node + 1]]
        assert node in row_cols


def test_graph_file_roundtrip(sbm, tmp_path):
    edges = str(tmp_path / "edges.txt")
    feats = str(tmp_path / "features.csv")
    labels = str(tmp_path / "labels.txt")
    afgrl.save_graph(sbm, edges, feats, labels)
    back = afgrl.load_graph(edges, feats, labels)
    assert back.num_nodes == sbm.num_nodes
    np.testing.assert_array_equal(back.features, sbm.features)
    assert back.labels == sbm.labels


def test_train_and_evaluate(sbm):
    result = afgrl.train(
        sbm,
        embedding_dim=8,
        predictor_hidden=16,
        epochs=30,
        k=3,
        clusters=4,
        kmeans_runs=2,
        kmeans_iters=15,
        seed=11,
    )
    h = result["embeddings"]
    assert h.shape == (40, 8)
    assert np.isfinite(h).all()
    assert len(result["metrics"]) == 30
    losses = [m["loss"] for m in result["metrics"]]
    assert losses[5] < losses[0]

    train_idx, valid_idx, test_idx = afgrl.make_splits(40, 0.2, 0.2, seed=3)
    probe = afgrl.linear_probe(h, sbm.labels, train_idx, valid_idx, test_idx)
    assert probe["test_accuracy"] >= 0.8

    score = afgrl.kmeans_eval(h, sbm.labels, num_clusters=2, runs=5, seed=5)
    assert score["nmi"] >= 0.5
    assert afgrl.sim_at_n(h, sbm.labels, 5) >= 0.8


def test_train_is_deterministic(sbm):
    kwargs = dict(
        embedding_dim=4, predictor_hidden=8, epochs=5, k=2,
        clusters=3, kmeans_runs=2, kmeans_iters=10, seed=9,
    )
    a = afgrl.train(sbm, **kwargs)
    b = afgrl.train(sbm, **kwargs)
    np.testing.assert_array_equal(a["embeddings"], b["embeddings"])


def test_knn_cross_fixed_case():
    h = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
    neighbors = afgrl.knn_cross(h, h, 1)
    assert neighbors.tolist() == [[1], [0], [1]]


def test_loss_on_identical_vectors():
    z = np.array([[0.3, 0.4], [0.3, 0.4]])
    loss, grad = afgrl.afgrl_loss(z, z, [[1], [0]])
    assert loss == pytest.approx(-1.0, abs=1e-12)
    assert grad.shape == z.shape


def test_clustering_metrics():
    assert afgrl.nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert afgrl.nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)
    assert afgrl.homogeneity([0, 1, 2, 3], [0, 0, 1, 1]) == pytest.approx(1.0)


def test_kmeans_blobs():
    rng = np.random.default_rng(1)
    blob_a = rng.normal(10.0, 0.1, size=(25, 3))
    blob_b = rng.normal(-10.0, 0.1, size=(25, 3))
    h = np.vstack([blob_a, blob_b])
    assignments, centroids, inertia = afgrl.kmeans(h, num_clusters=2, max_iters=50, seed=2)
    assert centroids.shape == (2, 3)
    assert len(set(assignments[:25])) == 1
    assert len(set(assignments[25:])) == 1
    assert assignments[0] != assignments[-1]


def test_correct_ratio_curve(sbm):
    h = sbm.features
    curve = afgrl.correct_ratio_curve(h, sbm.labels, sbm, ks=[2, 4])
    assert len(curve["knn_ratio"]) == 2
    assert 0.0 <= curve["adj_ratio"] <= 1.0


def test_errors_surface_as_python_exceptions(sbm):
    with pytest.raises(ValueError):
        afgrl.load_graph("/nonexistent", "/nonexistent")
    with pytest.raises(Exception):
        afgrl.knn_cross(np.zeros((3, 2)), np.zeros((3, 2)), 3)  # k >= N
