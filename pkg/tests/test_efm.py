import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndpredict.distribution import ndv_for, ndv_matrix
from ndpredict.efm import (
    EvolutionMatrix,
    TrainingError,
    backshifted_windows,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    predict_raw,
    save_model,
    select_k,
    train,
)
from ndpredict.graph import RunWindows, TimeWindow
from ndpredict.linalg import SingularMatrix, matvec
from ndpredict.synth import SynthSpec, cyclic_drift_matrix, generate, random_stochastic_matrix
from tests.conftest import graph_from_counts


def with_matrix(model, L):
    """Copy of ``model`` whose every cluster uses ``L``."""
    mats = {c: EvolutionMatrix(np.asarray(L, float), m.source_cluster) for c, m in model.matrices.items()}
    return dataclasses.replace(model, matrices=mats)


@pytest.fixture(scope="module")
def planted():
    w = RunWindows(TimeWindow(0, 100), TimeWindow(100, 200), TimeWindow(200, 300))
    L0 = random_stochastic_matrix(6, np.random.default_rng(100), stay=0.4)
    g, truth = generate(SynthSpec(n=6, num_targets=200, windows=w, matrices=[L0], events_per_window=500, seed=0))
    return g, truth, L0, w


class TestPrediction:
    def test_identity_matrix_returns_observed_ndv(self, planted):
        g, _, _, w = planted
        model = with_matrix(train(g, w, 1), np.eye(6))
        for t in g.targets[:10]:
            np.testing.assert_array_equal(predict(model, g, t), ndv_for(g, t, w.observed))

    def test_cyclic_permutation(self, windows3):
        # observed NDV over 7 events on 3 labels: (6+1, 1+1, 0+1)/10
        g = graph_from_counts({"x": [[6, 0, 0], [0, 1, 0], [0, 0, 0]], "y": [[1, 1, 1], [1, 1, 1], [0, 0, 0]]}, 3, windows3)
        model = train(g, windows3, 1)
        np.testing.assert_allclose(ndv_for(g, "x", windows3.observed), [0.7, 0.2, 0.1])
        perm = with_matrix(model, np.roll(np.eye(3), 1, axis=0))
        np.testing.assert_allclose(predict(perm, g, "x"), [0.1, 0.7, 0.2], atol=1e-15)

    def test_raw_product_is_literal(self, planted):
        g, _, _, w = planted
        model = train(g, w, 2, seed=5)
        for t in g.targets[::20]:
            L = model.matrix_for(model.cluster_for(g, t))
            np.testing.assert_array_equal(predict_raw(model, g, t), matvec(L, ndv_for(g, t, w.observed)))

    def test_projection_clamps_negative_output(self, planted):
        g, _, _, w = planted
        L = np.eye(6)
        L[0] = -1.0
        model = with_matrix(train(g, w, 1), L)
        out = predict(model, g, g.targets[0])
        assert out[0] == 0.0 and abs(out.sum() - 1) < 1e-12

    def test_all_nonpositive_output_is_uniform(self, planted):
        g, _, _, w = planted
        model = with_matrix(train(g, w, 1), -np.eye(6))
        np.testing.assert_array_equal(predict(model, g, g.targets[0]), np.full(6, 1 / 6))

    def test_simplex_output(self, planted):
        g, _, _, w = planted
        model = train(g, w, 3, seed=1)
        for t in g.targets:
            p = predict(model, g, t)
            assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-9

    def test_target_without_events_still_predicts(self, planted):
        g, _, _, w = planted
        model = train(g, w, 1)
        p = predict(model, g, "never-seen")
        L = model.matrix_for(0)
        np.testing.assert_allclose(p, np.clip(L @ np.full(6, 1 / 6), 0, None) / np.clip(L @ np.full(6, 1 / 6), 0, None).sum())


class TestTraining:
    def test_planted_recovery_and_orientation(self, planted):
        g, _, L0, w = planted
        L = train(g, w, 1).matrix_for(0)
        assert np.abs(L - L0).max() <= 0.05
        assert np.linalg.norm(L0 - L0.T) > 0.3
        assert np.linalg.norm(L - L0) < np.linalg.norm(L - L0.T)

    def test_least_squares_optimality(self, planted):
        g, _, _, w = planted
        model = train(g, w, 1, ridge_fallback=0.0)
        pool = sorted(g.targets_active_in_all([w.history, w.current]))
        X, Y = ndv_matrix(g, pool, w.history), ndv_matrix(g, pool, w.current)
        L = model.matrix_for(0)
        assert model.matrices[0].ridge_used == 0.0

        def sse(M):
            return np.sum((Y.T - M @ X.T) ** 2)

        best = sse(L)
        rng = np.random.default_rng(2)
        for _ in range(100):
            d = rng.normal(size=L.shape)
            assert sse(L + d * 1e-3 / np.linalg.norm(d)) >= best - 1e-12

    def test_stationary_fit_reproduces_pairs(self, windows3):
        same = [[3, 1, 0, 0], [3, 1, 0, 0], [1, 1, 1, 1]]
        g = graph_from_counts({f"t{i}": same for i in range(8)}, 4, windows3)
        model = train(g, windows3, 1)
        assert model.matrices[0].ridge_used == 1e-8
        L = model.matrix_for(0)
        for t in g.targets:
            np.testing.assert_allclose(L @ ndv_for(g, t, windows3.history), ndv_for(g, t, windows3.current), atol=1e-6)

    def test_single_sample_cluster_trains(self, windows3):
        g = graph_from_counts({"solo": [[5, 1, 0], [0, 5, 1], [1, 1, 1]]}, 3, windows3)
        model = train(g, windows3, 1, ridge_fallback=1e-8)
        assert model.matrices[0].ridge_used == 1e-8
        assert np.all(np.isfinite(model.matrix_for(0)))

    def test_zero_fallback_raises(self, windows3):
        g = graph_from_counts({"solo": [[5, 1, 0], [0, 5, 1], [1, 1, 1]]}, 3, windows3)
        with pytest.raises(SingularMatrix):
            train(g, windows3, 1, ridge_fallback=0.0)

    def test_singular_cluster_inherits_global(self, windows3, rng):
        counts = {f"t{i:02d}": [rng.integers(20, 30, 3).tolist(), rng.integers(20, 30, 3).tolist(), [1, 1, 1]] for i in range(30)}
        counts["zfar"] = [[0, 0, 400], [0, 0, 400], [1, 1, 1]]
        g = graph_from_counts(counts, 3, windows3)
        # a ridge below the pivot tolerance cannot rescue the one-sample cluster
        model = train(g, windows3, 2, seed=0, ridge_fallback=1e-14)
        c = model.cluster_for(g, "zfar")
        assert model.cluster_model.members(c) == ["zfar"]
        assert model.matrices[c].inherited
        other = [k for k in model.matrices if k != c][0]
        assert not model.matrices[other].inherited

    def test_everything_singular_is_a_training_error(self, windows3):
        same = [[3, 1, 0], [3, 1, 0], [1, 1, 1]]
        g = graph_from_counts({f"t{i}": same for i in range(5)}, 3, windows3)
        with pytest.raises(TrainingError):
            train(g, windows3, 1, ridge_fallback=1e-14)

    def test_no_active_targets(self, windows3):
        g = graph_from_counts({"x": [[1, 0], [0, 0], [0, 0]]}, 2, windows3)
        with pytest.raises(TrainingError, match="no targets"):
            train(g, windows3, 1)

    def test_k_exceeds_pool(self, planted):
        g, _, _, w = planted
        with pytest.raises(TrainingError):
            train(g, w, 500)

    def test_clusters_on_history_ndv(self, planted):
        g, _, _, w = planted
        model = train(g, w, 3, seed=4)
        pool = list(model.cluster_model.targets)
        np.testing.assert_allclose(
            model.cluster_model.centroids[0],
            ndv_matrix(g, model.cluster_model.members(0), w.history).mean(axis=0),
            atol=1e-12,
        )
        assert len(pool) == 200

    def test_one_matrix_per_nonempty_cluster(self, planted):
        g, _, _, w = planted
        model = train(g, w, 4, seed=9)
        assert sorted(model.matrices) == model.cluster_model.nonempty_clusters()

    def test_deterministic(self, planted):
        g, _, _, w = planted
        a, b = train(g, w, 3, seed=7), train(g, w, 3, seed=7)
        assert a.cluster_model.assignments == b.cluster_model.assignments
        for c in a.matrices:
            np.testing.assert_array_equal(a.matrix_for(c), b.matrix_for(c))


class TestHoldoutAndLeaveOneOut:
    def test_unseen_target_uses_nearest_centroid(self, planted):
        g, _, _, w = planted
        train_ids = g.targets[:150]
        model = train(g, w, 3, seed=2, targets=train_ids)
        for t in g.targets[150:160]:
            assert model.cluster_for(g, t) == model.cluster_model.nearest(ndv_for(g, t, w.observed))

    def test_leave_one_out_refits_without_target(self, planted):
        g, _, _, w = planted
        model = train(g, w, 1)
        t = g.targets[3]
        pool = [u for u in model.cluster_model.targets if u != t]
        refit = train(g, w, 1, targets=pool)
        np.testing.assert_allclose(predict_raw(model, g, t, leave_one_out=True), predict_raw(refit, g, t), atol=1e-12)
        assert not np.array_equal(predict_raw(model, g, t, leave_one_out=True), predict_raw(model, g, t))


class TestSerialization:
    def test_round_trip_is_bit_exact(self, planted, tmp_path):
        g, _, _, w = planted
        model = train(g, w, 3, seed=1)
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.catalog == model.catalog and back.windows == model.windows
        assert back.cluster_model.assignments == model.cluster_model.assignments
        np.testing.assert_array_equal(back.cluster_model.centroids, model.cluster_model.centroids)
        for c in model.matrices:
            np.testing.assert_array_equal(back.matrix_for(c), model.matrix_for(c))
        for t in g.targets[:20]:
            np.testing.assert_array_equal(predict(back, g, t), predict(model, g, t))
        assert model_to_dict(back) == model_to_dict(model)

    def test_rejects_unknown_format(self):
        with pytest.raises(ValueError):
            model_from_dict({"format": "something-else"})


@pytest.fixture(scope="module")
def drifting():
    # history spans two steps so the backshifted split still has data
    w = RunWindows(TimeWindow(0, 200), TimeWindow(200, 300), TimeWindow(300, 400))
    mats = [cyclic_drift_matrix(6, 0.6, shift=s + 1) for s in range(4)]
    g, _ = generate(SynthSpec(
        n=6, num_targets=240, windows=w, num_clusters=4, matrices=mats,
        events_per_window=(400, 200, 200), base_concentration=8.0, step_length=100, seed=3,
    ))
    return g, w


class TestSelectK:
    def test_backshift(self, windows3):
        b = backshifted_windows(windows3)
        assert (b.history.start, b.current.start, b.future.start, b.future.end) == (-100, 0, 100, 200)

    def test_single_candidate(self, drifting):
        g, w = drifting
        sel = select_k(g, w, [3], sample_size=50, seed=0)
        assert sel.best_k == 3 and list(sel.scores) == [3]

    def test_planted_clusters_beat_one(self, drifting):
        g, w = drifting
        sel = select_k(g, w, [1, 4], sample_size=100, seed=0)
        assert sel.scores[sel.best_k] >= sel.scores[1]
        assert sel.scores[4] > sel.scores[1]

    def test_sample_is_seeded(self, drifting):
        g, w = drifting
        a = select_k(g, w, [1], sample_size=30, seed=5)
        b = select_k(g, w, [1], sample_size=30, seed=5)
        assert a.sample == b.sample and a.scores == b.scores

    def test_errors(self, drifting):
        g, w = drifting
        with pytest.raises(ValueError):
            select_k(g, w, [], sample_size=10)
        with pytest.raises(ValueError):
            select_k(g, w, [1], sample_size=10_000)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
def test_identity_prediction_property(weights):
    # any observed NDV passes through an identity matrix unchanged
    w = RunWindows(TimeWindow(0, 10), TimeWindow(10, 20), TimeWindow(20, 30))
    counts = [int(round(x * 20)) for x in weights]
    g = graph_from_counts({"a": [counts, [1, 1, 1], [0, 0, 0]], "b": [[1, 2, 3], [3, 2, 1], [0, 0, 0]]}, 3, w)
    model = with_matrix(train(g, w, 1), np.eye(3))
    np.testing.assert_allclose(predict(model, g, "a"), ndv_for(g, "a", w.observed), atol=1e-15)
