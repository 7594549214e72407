import numpy as np
import pytest

from multitgdr.config import TABLE1_DELTA_V, TABLE1_MAX_STEPS
from multitgdr.controllers.simulation import (
    CONSISTENT,
    INCONSISTENT,
    INFORMATIVE,
    bayes_error_pct,
    example2_covariance,
    format_summary,
    generate_example1,
    generate_example2,
    generate_meta_studies,
    meta_check,
    replicate_table1,
    simulation_probabilities,
    summary_frame,
)
from multitgdr.models import CorrelationMode, SimDesign, TgdrConfig


class TestProbabilities:
    def test_at_zero(self):
        weights = np.array([1.0, np.exp(0.5), np.exp(-1.5)])
        np.testing.assert_allclose(simulation_probabilities(np.zeros((1, 8)))[0], weights / weights.sum())

    def test_only_four_features_matter(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((5, 10))
        y = x.copy()
        y[:, 4:] = rng.standard_normal((5, 6))
        np.testing.assert_array_equal(simulation_probabilities(x), simulation_probabilities(y))


class TestExample1:
    def test_shapes_and_names(self):
        train, test = generate_example1(SimDesign(n_train=50, n_test=70, d=12, seed=1))
        assert train.features.shape == (50, 12)
        assert test.features.shape == (70, 12)
        assert train.feature_names[:4] == list(INFORMATIVE)
        assert train.class_names == ["1", "2", "3"]

    def test_deterministic(self):
        design = SimDesign(n_train=30, n_test=30, d=10, seed=8)
        a, _ = generate_example1(design)
        b, _ = generate_example1(design)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_train_and_test_differ(self):
        train, test = generate_example1(SimDesign(n_train=30, n_test=30, d=10, seed=8))
        assert not np.array_equal(train.features, test.features)

    def test_feature_moments(self):
        train, _ = generate_example1(SimDesign(n_train=10000, n_test=1, d=8, seed=2))
        np.testing.assert_allclose(train.features.mean(axis=0), 0.0, atol=0.05)
        np.testing.assert_allclose(train.features.std(axis=0), 1.0, atol=0.05)

    def test_label_marginals(self):
        train, _ = generate_example1(SimDesign(n_train=10000, n_test=1, d=8, seed=3))
        expected = simulation_probabilities(train.features).mean(axis=0)
        observed = np.bincount(train.labels - 1, minlength=3) / train.n_samples
        np.testing.assert_allclose(observed, expected, atol=0.02)

    def test_wrong_mode(self):
        with pytest.raises(ValueError):
            generate_example1(SimDesign(correlation_mode=CorrelationMode.EXAMPLE2))


class TestExample2:
    def test_covariance(self):
        covariance = example2_covariance(10)
        assert covariance[0, 4] == 0.8
        assert covariance[1, 5] == -0.8
        assert np.linalg.eigvalsh(covariance).min() > 0

    def test_pair_correlations(self):
        train, _ = generate_example2(
            SimDesign(n_train=5000, n_test=1, d=10, seed=4, correlation_mode=CorrelationMode.EXAMPLE2)
        )
        correlation = np.corrcoef(train.features, rowvar=False)
        assert correlation[0, 4] == pytest.approx(0.8, abs=0.03)
        assert correlation[2, 6] == pytest.approx(0.8, abs=0.03)
        assert correlation[1, 5] == pytest.approx(-0.8, abs=0.03)
        assert correlation[3, 7] == pytest.approx(-0.8, abs=0.03)
        assert abs(correlation[0, 1]) < 0.05
        np.testing.assert_allclose(train.features.std(axis=0), 1.0, atol=0.05)

    def test_wrong_mode(self):
        with pytest.raises(ValueError):
            generate_example2(SimDesign())


class TestMetaStudies:
    def test_layout(self):
        data = generate_meta_studies(n_per_study=40, d=10, n_studies=3, seed=1)
        assert data.study_count == 3
        assert data.study_names == ["study1", "study2", "study3"]
        assert np.bincount(data.study_ids)[1:].tolist() == [40, 40, 40]

    def test_needs_six_features(self):
        with pytest.raises(ValueError):
            generate_meta_studies(d=5)


class TestReplication:
    def test_small_run(self):
        design = SimDesign(n_train=60, n_test=60, d=10, seed=5)
        summary = replicate_table1(
            2,
            design,
            TgdrConfig(max_steps=20),
            cutoffs=(0.4, 0.8),
            tau_grid=(0.5, 1.0),
            folds=3,
            n_bootstrap=4,
            stride=10,
        )
        assert [row.method for row in summary.rows] == [
            "multi-TGDR without bagging",
            "multi-TGDR BF>40%",
            "multi-TGDR BF>80%",
        ]
        assert summary.excluded == []
        for replicate in summary.replicates:
            assert replicate.tau in (0.5, 1.0)
            assert replicate.k in (0, 10, 20)
            assert set(replicate.cutoff_errors) == {"0.4", "0.8"}
        raw = summary.rows[0]
        assert 0.0 <= raw.selection_pct["X1"] <= 100.0
        assert 0.0 <= raw.average_error_pct <= 100.0

        frame = summary_frame(summary)
        assert frame.shape[0] == 3
        assert "pct_selected_X1" in frame.columns
        text = format_summary(summary)
        assert "---" in text
        assert "2 data sets" in text

    def test_reproducible_across_jobs(self):
        design = SimDesign(n_train=40, n_test=40, d=8, seed=6)
        kwargs = dict(cutoffs=(0.5,), tau_grid=(0.8,), folds=2, n_bootstrap=3, stride=5)
        serial = replicate_table1(2, design, TgdrConfig(max_steps=10), n_jobs=1, **kwargs)
        parallel = replicate_table1(2, design, TgdrConfig(max_steps=10), n_jobs=2, **kwargs)
        assert serial.replicates == parallel.replicates


    def test_summary_carries_the_bayes_error(self):
        design = SimDesign(n_train=30, n_test=30, d=8, seed=2)
        summary = replicate_table1(
            1, design, TgdrConfig(max_steps=5), cutoffs=(0.5,), tau_grid=(1.0,), folds=2, n_bootstrap=2, stride=5
        )
        assert summary.bayes_error_pct == bayes_error_pct(seed=2)
        assert "Bayes error" in format_summary(summary)


def test_bayes_error():
    assert 24.5 < bayes_error_pct(n=200_000) < 27.0
    assert bayes_error_pct(n=1000, seed=3) == bayes_error_pct(n=1000, seed=3)


class TestMetaCheck:
    def test_small_run(self):
        result = meta_check(1, n_per_study=40, d=30, max_steps=100, folds=3, stride=10)
        assert result.seed == 1
        assert result.meta_tau in (0.9, 1.0)
        assert result.meta_k in range(0, 101, 10)
        assert set(result.consistent_selected) <= set(CONSISTENT)
        assert set(result.inconsistent_selected) <= set(INCONSISTENT)
        assert set(result.consistent_selected) | set(result.inconsistent_selected) <= set(result.selected)
        assert result.margin_pct == pytest.approx(result.no_information_pct - result.multi_error_pct)
        assert 0.0 <= result.pooled_error_pct <= 100.0

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_inconsistent_features_are_left_out(self, seed):
        result = meta_check(seed, n_jobs=4)
        assert result.inconsistent_selected == []
        assert set(result.consistent_selected) == set(CONSISTENT)
        assert result.margin_pct >= 30.0


@pytest.mark.slow
class TestReplicationAcceptance:
    """Fifty simulated data sets per design, 100 bootstrap members each."""

    @pytest.fixture(scope="class")
    def config(self):
        return TgdrConfig(delta_v=TABLE1_DELTA_V, max_steps=TABLE1_MAX_STEPS)

    @pytest.fixture(scope="class")
    def example1(self, config):
        design = SimDesign(n_train=100, n_test=200, d=100, seed=0)
        return replicate_table1(50, design, config, n_bootstrap=100, n_jobs=4)

    @pytest.fixture(scope="class")
    def example2(self, config):
        design = SimDesign(
            n_train=100, n_test=200, d=100, seed=0, correlation_mode=CorrelationMode.EXAMPLE2
        )
        return replicate_table1(50, design, config, n_bootstrap=100, n_jobs=4)

    @staticmethod
    def assert_error_near_bayes(summary, row):
        # the generator itself misclassifies about a quarter of the samples
        assert summary.bayes_error_pct - 3.0 <= row.average_error_pct <= summary.bayes_error_pct + 10.0

    def test_example1_selects_the_informative_features(self, example1):
        raw = example1.rows[0]
        for feature in ("X1", "X2", "X3"):
            assert raw.selection_pct[feature] >= 95.0
        assert raw.selection_pct["X4"] >= 90.0
        assert 15.0 <= raw.average_size <= 45.0
        self.assert_error_near_bayes(example1, raw)

    def test_example1_bagging_rows(self, example1):
        raw, bf40, bf80 = example1.rows
        assert 12.0 <= bf40.average_size <= 32.0
        assert abs(bf40.average_error_pct - raw.average_error_pct) <= 3.0
        assert 3.0 <= bf80.average_size <= 10.0
        assert bf80.average_error_pct <= raw.average_error_pct + 2.0

    def test_example2(self, example2):
        raw = example2.rows[0]
        for feature in INFORMATIVE:
            assert raw.selection_pct[feature] >= 90.0
        assert 16.0 <= raw.average_size <= 48.0
        self.assert_error_near_bayes(example2, raw)
