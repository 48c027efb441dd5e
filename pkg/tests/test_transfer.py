import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flda.data import Dataset
from flda.errors import DataError, ModelError
from flda.synthetic import bernoulli_spec, generate_pair
from flda.transfer import (
    DropoutTransfer,
    SourceModel,
    estimate_dropout,
    estimate_source_model,
    fit_transfer,
    load_transfer_table,
    marginal_nonzero_probability,
    sample_transfer,
    save_transfer_table,
    target_marginal_loglik,
    transfer_moments,
)


def _target_with_freq(zeta, n=4):
    """Dataset whose per-feature non-zero fractions are exactly ``zeta``."""
    X = np.zeros((n, len(zeta)))
    for d, z in enumerate(zeta):
        X[: int(round(z * n)), d] = 1.0
    return Dataset(X)


class TestSourceModel:
    def test_direct_count(self):
        sm = estimate_source_model(Dataset(np.array([[1.0, 0], [1, 1]])))
        np.testing.assert_array_equal(sm.eta, [1.0, 0.5])

    def test_all_zero_feature(self):
        assert estimate_source_model(Dataset(np.zeros((3, 1)))).eta[0] == 0

    def test_empty(self):
        with pytest.raises(DataError):
            estimate_source_model(Dataset(np.zeros((0, 2))))

    def test_bernoulli_population(self):
        pair = generate_pair(bernoulli_spec(validation_n=10))
        np.testing.assert_allclose(estimate_source_model(pair.source).eta, 0.5, atol=0.01)


class TestEstimateDropout:
    def test_half_dropout_on_first_feature(self):
        t = estimate_dropout(SourceModel(np.array([0.5, 0.5])), _target_with_freq([0.25, 0.5]))
        np.testing.assert_allclose(t.theta, [0.5, 0.0])

    def test_no_transfer(self):
        t = estimate_dropout(SourceModel(np.array([0.5, 0.75])), _target_with_freq([0.5, 0.75]))
        np.testing.assert_array_equal(t.theta, 0.0)

    def test_clamped_when_target_denser(self):
        t = estimate_dropout(SourceModel(np.array([0.3])), _target_with_freq([0.4], n=10))
        assert t.theta[0] == 0.0

    def test_unseen_source_feature(self):
        t = estimate_dropout(SourceModel(np.array([0.0])), _target_with_freq([0.5]))
        assert t.theta[0] == 0.0

    def test_clamped_below_one(self):
        t = estimate_dropout(SourceModel(np.array([0.5])), _target_with_freq([0.0]))
        assert t.theta[0] == 1 - t.epsilon
        assert np.isfinite(t.variance_factor).all()

    def test_errors(self):
        with pytest.raises(DataError):
            estimate_dropout(SourceModel(np.array([0.5])), _target_with_freq([0.5, 0.5]))
        with pytest.raises(DataError):
            estimate_dropout(SourceModel(np.array([0.5])), Dataset(np.zeros((0, 1))))


class TestDropoutTransfer:
    def test_validation(self):
        with pytest.raises(DataError):
            DropoutTransfer(np.array([1.0]))
        with pytest.raises(DataError):
            DropoutTransfer(np.array([-0.1]))

    def test_perturbed(self):
        t = DropoutTransfer(np.array([0.5, 0.0])).perturbed(0, 0.2)
        np.testing.assert_allclose(t.theta, [0.7, 0.0])
        with pytest.raises(DataError):
            t.perturbed(0, 0.3)

    def test_table_roundtrip(self, tmp_path):
        t = DropoutTransfer(np.array([0.1234567890123, 0.0, 0.5]))
        save_transfer_table(t, tmp_path / "t.tsv", ["a", "b", "c"])
        back, names = load_transfer_table(tmp_path / "t.tsv")
        np.testing.assert_array_equal(back.theta, t.theta)
        assert names == ["a", "b", "c"]


class TestMarginalLikelihood:
    def test_single_sample(self):
        ll = target_marginal_loglik(
            DropoutTransfer(np.array([0.5])), SourceModel(np.array([0.5])), Dataset(np.array([[3.0]]))
        )
        assert ll == pytest.approx(math.log(0.25), abs=1e-15)

    def test_no_dropout_is_bernoulli_loglik(self, rng):
        eta = np.array([0.3, 0.8])
        Z = (rng.random((50, 2)) < 0.5).astype(float)
        k = Z.sum(axis=0)
        expected = np.sum(k * np.log(eta) + (50 - k) * np.log(1 - eta))
        ll = target_marginal_loglik(DropoutTransfer.none(2), SourceModel(eta), Dataset(Z))
        assert ll == pytest.approx(expected, rel=1e-14)

    def test_impossible_observation(self):
        with pytest.raises(ModelError, match="impossible"):
            target_marginal_loglik(
                DropoutTransfer.none(1), SourceModel(np.array([0.0])), Dataset(np.array([[1.0]]))
            )

    def test_outcome_probabilities_sum_to_one(self, rng):
        for _ in range(100):
            t = DropoutTransfer(rng.uniform(0, 0.99, 3))
            p = marginal_nonzero_probability(t, SourceModel(rng.uniform(0, 1, 3)))
            assert np.all(p + (1.0 - p) == 1.0)

    def test_closed_form_is_grid_maximum(self):
        eta = SourceModel(np.array([0.6]))
        target = _target_with_freq([0.21], n=100)
        best = estimate_dropout(eta, target).theta[0]
        grid = np.linspace(0, 0.99, 100)
        ll = [target_marginal_loglik(DropoutTransfer(np.array([g])), eta, target) for g in grid]
        assert abs(grid[int(np.argmax(ll))] - best) <= grid[1] - grid[0]


class TestMoments:
    def test_hand_case(self):
        mo = transfer_moments(np.array([2.0, 3.0]), DropoutTransfer(np.array([0.5, 0.0])))
        np.testing.assert_array_equal(mo.mean, [2, 3])
        np.testing.assert_array_equal(mo.var_diag, [4, 0])

    def test_zero_theta_and_zero_x(self):
        assert not transfer_moments(np.array([1.0, 2]), DropoutTransfer.none(2)).var_diag.any()
        mo = transfer_moments(np.zeros(2), DropoutTransfer(np.array([0.4, 0.9])))
        assert not mo.var_diag.any()

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-50, 50), min_size=1, max_size=3),
        st.lists(st.floats(0, 0.95), min_size=3, max_size=3),
    )
    def test_matches_enumeration(self, x, theta):
        x = np.array(x)
        t = DropoutTransfer(np.array(theta[: x.size]))
        mean = np.zeros(x.size)
        second = np.zeros(x.size)
        for keep in itertools.product([0, 1], repeat=x.size):
            keep = np.array(keep)
            prob = np.prod(np.where(keep == 1, 1 - t.theta, t.theta))
            z = np.where(keep == 1, x / (1 - t.theta), 0.0)
            mean += prob * z
            second += prob * z * z
        mo = transfer_moments(x, t)
        np.testing.assert_allclose(mo.mean, mean, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(mo.var_diag, second - mean**2, rtol=1e-9, atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            transfer_moments(np.zeros(3), DropoutTransfer.none(2))


class TestSampleTransfer:
    def test_identity(self, rng):
        x = rng.normal(size=(5, 3))
        np.testing.assert_array_equal(sample_transfer(x, DropoutTransfer.none(3), rng), x)

    def test_unbiased(self):
        rng = np.random.default_rng(0)
        z = sample_transfer(np.full((10**6, 1), 2.0), DropoutTransfer(np.array([0.5])), rng)
        assert 1.99 <= z.mean() <= 2.01

    def test_zero_stays_zero(self, rng):
        z = sample_transfer(np.zeros((100, 2)), DropoutTransfer(np.array([0.3, 0.8])), rng)
        assert not z.any()

    def test_fit_transfer_recovers_rate(self):
        pair = generate_pair(bernoulli_spec(validation_n=10))
        _, t = fit_transfer(pair.source, pair.target)
        np.testing.assert_allclose(t.theta, [0.5, 0.0], atol=0.01)
