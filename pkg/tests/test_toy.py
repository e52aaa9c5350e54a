import numpy as np
import pytest
from scipy import stats as sps

from abcgof.toy import ToyModelSpec, draw_prior, sample_moments, simulate


def test_spec_validation():
    with pytest.raises(ValueError, match="family"):
        ToyModelSpec(family="cauchy")
    with pytest.raises(ValueError, match="sample_size"):
        ToyModelSpec(family="gaussian", sample_size=3)


def test_prior_location_is_uniform_on_pm10():
    rng = np.random.default_rng(12)
    draws = np.array([draw_prior(ToyModelSpec("gaussian"), rng) for _ in range(100_000)])
    locations = draws[:, 0]
    assert locations.mean() == pytest.approx(0.0, abs=0.05)
    assert locations.min() > -10 and locations.max() < 10
    assert abs(locations.min() + 10) < 0.01 and abs(locations.max() - 10) < 0.01


def test_prior_variance_is_reciprocal_chi_square_3():
    rng = np.random.default_rng(13)
    draws = np.array([draw_prior(ToyModelSpec("gaussian"), rng) for _ in range(100_000)])
    variances = draws[:, 1]
    want_median = 1.0 / sps.chi2.median(3)  # ~= 0.4226
    assert np.median(variances) == pytest.approx(want_median, rel=0.02)
    assert np.all(variances > 0)


def test_prior_deterministic_per_seed():
    a = draw_prior(ToyModelSpec("laplace"), np.random.default_rng(7))
    b = draw_prior(ToyModelSpec("laplace"), np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_moments_of_symmetric_three_point_sample():
    mean, variance, skewness, kurtosis = sample_moments([1.0, 2.0, 3.0])
    assert mean == 2.0
    assert variance == pytest.approx(1.0)
    assert skewness == pytest.approx(0.0, abs=1e-12)
    assert kurtosis == pytest.approx(1.5)


def test_gaussian_kurtosis_converges_to_three():
    spec = ToyModelSpec("gaussian", sample_size=1_000_000)
    stats = simulate(spec, [0.0, 1.0], np.random.default_rng(1))
    assert stats[3] == pytest.approx(3.0, abs=0.05)


def test_laplace_kurtosis_converges_to_six():
    spec = ToyModelSpec("laplace", sample_size=1_000_000)
    stats = simulate(spec, [0.0, 1.0], np.random.default_rng(2))
    assert stats[3] == pytest.approx(6.0, abs=0.1)


def test_laplace_scale_calibration_matches_requested_variance():
    spec = ToyModelSpec("laplace", sample_size=1_000_000)
    for variance in (0.25, 1.0, 4.0):
        stats = simulate(spec, [0.0, variance], np.random.default_rng(3))
        assert stats[1] == pytest.approx(variance, rel=0.01)


@pytest.mark.parametrize("family", ["gaussian", "laplace"])
def test_location_shift_moves_only_the_mean(family):
    spec = ToyModelSpec(family, sample_size=200)
    shift = 3.7
    base = simulate(spec, [0.0, 2.0], np.random.default_rng(8))
    moved = simulate(spec, [shift, 2.0], np.random.default_rng(8))
    assert moved[0] - base[0] == pytest.approx(shift, abs=1e-9)
    assert moved[1:] == pytest.approx(base[1:], rel=1e-9, abs=1e-9)


def test_skewness_and_kurtosis_are_scale_invariant():
    rng = np.random.default_rng(9)
    sample = rng.standard_normal(500)
    base = sample_moments(sample)
    scaled = sample_moments(3.25 * sample)
    assert scaled[2] == pytest.approx(base[2], abs=1e-12)
    assert scaled[3] == pytest.approx(base[3], abs=1e-12)


def test_nonpositive_variance_rejected():
    spec = ToyModelSpec("gaussian")
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError, match="variance"):
            simulate(spec, [0.0, bad], np.random.default_rng(0))


def test_simulate_deterministic_per_seed():
    spec = ToyModelSpec("laplace", sample_size=50)
    a = simulate(spec, [1.0, 0.5], np.random.default_rng(77))
    b = simulate(spec, [1.0, 0.5], np.random.default_rng(77))
    assert np.array_equal(a, b)
