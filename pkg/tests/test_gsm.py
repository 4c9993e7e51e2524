"""Observation model: exact noise-free paths, stream statistics, signal constructions."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gsmgof import (
    InfeasibleConstructionError,
    InfeasibleRadiusError,
    InvalidLevelsError,
    NoiseLevels,
    Observations,
    RegimeSpec,
    Signal,
    OPERATOR_STREAM,
    QUADFORM_STREAM,
    SIGNAL_STREAM,
    a_value,
    b_value,
    b_vector,
    default_j_max,
    divergence_budget,
    ellipsoid_weighted_norm,
    gaussian_draws,
    make_spike_alternative,
    make_two_point_pair,
    simulate,
    spike_index,
    two_point_shift_constant,
    window_mass,
)


class TestSignal:
    def test_padded_extends_with_zeros(self):
        sig = Signal(np.array([1.0, 2.0]))
        assert_allclose(sig.padded(4), [1.0, 2.0, 0.0, 0.0], rtol=0)

    def test_padded_rejects_shrinking(self):
        with pytest.raises(ValueError):
            Signal(np.ones(3)).padded(2)

    def test_padded_returns_writable_copy(self):
        sig = Signal(np.array([1.0]))
        out = sig.padded(3)
        out[0] = 5.0
        assert sig.coefficients[0] == 1.0

    def test_coefficients_read_only(self):
        sig = Signal(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            sig.coefficients[0] = 9.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Signal(np.ones((2, 2)))
        with pytest.raises(ValueError):
            Signal(np.array([1.0, np.nan]))
        assert len(Signal.zeros(7)) == 7
        assert len(Signal.zeros()) == 0


class TestNoiseLevels:
    def test_accepts_zero(self):
        noise = NoiseLevels(epsilon=0.0, sigma=0.0)
        assert noise.epsilon == 0.0 and noise.sigma == 0.0

    @pytest.mark.parametrize("bad", [-0.1, float("nan"), float("inf")])
    def test_rejects_bad_values(self, bad):
        with pytest.raises(ValueError):
            NoiseLevels(epsilon=bad, sigma=0.1)
        with pytest.raises(ValueError):
            NoiseLevels(epsilon=0.1, sigma=bad)


class TestObservations:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Observations(y=np.zeros(3), x=np.zeros(2))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Observations(y=np.array([np.inf]), x=np.array([1.0]))


class TestDefaultHorizon:
    def test_by_decay_family(self, mild_ordinary, severe_super):
        assert default_j_max(mild_ordinary) == 10_000
        assert default_j_max(severe_super) == 200


class TestGaussianDraws:
    def test_deterministic(self):
        a = gaussian_draws(42, 3, SIGNAL_STREAM, 16)
        b = gaussian_draws(42, 3, SIGNAL_STREAM, 16)
        assert np.array_equal(a, b)

    def test_streams_and_reps_differ(self):
        base = gaussian_draws(42, 3, SIGNAL_STREAM, 16)
        assert not np.array_equal(base, gaussian_draws(42, 3, OPERATOR_STREAM, 16))
        assert not np.array_equal(base, gaussian_draws(42, 4, SIGNAL_STREAM, 16))
        assert not np.array_equal(base, gaussian_draws(43, 3, SIGNAL_STREAM, 16))

    def test_all_finite(self):
        draws = gaussian_draws(0, 0, QUADFORM_STREAM, 10_000)
        assert np.all(np.isfinite(draws))


class TestSimulateNoiseFree:
    def test_exact_transform(self, mild_ordinary):
        theta = Signal(np.array([2.0, -1.0, 0.5]))
        obs = simulate(theta, mild_ordinary, NoiseLevels(0.0, 0.0), seed=0, j_max=6)
        b = b_vector(mild_ordinary, 6)
        assert np.array_equal(obs.y, b * theta.padded(6))
        assert np.array_equal(obs.x, b)

    def test_first_basis_vector(self, mild_ordinary):
        obs = simulate(Signal(np.array([1.0])), mild_ordinary, NoiseLevels(0.0, 0.0),
                       seed=0, j_max=5)
        assert_allclose(obs.y, [1.0, 0.0, 0.0, 0.0, 0.0], rtol=0)
        assert_allclose(obs.x, [1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5], rtol=1e-15)

    def test_zero_sigma_x_is_writable_copy(self, mild_ordinary):
        obs = simulate(Signal.zeros(1), mild_ordinary, NoiseLevels(0.0, 0.0), seed=0, j_max=4)
        obs.x[0] = 99.0  # must not corrupt the cached singular values
        assert b_vector(mild_ordinary, 4)[0] == 1.0

    def test_horizon_validation(self, mild_ordinary):
        with pytest.raises(ValueError):
            simulate(Signal.zeros(5), mild_ordinary, NoiseLevels(0.0, 0.0), seed=0, j_max=3)
        with pytest.raises(ValueError):
            simulate(Signal.zeros(0), mild_ordinary, NoiseLevels(0.0, 0.0), seed=0, j_max=0)


class TestSimulateNoisy:
    def test_reproducible(self, mild_ordinary):
        noise = NoiseLevels(0.5, 0.25)
        a = simulate(Signal.zeros(1), mild_ordinary, noise, seed=9, j_max=20, rep=7)
        b = simulate(Signal.zeros(1), mild_ordinary, noise, seed=9, j_max=20, rep=7)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.x, b.x)

    def test_signal_channel_ignores_sigma(self, mild_ordinary):
        """y is driven by its own stream, so changing sigma cannot touch it."""
        a = simulate(Signal.zeros(1), mild_ordinary, NoiseLevels(1.0, 0.0), seed=9, j_max=20)
        b = simulate(Signal.zeros(1), mild_ordinary, NoiseLevels(1.0, 0.5), seed=9, j_max=20)
        assert np.array_equal(a.y, b.y)
        assert not np.array_equal(a.x, b.x)

    def test_noise_enters_additively(self, mild_ordinary):
        noise = NoiseLevels(0.25, 0.125)
        obs = simulate(Signal(np.array([1.0, 1.0])), mild_ordinary, noise, seed=3,
                       j_max=8, rep=2)
        b = b_vector(mild_ordinary, 8)
        xi = gaussian_draws(3, 2, SIGNAL_STREAM, 8)
        eta = gaussian_draws(3, 2, OPERATOR_STREAM, 8)
        theta = np.zeros(8)
        theta[:2] = 1.0
        assert np.array_equal(obs.y, b * theta + 0.25 * xi)
        assert np.array_equal(obs.x, b + 0.125 * eta)


@pytest.fixture(scope="module")
def stream_sample(request):
    """10^5 replications of the pure-noise model at unit noise levels.

    Under theta = 0, epsilon = sigma = 1 the observations are y = xi and
    x = b + eta, which exposes both raw Gaussian streams for every
    replication.
    """
    spec = RegimeSpec.from_name("mild-ordinary")
    noise = NoiseLevels(1.0, 1.0)
    n = 100_000
    cols = [0, 4, 9]
    b = b_vector(spec, 10)
    xi = np.empty((n, len(cols)))
    eta = np.empty((n, len(cols)))
    for rep in range(n):
        obs = simulate(Signal.zeros(0), spec, noise, seed=20_240, j_max=10, rep=rep)
        xi[rep] = obs.y[cols]
        eta[rep] = (obs.x - b)[cols]
    return xi, eta


class TestStreamStatistics:
    def test_signal_mean_near_zero(self, stream_sample):
        xi, _ = stream_sample
        n = xi.shape[0]
        assert abs(xi[:, 0].mean()) <= 4.0 / math.sqrt(n)

    def test_unit_variance_both_channels(self, stream_sample):
        xi, eta = stream_sample
        n = xi.shape[0]
        for col in range(xi.shape[1]):
            assert abs(xi[:, col].std() - 1.0) <= 4.0 / math.sqrt(n)
            assert abs(eta[:, col].std() - 1.0) <= 4.0 / math.sqrt(n)

    def test_channels_uncorrelated(self, stream_sample):
        xi, eta = stream_sample
        n = xi.shape[0]
        for col in range(xi.shape[1]):
            corr = np.corrcoef(xi[:, col], eta[:, col])[0, 1]
            assert abs(corr) <= 4.0 / math.sqrt(n)


class TestDivergenceBudget:
    def test_pinned_value(self):
        assert_allclose(divergence_budget(0.05, 0.05), 1.4445632692438661, rtol=1e-15)

    def test_formula(self):
        gap = 1.0 - 0.1 - 0.3
        assert_allclose(divergence_budget(0.1, 0.3), math.log1p(4 * gap * gap), rtol=0)

    @pytest.mark.parametrize("alpha, beta", [(0.5, 0.5), (0.6, 0.5), (0.0, 0.1), (0.1, 1.0)])
    def test_rejects_incompatible_levels(self, alpha, beta):
        with pytest.raises(InvalidLevelsError):
            divergence_budget(alpha, beta)


class TestWindowMass:
    def test_limits(self):
        assert window_mass(0.0) == 0.0
        assert_allclose(window_mass(50.0), 1.0, rtol=1e-12)

    def test_strictly_increasing(self):
        u = np.linspace(0.0, 6.0, 40)
        vals = [window_mass(float(x)) for x in u]
        assert np.all(np.diff(vals) > 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            window_mass(-1.0)
        with pytest.raises(ValueError):
            window_mass(1.0, c0=1.5, c1=2.0)
        with pytest.raises(ValueError):
            window_mass(1.0, c0=0.5, c1=0.9)


class TestTwoPointPair:
    def test_zero_sigma_collapses(self, mild_ordinary):
        theta0, theta = make_two_point_pair(
            mild_ordinary, NoiseLevels(0.0, 0.0), 0.05, 0.05, d=3
        )
        assert np.array_equal(theta0.coefficients, theta.coefficients)

    def test_pinned_first_coordinate_pair(self, mild_ordinary):
        noise = NoiseLevels(0.0, 0.01)
        theta0, theta = make_two_point_pair(mild_ordinary, noise, 0.05, 0.05, d=1)
        assert_allclose(theta.coefficients, [0.5], rtol=0)
        sep = theta0.coefficients[0] - theta.coefficients[0]
        assert_allclose(sep, 0.007222816346219331, rtol=1e-12)

    def test_separation_identity(self, severe_ordinary):
        """Distance equals (shift/2) * sigma / (a_d * b_d) by construction."""
        noise = NoiseLevels(0.0, 1e-4)
        d = 4
        theta0, theta = make_two_point_pair(severe_ordinary, noise, 0.03, 0.07, d=d)
        shift = two_point_shift_constant(severe_ordinary, noise.sigma, 0.03, 0.07, d)
        expected = (shift / 2.0) * noise.sigma / (a_value(severe_ordinary, d)
                                                  * b_value(severe_ordinary, d))
        got = np.linalg.norm(theta0.coefficients - theta.coefficients)
        assert_allclose(got, expected, rtol=1e-12)

    def test_both_signals_in_class(self, mild_ordinary):
        noise = NoiseLevels(0.0, 0.01)
        theta0, theta = make_two_point_pair(mild_ordinary, noise, 0.05, 0.05, d=2)
        assert ellipsoid_weighted_norm(mild_ordinary, theta0.coefficients) <= 1.0
        assert ellipsoid_weighted_norm(mild_ordinary, theta.coefficients) <= 1.0
        diff = theta0.coefficients - theta.coefficients
        assert ellipsoid_weighted_norm(mild_ordinary, diff) <= 1.0

    def test_oversized_shift_rejected(self, mild_ordinary):
        # shift * sigma / b_5 comfortably exceeds 1 here
        with pytest.raises(InfeasibleConstructionError):
            make_two_point_pair(mild_ordinary, NoiseLevels(0.0, 0.9), 0.05, 0.05, d=5)

    def test_vanishing_window_mass_rejected(self, severe_ordinary):
        # b_20 ~ 2e-9 while sigma = 0.5: the coefficient window has almost no
        # mass left, the log discount swamps the budget
        with pytest.raises(InfeasibleConstructionError):
            make_two_point_pair(severe_ordinary, NoiseLevels(0.0, 0.5), 0.05, 0.05, d=20)

    def test_d_validation(self, mild_ordinary):
        with pytest.raises(ValueError):
            make_two_point_pair(mild_ordinary, NoiseLevels(0.0, 0.01), 0.05, 0.05, d=0)


class TestSpike:
    def test_index_ordinary(self, mild_ordinary):
        # largest d with d * 0.25 <= 1
        assert spike_index(mild_ordinary, 0.25, j_max=100) == 4

    def test_index_super(self, mild_super):
        # e * 0.25 <= 1 but e^2 * 0.25 > 1
        assert spike_index(mild_super, 0.25, j_max=100) == 1

    def test_index_certificate(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            s = float(rng.uniform(0.3, 2.5))
            growth = "ordinary" if rng.random() < 0.5 else "super"
            spec = RegimeSpec.from_name(f"mild-{growth}", s=s)
            r = float(10.0 ** rng.uniform(-4, 0))
            if a_value(spec, 1) * r > 1.0:
                continue
            d = spike_index(spec, r, j_max=500)
            assert a_value(spec, d) * r <= 1.0
            if d < 500:
                assert a_value(spec, d + 1) * r > 1.0

    def test_index_capped_by_horizon(self, mild_ordinary):
        assert spike_index(mild_ordinary, 1e-6, j_max=50) == 50

    def test_infeasible_radius(self, mild_ordinary):
        with pytest.raises(InfeasibleRadiusError):
            spike_index(mild_ordinary, 2.0, j_max=100)
        with pytest.raises(ValueError):
            spike_index(mild_ordinary, 0.0, j_max=100)

    def test_alternative_norm_and_membership(self, mild_ordinary):
        theta0 = Signal(np.array([0.1, 0.05]))
        r = 0.125
        theta = make_spike_alternative(mild_ordinary, theta0, r, j_max=100)
        diff = theta.padded(len(theta)) - theta0.padded(len(theta))
        assert np.count_nonzero(diff) == 1
        assert np.linalg.norm(diff) == r  # single coordinate: exact
        assert ellipsoid_weighted_norm(mild_ordinary, diff) <= 1.0

    def test_alternative_preserves_base(self, mild_super):
        theta0 = Signal(np.array([0.25]))
        theta = make_spike_alternative(mild_super, theta0, 0.25, j_max=100)
        assert theta.coefficients[0] == 0.5  # spike lands on coordinate 1 here
