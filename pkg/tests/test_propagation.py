import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridnet.errors import InvalidParameterError, NoBeaconError, SingularityError
from hybridnet.propagation import (DeploymentParams, SystemParams, data_path_gain,
                                   interference_at_typical, mpt_path_gain, raw_power_directed,
                                   raw_power_isotropic, unit_interference)
from hybridnet.spatial import NetworkRealization, SimWindow, sample_realization, stream

WINDOW = SimWindow(100.0)


def realization(interferer_distances=(), pb_distances=(), nearest=None):
    """Typical pair at the origin plus interferers and beacons on the x-axis."""
    mob = [(0.0, 0.0)] + [(d, 0.0) for d in interferer_distances]
    bs = [(0.0, 0.0)] + [(d + 0.1, 0.0) for d in interferer_distances]
    pbs = np.array([(d, 0.0) for d in pb_distances]).reshape(-1, 2)
    if nearest is None and len(pbs):
        nearest = int(np.argmin(pb_distances))
    return NetworkRealization(np.array(bs), np.array(mob), pbs, nearest, WINDOW, WINDOW.radius)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(alpha=2), dict(beta=2), dict(nu=1.0), dict(theta=0),
                                    dict(sigma2=-1), dict(omega=0), dict(omega=1.5),
                                    dict(z_m=1, z_s=2), dict(z_s=0), dict(K=-1), dict(K=1.5),
                                    dict(epsilon=1), dict(eta=0), dict(delta=1), dict(p_b=0),
                                    dict(p_t=-1), dict(alpha=math.inf)])
    def test_invalid_system(self, kw):
        with pytest.raises(InvalidParameterError):
            SystemParams(**kw)

    @pytest.mark.parametrize("kw", [dict(p=-1), dict(q=math.nan), dict(lambda_b=-0.1),
                                    dict(lambda_p=math.inf)])
    def test_invalid_deployment(self, kw):
        with pytest.raises(InvalidParameterError):
            DeploymentParams(**kw)


class TestPathGains:
    @pytest.mark.parametrize("d, alpha, expected", [(1, 4, 1.0), (2, 4, 0.0625), (10, 3, 0.001)])
    def test_data(self, d, alpha, expected):
        assert data_path_gain(d, alpha) == pytest.approx(expected, rel=1e-15)

    def test_data_singular(self):
        with pytest.raises(SingularityError):
            data_path_gain(0.0, 4)

    def test_mpt_cutoff(self):
        assert mpt_path_gain(0, 3, 1.5) == pytest.approx(1.5 ** -3)
        assert mpt_path_gain(0, 3, 1.5) == pytest.approx(0.2963, abs=1e-4)
        assert mpt_path_gain(1.5, 3, 1.5) == 1.5 ** -3
        assert mpt_path_gain(3.0, 3, 1.5) == pytest.approx(3.0 ** -3, rel=1e-15)

    @given(st.floats(0, 1e6), st.floats(2.01, 6), st.floats(1.001, 5))
    def test_mpt_bounded(self, d, beta, nu):
        assert mpt_path_gain(d, beta, nu) <= nu ** -beta

    def test_vectorised(self):
        assert np.allclose(data_path_gain([1.0, 2.0], 4), [1.0, 0.0625])


class TestInterference:
    def test_single_interferer(self):
        assert interference_at_typical(realization([2.0]), 1.0, 0, 4) == pytest.approx(0.0625)

    def test_full_cancellation(self):
        assert interference_at_typical(realization([2.0]), 1.0, 1, 4) == 0.0

    def test_nearest_is_cancelled(self):
        assert interference_at_typical(realization([1.0, 2.0]), 1.0, 1, 4) == pytest.approx(0.0625)
        assert interference_at_typical(realization([2.0, 1.0]), 1.0, 1, 4) == pytest.approx(0.0625)

    def test_cancelling_more_than_exist(self):
        assert interference_at_typical(realization([1.0, 2.0]), 1.0, 5, 4) == 0.0

    def test_own_mobile_never_counts(self):
        # the typical mobile sits at the origin yet contributes nothing
        assert interference_at_typical(realization([3.0]), 2.0, 0, 4) == pytest.approx(2 * 3.0 ** -4)

    def test_uncancelled_interferer_at_origin(self):
        with pytest.raises(SingularityError):
            unit_interference(np.array([[1.0, 0.0], [0.0, 0.0]]), 0, 4)
        assert unit_interference(np.array([[1.0, 0.0], [0.0, 0.0]]), 1, 4) == 0.0

    @given(st.lists(st.floats(0.1, 50), min_size=0, max_size=25), st.integers(0, 30),
           st.one_of(st.just(0.0), st.floats(1e-6, 100)), st.floats(2.1, 5))
    def test_monotone_in_k_and_linear_in_p(self, dists, K, p, alpha):
        r = realization(dists)
        base = interference_at_typical(r, 1.0, K, alpha)
        assert interference_at_typical(r, 1.0, K + 1, alpha) <= base
        assert interference_at_typical(r, p, K, alpha) == pytest.approx(p * base, rel=1e-12, abs=0)

    @given(st.lists(st.floats(0.1, 50), min_size=1, max_size=25), st.integers(0, 30), st.floats(2.1, 5))
    def test_matches_direct_sum(self, dists, K, alpha):
        # stable ranking of equal distances keeps index order, as the direct sum does
        order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
        expected = sum(dists[i] ** -alpha for i in order[K:])
        assert unit_interference(realization(dists).mobiles, K, alpha) == pytest.approx(expected, rel=1e-12)


class TestRawPower:
    def test_no_beacons(self):
        assert raw_power_isotropic(realization(), 1.0, 3, 1.5) == 0.0
        with pytest.raises(NoBeaconError):
            raw_power_directed(realization(), 1.0, 10, 1, 3, 1.5)

    def test_isotropic_examples(self):
        assert raw_power_isotropic(realization(pb_distances=[0.5]), 2.0, 3, 1.0) == pytest.approx(2.0)
        assert raw_power_isotropic(realization(pb_distances=[1.0, 2.0]), 1.0, 3, 1.0) == pytest.approx(1.125)

    def test_directed_examples(self):
        assert raw_power_directed(realization(pb_distances=[0.3]), 1.0, 10, 1, 3, 1.0) == pytest.approx(10)
        assert raw_power_directed(realization(pb_distances=[1.0, 2.0]), 1.0, 4, 1, 3, 1.0) == pytest.approx(4.125)

    def test_equal_gains_match_isotropic_exactly(self):
        w = SimWindow.for_density(1.0, 10)
        for t in range(10):
            r = sample_realization(DeploymentParams(lambda_p=0.5), SystemParams(), w, stream(20, t))
            assert raw_power_directed(r, 1.7, 1, 1, 3, 1.5) == raw_power_isotropic(r, 1.7, 3, 1.5)

    # q stays out of the subnormal range, where products lose relative precision
    @given(st.lists(st.floats(0, 100), min_size=1, max_size=20),
           st.one_of(st.just(0.0), st.floats(1e-6, 10)), st.floats(1, 1e3), st.floats(1e-3, 1), st.floats(2.1, 5), st.floats(1.01, 3))
    def test_dominance_linearity_and_bounds(self, dists, q, z_m, z_s, beta, nu):
        r = realization(pb_distances=dists)
        iso = raw_power_isotropic(r, q, beta, nu)
        dire = raw_power_directed(r, q, z_m, z_s, beta, nu)
        tol = 1e-12 * max(iso, 1e-300)
        assert z_s * iso - z_m * tol <= dire <= z_m * iso + z_m * tol
        assert raw_power_isotropic(r, 2 * q, beta, nu) == pytest.approx(2 * iso, rel=1e-12, abs=0)
        assert raw_power_directed(r, 2 * q, z_m, z_s, beta, nu) == pytest.approx(2 * dire, rel=1e-12, abs=0)
        assert iso <= len(dists) * q * nu ** -beta * (1 + 1e-12)
        assert dire <= (z_m + (len(dists) - 1) * z_s) * q * nu ** -beta * (1 + 1e-12)
