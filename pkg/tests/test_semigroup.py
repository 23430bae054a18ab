import math

import numpy as np
import pytest

from hfujita.errors import ParameterError
from hfujita.grid import GridFunction, GridSpec
from hfujita.group import GroupParams
from hfujita.semigroup import (SemigroupBackend, heat_envelope, kernel_envelope_check,
                               radial_kernel_estimate, riesz_potential_check)
from hfujita.semigroup import _endpoint_radii

GP = GroupParams()


@pytest.fixture(scope="module")
def small_bump():
    spec = GridSpec.build(4.0, 9, 17)
    return GridFunction.from_radial(lambda d: np.exp(-d ** 4), spec, 4.0)


def test_unknown_backend():
    with pytest.raises(ParameterError):
        SemigroupBackend(method="spectral")


def test_zero_time_is_identity(small_bump):
    assert SemigroupBackend().apply(small_bump, 0.0) is small_bump


def test_negative_time_rejected(small_bump):
    with pytest.raises(ParameterError):
        SemigroupBackend().apply(small_bump, -1.0)


def test_heat_envelope_branches():
    # [TRIVIAL] t=1: plateau 1 inside the unit ball, r^{-(Q+2s)} outside
    Q, s = 4, 0.5
    assert heat_envelope(1.0, 0.5, s, Q) == 1.0
    assert heat_envelope(1.0, 2.0, s, Q) == pytest.approx(2.0 ** -5)
    assert heat_envelope(4.0, 0.1, s, Q) == pytest.approx(4.0 ** -4)


def test_kde_recovers_synthetic_law(rng):
    # [DERIVED] rho = E^{1/4} with E ~ Exp(1) has sphere-averaged kernel exp(-r^4)/(pi^2/2)
    rho = rng.exponential(size=400_000) ** 0.25
    radii = np.array([0.5, 0.8, 1.0, 1.2])
    est = radial_kernel_estimate(rho, radii, GP)
    exact = np.exp(-radii ** 4) / (math.pi ** 2 / 2)
    np.testing.assert_allclose(est.kernel, exact, rtol=0.05)
    assert np.all(est.window_samples > 1000)


def test_weighted_kde_scales_with_weights(rng):
    rho = rng.exponential(size=100_000) ** 0.25
    radii = np.array([0.7, 1.0])
    plain = radial_kernel_estimate(rho, radii, GP).kernel
    doubled = radial_kernel_estimate(rho, radii, GP, np.full(rho.size, 2.0)).kernel
    np.testing.assert_allclose(doubled, 2 * plain, rtol=1e-12)


def test_endpoint_law_is_self_similar():
    # X_t has the law of delta_{t^{1/2s}} X_1, so gauge-radius quantiles scale
    s = 0.5
    q1 = np.quantile(_endpoint_radii(1.0, s, 100_000, 3, GP), [0.25, 0.5, 0.75])
    q16 = np.quantile(_endpoint_radii(16.0, s, 100_000, 4, GP), [0.25, 0.5, 0.75])
    np.testing.assert_allclose(q16 / q1, 16.0 ** (1 / (2 * s)), rtol=0.03)


def test_kernel_envelope_small_run():
    rep = kernel_envelope_check(1.0, [0.5, 1.0, 2.0, 4.0], 0.5, GP, n_paths=100_000, rng_seed=1)
    h = np.array(rep.empirical_density)
    assert 1.0 <= rep.fitted_c < np.inf
    assert min(rep.margins) >= -1e-12
    assert np.all(np.array(rep.lower_envelope) <= h * (1 + 1e-12))
    assert np.all(h <= np.array(rep.upper_envelope) * (1 + 1e-12))


def test_kernel_envelope_rejects_bad_radii():
    with pytest.raises(ParameterError):
        kernel_envelope_check(1.0, [0.0, 1.0], 0.5, GP, n_paths=2000)


def test_riesz_guards():
    with pytest.raises(ParameterError):
        riesz_potential_check([1.0, 2.0], 0.5, GP, n_paths=2000)
    with pytest.raises(ParameterError):
        riesz_potential_check([1.0, 8.0], 0.5, GP, t_max=10.0, n_paths=2000)
