import math

import numpy as np
import pytest

from fiberalign.embed import GaussianSpec
from fiberalign.errors import DomainError
from fiberalign.fiber import (
    closed_form_gaussian_size,
    estimate_size_mc,
    fit_exponential_coefficient,
    fit_loglog_slope,
)


def _std(dim, mean=0.0, var=1.0):
    return GaussianSpec(dim, np.full(dim, float(mean)), var)


def test_mc_matches_erf_closed_form():
    # oracle: P(|D| <= 0.1) for D ~ N(0, 2) via the error function
    oracle = math.erf(0.1 / 2.0)
    assert oracle == pytest.approx(0.0564, abs=5e-5)
    est = estimate_size_mc(_std(1), _std(1), 0.1, 100000, 123)
    assert abs(est.value - oracle) <= 4.0 * est.std_error


def test_mc_eps_zero_is_zero():
    est = estimate_size_mc(_std(2), _std(2), 0.0, 1000, 0)
    assert est.value == 0.0


def test_mc_far_separated_tail():
    # tail-bound oracle: P(|D - 10| <= 0.1) ~ Phi(-9.9); far below 1e-6
    est = estimate_size_mc(_std(1, 0.0), _std(1, 10.0), 0.1, 100000, 7)
    assert est.value < 1e-6


def test_mc_deterministic_in_seed():
    a = estimate_size_mc(_std(3), _std(3), 0.5, 20000, 99)
    b = estimate_size_mc(_std(3), _std(3), 0.5, 20000, 99)
    assert a == b


def test_mc_rejects_dim_mismatch():
    with pytest.raises(DomainError):
        estimate_size_mc(_std(1), _std(2), 0.1, 10, 0)


def test_closed_form_equal_means():
    spec = _std(2)
    assert closed_form_gaussian_size(spec, spec, 0.3) == pytest.approx(0.09)


def test_closed_form_separation_example():
    f = GaussianSpec(3, np.array([0.0, 0.0, 0.0]), 1.0)
    g = GaussianSpec(3, np.array([2.0, 0.0, 0.0]), 1.0)  # sep^2 = 4
    for eps in (0.1, 0.5):
        expected = math.exp(-1.0) * eps**3
        assert closed_form_gaussian_size(f, g, eps) == pytest.approx(expected)


def test_closed_form_power_law():
    spec = _std(3)
    assert closed_form_gaussian_size(spec, spec, 0.4) == pytest.approx(
        8.0 * closed_form_gaussian_size(spec, spec, 0.2)
    )


def test_closed_form_rejects_nonpositive_eps():
    spec = _std(1)
    with pytest.raises(DomainError):
        closed_form_gaussian_size(spec, spec, 0.0)


def test_fit_loglog_slope_recovers_power_law():
    eps = [0.05, 0.1, 0.2, 0.4]
    sizes = [2.5 * e**3 for e in eps]
    assert fit_loglog_slope(eps, sizes) == pytest.approx(3.0)


def test_fit_loglog_slope_underdetermined():
    assert fit_loglog_slope([0.1], [0.5]) is None
    assert fit_loglog_slope([0.1, 0.2], [0.0, 0.0]) is None


def test_fit_exponential_coefficient_recovers_decay():
    xs = [0.0, 1.0, 2.0, 4.0]
    sizes = [3.0 * math.exp(-0.25 * x) for x in xs]
    assert fit_exponential_coefficient(xs, sizes) == pytest.approx(-0.25)


def test_mc_slope_matches_dimension_desk_scale():
    # desk-scale version of the asymptotic eps^d scaling check
    eps_grid = list(np.geomspace(0.1, 0.5, 4))
    sizes = [
        estimate_size_mc(_std(2), _std(2), e, 100000, 5).value for e in eps_grid
    ]
    slope = fit_loglog_slope(eps_grid, sizes)
    assert slope == pytest.approx(2.0, rel=0.2)
