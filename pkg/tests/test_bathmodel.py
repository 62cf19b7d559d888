import math

import pytest

from prethermal.bathmodel import (BathParams, RateSet, SpatialModel, bose_occupation,
                                  rate_set, spatial_correlation, spectral_rates)


def test_detailed_balance_from_physical_constants():
    p = BathParams(gamma0=0.7, omega0=2.0, beta=math.log(9) / 2)
    a, b = spectral_rates(p)
    assert a / b == pytest.approx(1 / 9, rel=1e-12)
    assert b - a == pytest.approx(0.7, rel=1e-12)


def test_relaxation_constants():
    r = RateSet.from_beta_omega0(math.log(9), 0.5)
    assert r.R1 == pytest.approx(1.0)
    assert r.M0 == pytest.approx(0.8)
    assert r.beta_omega0 == pytest.approx(math.log(9))
    # R1 = gamma0 coth(beta omega0 / 2)
    p = BathParams(gamma0=1.3, omega0=1.0, beta=0.8)
    rs = rate_set(p, r=0.0)
    assert rs.R1 == pytest.approx(1.3 / math.tanh(0.4), rel=1e-12)
    assert rs.M0 == pytest.approx(math.tanh(0.4), rel=1e-12)


def test_bose_occupation_limits():
    assert bose_occupation(1.0, 1e-6) == pytest.approx(1e6, rel=1e-5)
    assert bose_occupation(1.0, 800.0) == pytest.approx(math.exp(-800.0))
    with pytest.raises(ValueError):
        bose_occupation(0.0, 1.0)


@pytest.mark.parametrize("kind", ["lorentzian", "exponential", "gaussian"])
def test_spatial_models_decay_from_one(kind):
    m = SpatialModel(kind)
    assert spatial_correlation(m, 0.0, 2.0) == pytest.approx(1.0)
    values = [spatial_correlation(m, r, 2.0) for r in (0.5, 1.0, 4.0, 20.0)]
    assert all(0 <= v <= 1 for v in values)
    assert values == sorted(values, reverse=True)


def test_constant_model_and_validation():
    assert spatial_correlation(SpatialModel("constant", 0.3), 5.0, 1.0) == 0.3
    with pytest.raises(ValueError):
        SpatialModel("cubic")
    with pytest.raises(ValueError):
        BathParams(gamma0=-1, omega0=1, beta=1)
    with pytest.raises(ValueError):
        RateSet(0.1, 0.9, 1.2)
    with pytest.raises(ValueError):
        RateSet(0.9, 0.1, 0.5)
