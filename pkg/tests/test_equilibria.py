import math

import numpy as np
import pytest

from prethermal import equilibria as eq, liouvillian as lv, spinops as so
from prethermal.bathmodel import RateSet

from helpers import random_state

LN9 = math.log(9)


def test_gibbs_state():
    assert np.allclose(eq.gibbs_state(1, LN9), np.diag([0.9, 0.1]))
    g = eq.gibbs_state(3, 1.3)
    assert np.trace(g).real == pytest.approx(1)
    assert np.allclose(eq.gibbs_state(2, 0.0), np.eye(4) / 4)
    jz = so.collective_operator(3, "z")
    assert np.allclose(g, eq.matrix_exponential(1.3 * jz) / np.trace(eq.matrix_exponential(1.3 * jz)))
    with pytest.raises(ValueError):
        eq.gibbs_state(2, -1.0)


def test_matrix_exponential(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = a + a.conj().T
    from scipy.linalg import expm
    assert np.abs(eq.matrix_exponential(H) - expm(H)).max() < 1e-10
    with pytest.raises(ValueError):
        eq.matrix_exponential(a)


@pytest.mark.parametrize("F", [-0.7, -0.4, 0.0, 0.1, 0.24])
@pytest.mark.parametrize("bw", [0.3, LN9])
def test_gge_reproduces_conserved_value(F, bw):
    p = eq.GGEParams.from_F(F, bw)
    obs = so.extract_observables(p.density_matrix())
    assert obs["F"] == pytest.approx(F, abs=1e-12)
    mz, mc, mzz = eq.two_spin_gge_observables(F, math.tanh(bw / 2))
    assert (obs["Mz"], obs["Mc"], obs["Mzz"]) == pytest.approx((mz, mc, mzz), abs=1e-12)


def test_gge_examples():
    assert eq.gge_lagrange_multiplier(0.0, LN9) == pytest.approx(math.log(91 / 27), rel=1e-12)
    mz, mc, mzz = eq.two_spin_gge_observables(0.0, 0.8)
    assert (mz, mc, mzz) == pytest.approx((0.6593406593, -0.0879120879, 0.0879120879))


def test_gge_with_zero_multiplier_is_thermal():
    rho = eq.gge_density_matrix(LN9, 0.0)
    assert np.abs(rho - eq.gibbs_state(2, LN9)).max() < 1e-14
    F_th = so.extract_observables(rho)["F"]
    assert eq.gge_lagrange_multiplier(F_th, LN9) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("F", [0.25, 0.3, -0.75, -0.9])
def test_gge_boundary(F):
    with pytest.raises(eq.GGEBoundaryError):
        eq.gge_lagrange_multiplier(F, LN9)
    with pytest.raises(ValueError):
        eq.gge_density_matrix(LN9, math.inf)


def test_block_gibbs_weights():
    w = eq.block_gibbs_weights(1.0, LN9)
    assert w.sum() == pytest.approx(1)
    assert w[0] / w[1] == pytest.approx(9)
    assert w[1] / w[2] == pytest.approx(9)


def _presets(n):
    out = [so.maximally_mixed(n), so.all_up(n), so.all_down(n)]
    if n == 2:
        out.append(so.singlet())
    b = so.build_dicke_basis(n)
    out.append(so.dicke_state(n, b.labels[-1][0], b.labels[-1][2]))
    return out


@pytest.mark.parametrize("n", [2, 3, 4])
def test_block_thermal_state_is_the_long_time_limit(n):
    L = lv.build_liouvillian(n, RateSet.from_beta_omega0(LN9, 1.0))
    b = so.build_dicke_basis(n)
    for rho0 in _presets(n):
        bts = eq.block_thermal_state(rho0, b, LN9)
        ss = lv.steady_state(L, rho0)
        assert np.abs(bts.rho - ss.rho).max() < 1e-8
        assert sum(bts.weights.values()) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [3, 4])
def test_block_thermal_state_keeps_copy_coherence(n):
    b = so.build_dicke_basis(n)
    J = min(so.allowed_spins(n))
    if so.degeneracy(n, J) < 2:
        J = sorted(so.allowed_spins(n))[1]
    v = (b.vector(J, J, 1) + b.vector(J, J, 2)) / math.sqrt(2)
    rho0 = so.ket_to_dm(v)
    bts = eq.block_thermal_state(rho0, b, LN9)
    W = bts.coherences[J]
    assert abs(W[0, 1]) == pytest.approx(0.5)
    L = lv.build_liouvillian(n, RateSet.from_beta_omega0(LN9, 1.0))
    assert np.abs(lv.steady_state(L, rho0).rho - bts.rho).max() < 1e-8


def test_block_thermal_state_rejects_mismatch(rng):
    with pytest.raises(ValueError):
        eq.block_thermal_state(random_state(2, rng), so.build_dicke_basis(3), LN9)


def test_state_json_round_trip(rng):
    rho = random_state(2, rng)
    assert np.array_equal(eq.state_from_json(eq.state_to_json(rho)), rho)
