import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from prethermal import measures as ms, spinops as so
from prethermal.equilibria import GGEParams, gibbs_state

from helpers import random_state

LN9 = math.log(9)
LN4 = math.log(4)


def test_purity_bounds():
    assert ms.purity(so.all_up(2)) == pytest.approx(1)
    assert ms.purity(so.maximally_mixed(3)) == pytest.approx(1 / 8)


def test_purity_closed_forms():
    assert ms.purity_analytic("lt1", LN9) == pytest.approx(ms.purity(gibbs_state(2, LN9)))
    for F in (-0.5, 0.0, 0.2):
        rho = GGEParams.from_F(F, LN9).density_matrix()
        assert ms.purity_analytic("eq1", LN9, F) == pytest.approx(ms.purity(rho), abs=1e-12)
    assert ms.purity_analytic("eq1", LN9, 0.25) == pytest.approx(0.8022, abs=5e-5)
    assert ms.purity_analytic("lt1", LN9) == pytest.approx(0.6724, abs=5e-5)
    with pytest.raises(ValueError):
        ms.purity_analytic("eq1", LN9)
    with pytest.raises(ValueError):
        ms.purity_analytic("gt1", LN9)


def test_entropy_values():
    assert ms.von_neumann_entropy(so.all_up(3)) == pytest.approx(0, abs=1e-12)
    assert ms.von_neumann_entropy(so.maximally_mixed(3)) == pytest.approx(3 * math.log(2))
    for n in (1, 2, 4):
        assert ms.von_neumann_entropy(gibbs_state(n, LN9)) == pytest.approx(
            ms.entropy_analytic_thermal(n, LN9), rel=1e-12)
    with pytest.raises(ValueError):
        ms.von_neumann_entropy(np.diag([1.1, -0.1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_entropy_unitary_invariance(seed, n):
    g = np.random.default_rng(seed)
    rho = random_state(n, g, rank=int(g.integers(1, 2**n + 1)))
    U = unitary_group.rvs(2**n, random_state=seed)
    s = ms.von_neumann_entropy(rho, tol=1e-9)
    assert 0 <= s <= n * math.log(2) + 1e-12
    assert ms.von_neumann_entropy(U @ rho @ U.conj().T, tol=1e-9) == pytest.approx(s, abs=1e-9)
    assert ms.purity(U @ rho @ U.conj().T) == pytest.approx(ms.purity(rho), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6), st.integers(0, 2**31 - 1))
def test_mixture_entropy_bound(raw, seed):
    x = np.array(raw) / sum(raw)
    s_blocks = np.random.default_rng(seed).uniform(0, 2, size=len(x))
    s, bound = ms.entropy_mixture(x, s_blocks)
    assert s <= bound + 1e-12
    assert s >= np.dot(x, s_blocks) - 1e-12


def test_mixture_matches_block_diagonal_state(rng):
    a, b = random_state(1, rng), random_state(2, rng)
    rho = np.zeros((6, 6), complex)
    rho[:2, :2], rho[2:, 2:] = 0.3 * a, 0.7 * b
    s, _ = ms.entropy_mixture([0.3, 0.7], [ms.von_neumann_entropy(a), ms.von_neumann_entropy(b)])
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-14]
    assert s == pytest.approx(-np.sum(lam * np.log(lam)), abs=1e-12)
    with pytest.raises(ValueError):
        ms.entropy_mixture([0.5, 0.6], [0, 0])


def test_principal_block_entropy():
    assert ms.entropy_analytic_principal(LN4) == pytest.approx(0.749780, abs=1e-6)
    assert ms.entropy_analytic_principal(0.0, 4) == pytest.approx(math.log(5))
    # finite N: direct Gibbs sum over the 2J+1 levels
    for n in (1, 3, 10):
        p = np.exp(-LN4 * np.arange(n + 1))
        p /= p.sum()
        assert ms.entropy_analytic_principal(LN4, n) == pytest.approx(-np.sum(p * np.log(p)))
    diffs = [abs(ms.entropy_analytic_principal(LN4, n) - ms.entropy_analytic_principal(LN4))
             for n in (5, 10, 20)]
    assert diffs[-1] < 1e-3 and diffs == sorted(diffs, reverse=True)


def test_concurrence_examples():
    assert ms.concurrence(so.singlet()) == pytest.approx(1)
    assert ms.concurrence(so.all_up(2)) == pytest.approx(0, abs=1e-12)
    assert ms.concurrence(so.maximally_mixed(2)) == pytest.approx(0)
    assert ms.concurrence_closed_form(0, -0.25, -0.5) == pytest.approx(1)
    with pytest.raises(ValueError):
        ms.concurrence(so.all_up(3))


@pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
def test_werner_states(p):
    rho = p * so.singlet() + (1 - p) * so.maximally_mixed(2)
    assert ms.concurrence(rho, check_closed_form=True) == pytest.approx(max(0, (3 * p - 1) / 2))


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-0.25, 0.25), st.floats(-0.5, 0.5))
def test_closed_form_matches_wootters(mz, mzz, mc):
    rho = so.symmetric_two_spin_state(mz, mzz, mc)
    if np.linalg.eigvalsh(rho).min() < 0:
        return
    c = ms.concurrence(rho)
    assert c == pytest.approx(ms.concurrence_closed_form(mz, mzz, mc), abs=1e-7)


def test_entropy_scaling_result():
    r = ms.EntropyScalingResult("thermal_alpha_lt1")
    for n in (1, 2, 3):
        r.add(n, ms.entropy_analytic_thermal(n, LN4))
    assert r.slope() == pytest.approx(ms.entropy_analytic_thermal(1, LN4))
    assert r.to_csv().splitlines()[0] == "N,S,regime"
    with pytest.raises(ValueError):
        r.add(1, 2.0)
    with pytest.raises(ValueError):
        ms.EntropyScalingResult("other")
