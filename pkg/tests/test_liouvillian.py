import json
import math

import numpy as np
import pytest

from prethermal import liouvillian as lv, spinops as so
from prethermal.bathmodel import RateSet
from prethermal.equilibria import gibbs_state

from helpers import random_state

LN9 = math.log(9)


def rates(alpha):
    return RateSet.from_beta_omega0(LN9, alpha)


def test_vectorization_convention(rng):
    X, Y, rho = (rng.normal(size=(4, 4)) for _ in range(3))
    assert np.allclose(lv.spre(X) @ lv.vec(rho), lv.vec(X @ rho))
    assert np.allclose(lv.spost(Y) @ lv.vec(rho), lv.vec(rho @ Y))
    assert np.allclose(lv.unvec(lv.vec(rho)), rho)


def test_single_spin_spectrum():
    rep = lv.spectrum(lv.build_liouvillian(1, rates(0.5)))
    assert np.allclose(np.sort(rep.eigenvalues.real), [-2, -1, -1, 0], atol=1e-12)
    assert rep.zero_count == 1
    assert rep.adr == pytest.approx(1.0)


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 2), (3, 5), (4, 14)])
def test_zero_modes_at_full_correlation(n, expected):
    rep = lv.spectrum(lv.build_liouvillian(n, rates(1.0)))
    assert rep.zero_count == expected
    assert rep.gap_ratio > 1e6


@pytest.mark.parametrize("n", [2, 3, 4])
def test_unique_zero_mode_below_full_correlation(n):
    rep = lv.spectrum(lv.build_liouvillian(n, rates(0.9)))
    assert rep.zero_count == 1
    assert rep.adr > 0


@pytest.mark.parametrize("n,alpha", [(2, 0.3), (3, 1.0)])
def test_trace_preservation_and_hermiticity(n, alpha, rng):
    L = lv.build_liouvillian(n, rates(alpha))
    left = lv.vec(np.eye(2**n))
    assert np.abs(L.sparse.T @ left).max() < 1e-13
    rho = random_state(n, rng)
    out = L.apply(rho)
    assert np.abs(out - out.conj().T).max() < 1e-12


def test_spectrum_closed_under_conjugation():
    lam = lv.spectrum(lv.build_liouvillian(3, rates(0.7))).eigenvalues
    assert np.all(lam.real < 1e-10)
    for z in lam:
        assert np.min(np.abs(lam - z.conjugate())) < 1e-8


def test_adr_ordering():
    sweep = lv.adr_sweep(2, [0.0, 0.5, 0.9, 0.99], rates(0.0), workers=2)
    adr = [v for _, v in sweep]
    assert adr[0] == pytest.approx(1.0, abs=1e-10)
    assert all(a > b for a, b in zip(adr, adr[1:]))
    with pytest.raises(ValueError):
        lv.adr_sweep(2, [1.0], rates(0.0))


def test_zero_tol_validation():
    L = lv.build_liouvillian(1, rates(0.2))
    with pytest.raises(ValueError):
        lv.spectrum(L, zero_tol=0.0)
    assert lv.default_zero_tol(L) == pytest.approx(1e-9 * L.fro_norm)


def test_rejects_bad_sizes():
    with pytest.raises(ValueError):
        lv.build_liouvillian(7, rates(0.2))
    with pytest.raises(ValueError):
        lv.build_liouvillian(0, rates(0.2))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_unique_steady_state_is_gibbs(n):
    ss = lv.steady_state(lv.build_liouvillian(n, rates(0.6)))
    assert ss.method == "nullspace"
    assert np.abs(ss.rho - gibbs_state(n, LN9)).max() < 1e-10
    if n == 1:
        assert np.allclose(ss.rho, np.diag([0.9, 0.1]))


def test_degenerate_steady_state_requires_initial_state():
    L = lv.build_liouvillian(2, rates(1.0))
    with pytest.raises(ValueError):
        lv.steady_state(L)
    ss = lv.steady_state(L, so.singlet())
    assert ss.method == "long_time_evolution"
    assert ss.crosscheck < 1e-8
    assert np.abs(ss.rho - so.singlet()).max() < 1e-9


def test_total_spin_symmetry():
    J2 = so.total_spin_squared(3)
    assert lv.symmetry_commutator_norm(lv.build_liouvillian(3, rates(1.0)), J2) < 1e-10
    assert lv.symmetry_commutator_norm(lv.build_liouvillian(3, rates(0.5)), J2) > 1e-3


@pytest.mark.parametrize("n", [2, 3, 4])
def test_conserved_pair_correlators(n):
    full = lv.conserved_quantity_rates(lv.build_liouvillian(n, rates(1.0)))
    assert set(full) == {(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)}
    assert lv.count_conserved(full) == n * (n - 1) // 2
    part = lv.conserved_quantity_rates(lv.build_liouvillian(n, rates(0.9)))
    assert lv.count_conserved(part) == 0


def test_generator_block_diagonal_in_dicke_basis():
    n = 3
    b = so.build_dicke_basis(n)
    L = lv.build_liouvillian(n, rates(1.0)).data
    U = b.U
    # superoperator in the coupled basis: vec(U^+ X U) = (U^T kron U^+) vec(X)
    S = np.kron(U.T, U.conj().T)
    Ld = S @ L @ S.conj().T
    J = np.array([lab[0] for lab in b.labels])
    # J^2 is a strong symmetry: both the row and the column spin of a matrix element are kept
    rowJ = np.tile(J, len(J))
    colJ = np.repeat(J, len(J))
    moves = ~(np.equal.outer(rowJ, rowJ) & np.equal.outer(colJ, colJ))
    assert np.abs(Ld[moves]).max() < 1e-9


def test_spectral_report_json():
    rep = lv.spectrum(lv.build_liouvillian(2, rates(1.0)))
    payload = json.loads(rep.to_json())
    assert payload["zero_count"] == 2
    assert len(payload["eigenvalues"]) == 16
