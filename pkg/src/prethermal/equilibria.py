"""Closed-form steady states: Gibbs, two-spin GGE and block-thermal states.

The Zeeman Hamiltonian is ``H0 = -omega0 J_z`` so the up state is the
single-spin ground state and equilibrium magnetisation is
``M0 = tanh(beta omega0 / 2) > 0``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .spinops import (DickeBasis, collective_operator, n_spins_of, pair_correlator,
                      validate_density_matrix)


class GGEBoundaryError(ValueError):
    """Raised when F sits on an edge of its range and l1 diverges."""


def matrix_exponential(H: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """exp(H) for Hermitian ``H`` via eigendecomposition."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    if np.abs(H - H.conj().T).max() > tol * max(1.0, np.abs(H).max()):
        raise ValueError("matrix_exponential expects a Hermitian matrix")
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (V * np.exp(w)) @ V.conj().T


def _normalized_exp(H):
    # subtract the top eigenvalue before exponentiating to avoid overflow
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    p = np.exp(w - w.max())
    return (V * (p / p.sum())) @ V.conj().T


def gibbs_state(n_spins: int, beta_omega0: float) -> np.ndarray:
    """Product thermal state exp(beta omega0 J_z) / Z."""
    if n_spins < 1:
        raise ValueError("n_spins must be positive")
    if beta_omega0 < 0:
        raise ValueError("beta_omega0 must be non-negative")
    x = 0.5 * beta_omega0
    single = np.diag([1.0, math.exp(-2 * x)]) / (1.0 + math.exp(-2 * x))
    return reduce(np.kron, [single] * n_spins).astype(complex)


@dataclass(frozen=True)
class GGEParams:
    """Two-spin generalised Gibbs ensemble labelled by F = Mzz + Mc."""

    F: float
    l1: float
    beta_omega0: float

    @classmethod
    def from_F(cls, F: float, beta_omega0: float) -> "GGEParams":
        return cls(F, gge_lagrange_multiplier(F, beta_omega0), beta_omega0)

    def density_matrix(self) -> np.ndarray:
        return gge_density_matrix(self.beta_omega0, self.l1)


def two_spin_gge_observables(F: float, M0: float) -> tuple[float, float, float]:
    """(Mz, Mc, Mzz) of the two-spin GGE with conserved F."""
    if not -0.75 - 1e-12 <= F <= 0.25 + 1e-12:
        raise ValueError(f"F must lie in [-3/4, 1/4], got {F}")
    m2 = M0 * M0
    mz = M0 * (4 * F + 3) / (m2 + 3)
    mc = (4 * F - m2) / (2 * (m2 + 3))
    return mz, mc, F - mc


def gge_lagrange_multiplier(F: float, beta_omega0: float) -> float:
    """Multiplier l1 such that the GGE reproduces F.

    The singlet-to-triplet weight ratio of the GGE is exp(l1), which fixes
    the closed form ln[(1 - 4F)/(3 + 4F) (1 + 2 cosh beta omega0)].
    """
    if F >= 0.25 or F <= -0.75:
        edge = "triplet" if F >= 0.25 else "singlet"
        raise GGEBoundaryError(f"F = {F} is at or beyond the pure {edge} edge; l1 diverges")
    return math.log((1 - 4 * F) / (3 + 4 * F) * (1 + 2 * math.cosh(beta_omega0)))


def gge_density_matrix(beta_omega0: float, l1: float) -> np.ndarray:
    """exp(beta omega0 J_z - (l1/4) sigma_1.sigma_2) / Z_g for two spins."""
    if not math.isfinite(l1):
        raise ValueError("l1 must be finite")
    H = beta_omega0 * collective_operator(2, "z") - 0.25 * l1 * pair_correlator(2, 1, 2)
    return _normalized_exp(H)


@dataclass(frozen=True)
class BlockThermalState:
    """Steady state of the fully correlated bath.

    ``weights`` maps (J, copy) to the conserved population of that
    multiplet; ``coherences`` holds the conserved copy-by-copy matrix of each
    J (its diagonal equals the weights). Inside each multiplet the
    populations follow the Gibbs ratio P_M / P_{M-1} = exp(beta omega0).
    """

    n_spins: int
    beta_omega0: float
    weights: dict
    coherences: dict
    rho: np.ndarray
    rho_dicke: np.ndarray


def block_gibbs_weights(J: float, beta_omega0: float) -> np.ndarray:
    """Normalised populations for M = J, J-1, ..., -J."""
    M = J - np.arange(round(2 * J) + 1)
    p = np.exp(beta_omega0 * (M - J))
    return p / p.sum()


def block_thermal_state(rho0: np.ndarray, basis: DickeBasis,
                        beta_omega0: float) -> BlockThermalState:
    """Long-time state at alpha = 1 reached from ``rho0``.

    Every J sector keeps the copy-space matrix
    W[c, c'] = sum_M <J M c| rho0 |J M c'> and relaxes to a Gibbs
    distribution over M; blocks with different J lose their coherences.
    """
    validate_density_matrix(rho0, tol=1e-8)
    if n_spins_of(rho0) != basis.n_spins:
        raise ValueError("state and basis describe different numbers of spins")
    r0 = basis.to_dicke(rho0)
    out = np.zeros_like(r0)
    weights, coherences = {}, {}
    mults = basis.multiplets()
    for J in sorted({J for J, _ in mults}, reverse=True):
        copies = sorted(c for (Jc, c) in mults if Jc == J)
        idx = np.array([mults[(J, c)] for c in copies])  # copies x M
        # the M-th entry of copy a pairs with the M-th entry of copy b
        W = np.array([[np.sum(r0[ia, ib]) for ib in idx] for ia in idx])
        g = block_gibbs_weights(J, beta_omega0)
        for a in range(len(copies)):
            for b in range(len(copies)):
                out[idx[a], idx[b]] = W[a, b] * g
        coherences[J] = W
        for a, c in enumerate(copies):
            weights[(J, c)] = float(W[a, a].real)
    return BlockThermalState(basis.n_spins, beta_omega0, weights, coherences,
                             basis.from_dicke(out), out)


# ------------------------------------------------------------------ export

def state_to_json(rho: np.ndarray) -> str:
    """Dense complex matrix as nested [re, im] pairs."""
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(rho)]
    return json.dumps({"dim": len(rows), "data": rows})


def state_from_json(text: str) -> np.ndarray:
    payload = json.loads(text)
    arr = np.array(payload["data"], dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]
