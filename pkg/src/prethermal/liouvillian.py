"""Liouvillian superoperator, its spectrum and steady states.

Density matrices are vectorised by column stacking, ``vec(rho)[r + d*c] =
rho[r, c]``, so that ``X rho Y`` maps to ``kron(Y.T, X) @ vec(rho)``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import _core
from .bathmodel import RateSet
from .spinops import n_spins_of, pair_correlator, site_operator

MAX_SPINS = 6


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = math.isqrt(v.size)
    return np.asarray(v).reshape(d, d, order="F")


def spre(X) -> sp.csr_matrix:
    """Superoperator of rho -> X rho."""
    X = sp.csr_matrix(X)
    return sp.kron(sp.identity(X.shape[0], format="csr"), X, format="csr")


def spost(Y) -> sp.csr_matrix:
    """Superoperator of rho -> rho Y."""
    Y = sp.csr_matrix(Y)
    return sp.kron(Y.T, sp.identity(Y.shape[0], format="csr"), format="csr")


@dataclass(frozen=True)
class Superoperator:
    """Liouvillian acting on column-stacked density matrices."""

    n_spins: int
    rates: RateSet
    sparse: sp.csr_matrix = field(repr=False)

    @property
    def dim(self) -> int:
        return self.sparse.shape[0]

    @cached_property
    def data(self) -> np.ndarray:
        out = self.sparse.toarray()
        out.setflags(write=False)
        return out

    @cached_property
    def fro_norm(self) -> float:
        return float(sp.linalg.norm(self.sparse))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L[rho] as a matrix."""
        return unvec(self.sparse @ vec(rho))


def _dissipator_pair(ei, ej, weight_b, weight_a):
    # B (2 e_i rho e_j^+ - {e_j^+ e_i, rho}) + A (2 e_i^+ rho e_j - {e_j e_i^+, rho})
    ejd, eid = ej.conj().T, ei.conj().T
    emit = 2 * spre(ei) @ spost(ejd) - spre(ejd @ ei) - spost(ejd @ ei)
    absorb = 2 * spre(eid) @ spost(ej) - spre(ej @ eid) - spost(ej @ eid)
    return weight_b * emit + weight_a * absorb


def build_liouvillian(n_spins: int, rates: RateSet) -> Superoperator:
    """Dissipative generator for ``n_spins`` qubits in a common bath.

    Every ordered pair (i, j) contributes a dissipator with weight 1 for
    i = j and ``alpha`` otherwise. The emission jump operator (rate B) is
    sigma_+, which relaxes each spin towards the up state.
    """
    if not 1 <= n_spins <= MAX_SPINS:
        raise ValueError(f"full Liouvillian supports 1..{MAX_SPINS} spins, got {n_spins}")
    if not 0.0 <= rates.alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    ops = [sp.csr_matrix(site_operator(n_spins, i, "plus")) for i in range(1, n_spins + 1)]
    dim = 4**n_spins
    L = sp.csr_matrix((dim, dim), dtype=complex)
    for i, ei in enumerate(ops):
        for j, ej in enumerate(ops):
            w = 1.0 if i == j else rates.alpha
            if w != 0.0:
                L = L + w * _dissipator_pair(ei, ej, rates.B, rates.A)
    L.eliminate_zeros()
    return Superoperator(n_spins, rates, L.tocsr())


# ------------------------------------------------------------------ spectrum

@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalues of L with the zero cluster and the asymptotic decay rate.

    ``gap_ratio`` is the smallest nonzero |lambda| divided by the largest
    |lambda| counted as zero; a large value means the zero count does not
    depend on the exact tolerance.
    """

    eigenvalues: np.ndarray
    zero_count: int
    adr: float
    zero_tol: float
    gap_ratio: float

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "zero_count": self.zero_count,
            "adr": self.adr,
            "zero_tol": self.zero_tol,
            "gap_ratio": self.gap_ratio,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def default_zero_tol(L: Superoperator) -> float:
    return 1e-9 * L.fro_norm


def spectrum(L: Superoperator, zero_tol: float | None = None) -> SpectralReport:
    """Full dense eigendecomposition of ``L``."""
    tol = default_zero_tol(L) if zero_tol is None else float(zero_tol)
    if tol <= 0:
        raise ValueError("zero_tol must be positive")
    try:
        lam = sla.eigvals(L.data, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    lam = lam[np.lexsort((lam.imag, -lam.real))]
    mag = np.abs(lam)
    zero = mag < tol
    decaying = lam.real < -tol
    adr = float(np.min(-lam.real[decaying])) if decaying.any() else 0.0
    if zero.any() and (~zero).any():
        biggest_zero = mag[zero].max()
        gap = math.inf if biggest_zero == 0 else float(mag[~zero].min() / biggest_zero)
    else:
        gap = math.nan
    return SpectralReport(lam, int(zero.sum()), adr, tol, gap)


def adr_sweep(n_spins: int, alphas, rates: RateSet, zero_tol: float | None = None,
              workers: int | None = None) -> list[tuple[float, float]]:
    """ADR for each alpha; instances are independent and run in a thread pool."""
    alphas = [float(a) for a in alphas]
    for a in alphas:
        if not 0.0 <= a < 1.0:
            raise ValueError(f"sweep values must lie in [0, 1), got {a}")

    def one(a):
        return a, spectrum(build_liouvillian(n_spins, rates.with_alpha(a)), zero_tol).adr

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, alphas))


# -------------------------------------------------------------- steady state

@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    residual: float
    method: str
    crosscheck: float | None = None  # distance between the two degenerate-case routes


def _null_spaces(M: np.ndarray, tol: float):
    u, s, vh = np.linalg.svd(M)
    k = int(np.sum(s < tol))
    right = vh[len(s) - k:].conj().T
    left = u[:, len(s) - k:].conj().T
    return left, right


def _hermitian_unit_trace(v: np.ndarray) -> np.ndarray:
    rho = unvec(v)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def _long_time(L: Superoperator, rho0, tol=1e-10, chunk=20.0, max_chunks=2000):
    y = vec(np.asarray(rho0, dtype=complex)).copy()
    data = L.data
    scale = L.rates.R1
    for _ in range(max_chunks):
        if np.linalg.norm(data @ y) < tol:
            return y
        out, _, _, status = _core.integrate_dense(
            data, y, np.array([0.0, chunk / scale]), 1e-11, 1e-14, 1e-3 / scale,
            np.inf, 10**7)
        if status != _core.STATUS_OK:
            raise RuntimeError(f"long-time integration failed with status {status}")
        y = out[-1]
    raise RuntimeError("long-time evolution did not converge to a stationary state")


def steady_state(L: Superoperator, rho0: np.ndarray | None = None,
                 zero_tol: float | None = None) -> SteadyState:
    """Stationary state of ``L``.

    With a unique zero mode the normalised null vector is returned. With
    several, ``rho0`` selects the state: it is evolved until
    ||L[rho]|| < 1e-10 and checked against the projection of rho0 onto the
    kernel along the left null space (conserved functionals).
    """
    tol = default_zero_tol(L) if zero_tol is None else zero_tol
    left, right = _null_spaces(L.data, tol)
    k = right.shape[1]
    if k == 0:
        raise RuntimeError("Liouvillian has no zero mode at this tolerance")
    if k == 1:
        rho = _hermitian_unit_trace(right[:, 0])
        method, check = "nullspace", None
    else:
        if rho0 is None:
            raise ValueError(f"{k} zero modes: the steady state depends on rho0, which is required")
        if n_spins_of(rho0) != L.n_spins:
            raise ValueError("rho0 does not match the Liouvillian dimension")
        y = _long_time(L, rho0)
        rho = unvec(y)
        rho = 0.5 * (rho + rho.conj().T)
        proj = right @ np.linalg.solve(left @ right, left @ vec(rho0))
        check = float(np.abs(unvec(proj) - rho).max())
        if check > 1e-6:
            raise RuntimeError(f"long-time and projected steady states disagree by {check:.3g}")
        method = "long_time_evolution"
    residual = float(np.linalg.norm(L.sparse @ vec(rho)))
    if residual > 1e-8:
        raise RuntimeError(f"steady-state residual {residual:.3g} exceeds 1e-8")
    return SteadyState(rho, residual, method, check)


# ----------------------------------------------------------------- symmetry

def symmetry_commutator_norm(L: Superoperator, O: np.ndarray) -> float:
    """Frobenius norm of [O_super, L] with O_super[rho] = [O, rho]."""
    d = 1 << L.n_spins
    if O.shape != (d, d):
        raise ValueError(f"operator shape {O.shape} does not match {L.n_spins} spins")
    Os = spre(O) - spost(O)
    return float(sp.linalg.norm(Os @ L.sparse - L.sparse @ Os))


def conserved_quantity_rates(L: Superoperator) -> dict[tuple[int, int], float]:
    """Largest |d/dt <sigma_i . sigma_j>| over matrix-unit inputs, per pair.

    Uses Tr(P X) = vec(P.T) . vec(X), so the rate functional is the row
    vector vec(P.T)^T L.
    """
    if L.n_spins < 2:
        raise ValueError("conserved pair correlators need at least two spins")
    out = {}
    for i, j in combinations(range(1, L.n_spins + 1), 2):
        P = pair_correlator(L.n_spins, i, j)
        row = L.sparse.T @ vec(P.T)
        out[(i, j)] = float(np.abs(row).max())
    return out


def count_conserved(rates: dict, tol: float = 1e-10) -> int:
    return sum(1 for r in rates.values() if r <= tol)
