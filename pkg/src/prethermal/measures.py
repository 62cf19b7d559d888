"""Purity, von Neumann entropy and two-qubit concurrence."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .spinops import PAULI, n_spins_of, observable_operators


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2)."""
    return float(np.sum(rho * rho.T).real)


def purity_analytic(regime: str, beta_omega0: float, F: float | None = None) -> float:
    """Closed-form two-spin purity of the thermal (``lt1``) or GGE (``eq1``) state."""
    c = math.cosh(beta_omega0)
    if regime == "lt1":
        return 0.5 * (1 + math.cosh(2 * beta_omega0)) / (1 + c) ** 2
    if regime == "eq1":
        if F is None:
            raise ValueError("the eq1 regime needs F")
        return (-2 - 8 * F + (5 + 8 * F * (1 + 2 * F)) * c) / (4 + 8 * c)
    raise ValueError(f"unknown regime {regime!r}; expected 'lt1' or 'eq1'")


def von_neumann_entropy(rho: np.ndarray, tol: float = 1e-10) -> float:
    """-Tr(rho ln rho) in nats.

    Eigenvalues in [-tol, 0) are treated as zero; anything more negative is
    rejected as an invalid state.
    """
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -tol:
        raise ValueError(f"state has a negative eigenvalue {lam.min():.3g}")
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def entropy_analytic_thermal(n_spins: int, beta_omega0: float) -> float:
    """Entropy of the product Gibbs state of ``n_spins`` spins."""
    h = 0.5 * beta_omega0
    return n_spins * (math.log(2 * math.cosh(h)) - h * math.tanh(h))


def _log_sinh(y):
    return y + math.log1p(-math.exp(-2 * y)) - math.log(2)


def entropy_analytic_principal(beta_omega0: float, n_spins: int | None = None) -> float:
    """Entropy of a Gibbs distribution over the 2J+1 levels of the J = N/2 block.

    With ``n_spins=None`` the large-N limit is returned.
    """
    x = beta_omega0
    if x < 0:
        raise ValueError("beta_omega0 must be non-negative")
    if n_spins is not None and n_spins < 0:
        raise ValueError("n_spins must be non-negative")
    if x == 0:
        if n_spins is None:
            return math.inf
        return math.log(n_spins + 1)
    h = 0.5 * x
    if n_spins is None:
        return h / math.tanh(h) - math.log(2 * math.sinh(h))
    if n_spins == 0:
        return 0.0
    k = 0.5 * (n_spins + 1) * x
    log_z = _log_sinh(k) - _log_sinh(h)
    mean_m = 0.5 * (n_spins + 1) / math.tanh(k) - 0.5 / math.tanh(h)
    return max(0.0, log_z - x * mean_m)


def entropy_mixture(weights, block_entropies) -> tuple[float, float]:
    """Entropy of a mixture of states with mutually orthogonal supports.

    Returns ``(S, bound)`` with S = sum x_i S_i + sum x_i ln(1/x_i) and
    bound = max S_i + ln(number of blocks).
    """
    x = np.asarray(weights, dtype=float)
    s = np.asarray(block_entropies, dtype=float)
    if x.shape != s.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("weights and block entropies must be equal-length sequences")
    if (x < 0).any() or abs(x.sum() - 1) > 1e-10:
        raise ValueError("weights must be non-negative and sum to 1")
    nz = x > 0
    mixing = -np.sum(x[nz] * np.log(x[nz]))
    return float(np.dot(x, s) + mixing), float(s.max() + math.log(x.size))


# ------------------------------------------------------------- concurrence

_YY = np.kron(PAULI["y"], PAULI["y"])


def _psd_sqrt(rho):
    w, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T


def wootters_lambdas(rho: np.ndarray) -> np.ndarray:
    """Square roots of the eigenvalues of rho (Y x Y) rho* (Y x Y), descending.

    Computed as singular values of sqrt(rho) sqrt(rho~), which avoids the
    square-root amplification of rounding errors near zero.
    """
    s = _psd_sqrt(rho)
    return np.linalg.svd(s @ (_YY @ s.conj() @ _YY), compute_uv=False)


def concurrence_closed_form(Mz: float, Mzz: float, Mc: float) -> float:
    """Concurrence of a two-spin state with only Mz, Mzz and Mc nonzero."""
    arg = (1 + 4 * Mzz) ** 2 - 4 * Mz**2
    return max(0.0, 0.5 * (4 * abs(Mc) - math.sqrt(max(arg, 0.0))))


def is_symmetric_form(rho: np.ndarray, tol: float = 1e-10) -> bool:
    """True when every two-spin observable besides Mz, Mzz, Mc vanishes."""
    ops = observable_operators(2)
    keep = {"Mz", "Mzz", "Mc", "F"}
    return all(abs(np.sum(op.T * rho)) < tol for k, op in ops.items() if k not in keep) and \
        abs(np.sum(ops["Mxx"].T * rho) - np.sum(ops["Myy"].T * rho)) < tol


def concurrence(rho: np.ndarray, check_closed_form: bool = False, tol: float = 1e-9) -> float:
    """Wootters concurrence of a two-qubit state.

    With ``check_closed_form`` the observable-based formula is evaluated as
    well for states of the symmetric form and the two must agree.
    """
    if n_spins_of(rho) != 2:
        raise ValueError("concurrence is defined here for two spins only")
    lam = wootters_lambdas(rho)
    c = max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))
    if check_closed_form and is_symmetric_form(rho):
        ops = observable_operators(2)
        obs = {k: float(np.sum(ops[k].T * rho).real) for k in ("Mz", "Mzz", "Mc")}
        c2 = concurrence_closed_form(obs["Mz"], obs["Mzz"], obs["Mc"])
        if abs(c - c2) > tol:
            raise AssertionError(f"closed-form concurrence {c2} disagrees with Wootters {c}")
    return c


# -------------------------------------------------------- entropy scaling

REGIMES = ("thermal_alpha_lt1", "principal_block_alpha_eq1", "mixture_alpha_eq1")


@dataclass
class EntropyScalingResult:
    regime: str
    points: list = field(default_factory=list)  # (N, S)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")

    def add(self, n: int, s: float):
        if s < -1e-12 or s > n * math.log(2) + 1e-9:
            raise ValueError(f"entropy {s} outside [0, N ln 2] for N={n}")
        self.points.append((int(n), float(s)))

    def slope(self) -> float:
        """Least-squares slope of S against N."""
        n, s = np.array(self.points, dtype=float).T
        return float(np.polyfit(n, s, 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "S", "regime"])
        for n, s in self.points:
            w.writerow([n, repr(s), self.regime])
        return buf.getvalue()
