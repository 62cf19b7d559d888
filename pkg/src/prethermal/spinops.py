"""Operator algebra for N qubits.

Conventions
-----------
* Single-spin basis order is (up, down); ``sigma_z = diag(1, -1)`` and
  ``sigma_+ = |up><down|``.
* Multi-spin states use ``np.kron`` with site 1 as the leftmost factor, so
  basis index 0 is all-up. Sites are labelled 1..N; site k is bit (N-k) of
  the index, a set bit meaning spin down.
* Spin operators are ``I_a = sigma_a / 2``; collective ``J_z = sum I_z`` and
  ``J_+- = sum sigma_+-``, so ``M`` runs over [-J, J] with ``J <= N/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import combinations, permutations

import numpy as np

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}

MAX_DICKE_SPINS = 12


def site_operator(n_spins: int, i: int, kind: str) -> np.ndarray:
    """Pauli or ladder operator ``kind`` acting on site ``i`` of ``n_spins``."""
    if n_spins < 1:
        raise ValueError("n_spins must be positive")
    if not 1 <= i <= n_spins:
        raise IndexError(f"site {i} out of range 1..{n_spins}")
    try:
        op = PAULI[kind]
    except KeyError:
        raise ValueError(f"unknown operator kind {kind!r}") from None
    eye = PAULI["i"]
    return reduce(np.kron, [op if k == i else eye for k in range(1, n_spins + 1)])


@lru_cache(maxsize=64)
def _collective(n_spins: int, kind: str) -> np.ndarray:
    if kind in ("x", "y", "z"):
        op = 0.5 * sum(site_operator(n_spins, i, kind) for i in range(1, n_spins + 1))
    elif kind in ("plus", "minus"):
        op = sum(site_operator(n_spins, i, kind) for i in range(1, n_spins + 1))
    else:
        raise ValueError(f"unknown collective operator {kind!r}")
    op.setflags(write=False)
    return op


def collective_operator(n_spins: int, kind: str) -> np.ndarray:
    """Collective ``J_kind``: ``J_z = sum sigma_z / 2``, ``J_+ = sum sigma_+``."""
    if n_spins < 1:
        raise ValueError("n_spins must be positive")
    return _collective(n_spins, kind).copy()


def pair_correlator(n_spins: int, i: int, j: int) -> np.ndarray:
    """The scalar product sigma_i . sigma_j (1-based sites)."""
    return sum(site_operator(n_spins, i, a) @ site_operator(n_spins, j, a) for a in "xyz")


def total_spin_squared(n_spins: int) -> np.ndarray:
    """J^2 = sum_{i,j} (sigma_i / 2) . (sigma_j / 2), diagonal terms included."""
    jx, jy, jz = (_collective(n_spins, a) for a in "xyz")
    return jx @ jx + jy @ jy + jz @ jz


def degeneracy(n_spins: int, l: float) -> int:
    """Number of copies of the total-spin-``l`` multiplet among ``n_spins`` qubits."""
    two_l = round(2 * l)
    if abs(2 * l - two_l) > 1e-12 or two_l < 0 or two_l > n_spins or (n_spins - two_l) % 2:
        raise ValueError(f"invalid total spin {l} for {n_spins} spins")
    up = (n_spins + two_l) // 2  # N/2 + l
    down = (n_spins - two_l) // 2  # N/2 - l
    num = (two_l + 1) * math.factorial(n_spins)
    den = math.factorial(up + 1) * math.factorial(down)
    assert num % den == 0
    return num // den


def allowed_spins(n_spins: int) -> list[float]:
    """Total-spin values N/2, N/2 - 1, ..., down to 0 or 1/2."""
    return [n_spins / 2 - k for k in range(n_spins // 2 + 1)]


@dataclass(frozen=True)
class DickeBasis:
    """Collective basis labelled by (J, copy, M).

    ``U[:, k]`` is the Zeeman-basis vector of ``labels[k]``. Labels are
    ordered by J descending, copy ascending, M descending. Copies are
    1-based and come from coupling one spin at a time, processing parent
    multiplets in order of increasing spin, so for N = 3 copy 1 of J = 1/2
    contains the (1, 2) singlet and copy 2 the symmetric combination.
    """

    n_spins: int
    labels: tuple[tuple[float, int, float], ...]
    U: np.ndarray

    def index(self, J: float, M: float, copy: int = 1) -> int:
        return self._lookup()[(float(J), int(copy), float(M))]

    def _lookup(self):
        return {lab: k for k, lab in enumerate(self.labels)}

    def vector(self, J: float, M: float, copy: int = 1) -> np.ndarray:
        return self.U[:, self.index(J, M, copy)].copy()

    def multiplets(self) -> dict[tuple[float, int], list[int]]:
        """Column indices of each (J, copy) multiplet, ordered M = J ... -J."""
        out: dict[tuple[float, int], list[int]] = {}
        for k, (J, c, _) in enumerate(self.labels):
            out.setdefault((J, c), []).append(k)
        return out

    def spin_blocks(self) -> dict[float, list[int]]:
        """Column indices grouped by J (all copies)."""
        out: dict[float, list[int]] = {}
        for k, (J, _, _) in enumerate(self.labels):
            out.setdefault(J, []).append(k)
        return out

    def to_dicke(self, op: np.ndarray) -> np.ndarray:
        return self.U.conj().T @ op @ self.U

    def from_dicke(self, op: np.ndarray) -> np.ndarray:
        return self.U @ op @ self.U.conj().T


def _couple(J: float, vecs: np.ndarray) -> list[tuple[float, np.ndarray]]:
    # vecs rows are |J, M> for M = J ... -J; returns the multiplets of J (x) 1/2
    up, down = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    dim = vecs.shape[1] * 2

    def old(M):
        k = round(J - M)
        return vecs[k] if 0 <= k < vecs.shape[0] and abs(M) <= J + 1e-12 else None

    out = []
    for Jn, sign in ((J + 0.5, +1), (J - 0.5, -1)):
        if Jn < 0:
            continue
        rows = []
        for k in range(round(2 * Jn) + 1):
            M = Jn - k
            v = np.zeros(dim)
            lo, hi = old(M - 0.5), old(M + 0.5)
            if sign > 0:
                c_up = math.sqrt((J + M + 0.5) / (2 * J + 1))
                c_dn = math.sqrt((J - M + 0.5) / (2 * J + 1))
            else:
                c_up = -math.sqrt((J - M + 0.5) / (2 * J + 1))
                c_dn = math.sqrt((J + M + 0.5) / (2 * J + 1))
            if lo is not None:
                v += c_up * np.kron(lo, up)
            if hi is not None:
                v += c_dn * np.kron(hi, down)
            rows.append(v)
        out.append((Jn, np.array(rows)))
    return out


@lru_cache(maxsize=16)
def build_dicke_basis(n_spins: int) -> DickeBasis:
    """Collective basis from sequential Clebsch-Gordan coupling."""
    if not 1 <= n_spins <= MAX_DICKE_SPINS:
        raise ValueError(f"dense Dicke construction supports 1..{MAX_DICKE_SPINS} spins")
    mults: list[tuple[float, np.ndarray]] = [(0.5, np.eye(2))]
    for _ in range(n_spins - 1):
        mults.sort(key=lambda m: m[0])  # stable: keeps copy order within J
        mults = [new for J, vecs in mults for new in _couple(J, vecs)]

    copies: dict[float, int] = {}
    tagged = []
    for J, vecs in mults:
        copies[J] = copies.get(J, 0) + 1
        tagged.append((J, copies[J], vecs))
    tagged.sort(key=lambda m: (-m[0], m[1]))

    labels, cols = [], []
    for J, c, vecs in tagged:
        for k, v in enumerate(vecs):
            labels.append((float(J), c, float(J - k)))
            cols.append(v)
    U = np.array(cols, dtype=complex).T
    U.setflags(write=False)
    return DickeBasis(n_spins, tuple(labels), U)


# ---------------------------------------------------------------- states

def n_spins_of(rho: np.ndarray) -> int:
    d = rho.shape[0]
    n = d.bit_length() - 1
    if rho.ndim != 2 or rho.shape != (d, d) or d != 1 << n or n < 1:
        raise ValueError(f"expected a 2^N x 2^N matrix, got shape {rho.shape}")
    return n


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> int:
    """Check Hermiticity, unit trace and positivity; return the spin count."""
    n = n_spins_of(rho)
    herm = np.abs(rho - rho.conj().T).max()
    if herm > tol:
        raise ValueError(f"density matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise ValueError(f"density matrix trace is {tr.real:.12g}, expected 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -tol:
        raise ValueError(f"density matrix is not positive (min eigenvalue {lam:.3g})")
    return n


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def product_ket(pattern: str) -> np.ndarray:
    """Zeeman basis ket from a string such as ``"udd"`` (u = up, d = down)."""
    single = {"u": np.array([1, 0], dtype=complex), "d": np.array([0, 1], dtype=complex)}
    try:
        return reduce(np.kron, [single[ch] for ch in pattern.lower()])
    except KeyError:
        raise ValueError(f"pattern must contain only 'u' and 'd', got {pattern!r}") from None


def maximally_mixed(n_spins: int) -> np.ndarray:
    d = 1 << n_spins
    return np.eye(d, dtype=complex) / d


def all_up(n_spins: int) -> np.ndarray:
    return ket_to_dm(product_ket("u" * n_spins))


def all_down(n_spins: int) -> np.ndarray:
    return ket_to_dm(product_ket("d" * n_spins))


def singlet() -> np.ndarray:
    return ket_to_dm(np.array([0, 1, -1, 0]) / math.sqrt(2))


def dicke_state(n_spins: int, J: float, M: float, copy: int = 1) -> np.ndarray:
    return ket_to_dm(build_dicke_basis(n_spins).vector(J, M, copy))


PRESETS = ("mixed", "up", "down", "singlet", "dicke")


def preset_state(name: str, n_spins: int, J: float | None = None,
                 M: float | None = None, copy: int = 1) -> np.ndarray:
    """Named initial states: mixed, up, down, singlet (N=2) and dicke."""
    if name == "mixed":
        return maximally_mixed(n_spins)
    if name == "up":
        return all_up(n_spins)
    if name == "down":
        return all_down(n_spins)
    if name == "singlet":
        if n_spins != 2:
            raise ValueError("the singlet preset requires two spins")
        return singlet()
    if name == "dicke":
        if J is None or M is None:
            raise ValueError("the dicke preset needs J and M")
        return dicke_state(n_spins, J, M, copy)
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")


# ----------------------------------------------------------- observables

def _spin(n, i, a):
    return 0.5 * site_operator(n, i, a)


@lru_cache(maxsize=16)
def observable_operators(n_spins: int) -> dict[str, np.ndarray]:
    """Hermitian operators behind :func:`extract_observables`.

    Pair sums run over unordered pairs. For two spins this gives the nine
    symmetric observables, ``Mc = Mxx + Myy``, ``F = Mzz + Mc`` and six
    antisymmetric diagnostics (``D*`` and ``A**``). For three spins it adds
    ``Mcz`` and ``Mzzz``.
    """
    n = n_spins
    ops = {"Mz": sum(_spin(n, i, "z") for i in range(1, n + 1))}
    if n >= 2:
        pairs = list(combinations(range(1, n + 1), 2))

        def pairsum(a, b):
            return sum(_spin(n, i, a) @ _spin(n, j, b) for i, j in pairs)

        ops["Mzz"] = pairsum("z", "z")
        ops["Mc"] = pairsum("x", "x") + pairsum("y", "y")
        ops["F"] = ops["Mzz"] + ops["Mc"]
    if n == 2:
        for a in "xy":
            ops[f"M{a}"] = _spin(2, 1, a) + _spin(2, 2, a)
        ops["Mxx"] = pairsum("x", "x")
        ops["Myy"] = pairsum("y", "y")
        for a, b in ("xy", "xz", "yz"):
            ops[f"M{a}{b}"] = pairsum(a, b) + pairsum(b, a)
            ops[f"A{a}{b}"] = pairsum(a, b) - pairsum(b, a)
        for a in "xyz":
            ops[f"D{a}"] = _spin(2, 1, a) - _spin(2, 2, a)
    if n == 3:
        mcz = 0
        for i, j, k in permutations(range(1, 4)):
            if i < j:
                mcz = mcz + sum(_spin(3, i, a) @ _spin(3, j, a) @ _spin(3, k, "z") for a in "xy")
        ops["Mcz"] = mcz
        ops["Mzzz"] = _spin(3, 1, "z") @ _spin(3, 2, "z") @ _spin(3, 3, "z")
    for op in ops.values():
        op.setflags(write=False)
    return ops


def expectation(rho: np.ndarray, op: np.ndarray, tol: float = 1e-10) -> float:
    """Real expectation value Tr(op rho) of a Hermitian operator."""
    if rho.shape != op.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape} vs operator {op.shape}")
    val = np.sum(op.T * rho)
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has non-negligible imaginary part {val.imag:.3g}")
    return float(val.real)


def extract_observables(rho: np.ndarray) -> dict[str, float]:
    """Named observables of an N-spin state (see :func:`observable_operators`)."""
    n = n_spins_of(rho)
    return {name: expectation(rho, op) for name, op in observable_operators(n).items()}


def symmetric_two_spin_state(Mz: float, Mzz: float, Mc: float) -> np.ndarray:
    """Two-spin state with only Mz, Mzz and Mc nonzero.

    rho = 1/4 + (Mz/2)(Iz x 1 + 1 x Iz) + 4 Mzz Iz x Iz + 2 Mc (Ix x Ix + Iy x Iy)
    """
    ops = observable_operators(2)
    return (np.eye(4) / 4 + 0.5 * Mz * ops["Mz"] + 4 * Mzz * ops["Mzz"]
            + 2 * Mc * ops["Mc"]).astype(complex)


def two_spin_state_from_observables(obs: dict) -> np.ndarray:
    """Exchange-symmetric two-spin state from the nine symmetric observables.

    Missing entries count as zero. If only ``Mc`` is given (not ``Mxx`` and
    ``Myy``) it is split evenly between the two.
    """
    g = {k: float(obs.get(k, 0.0)) for k in
         ("Mx", "My", "Mz", "Mxx", "Myy", "Mzz", "Mxy", "Mxz", "Myz")}
    if "Mxx" not in obs and "Myy" not in obs:
        g["Mxx"] = g["Myy"] = 0.5 * float(obs.get("Mc", 0.0))
    s = {a: PAULI[a] for a in "xyz"}
    eye = PAULI["i"]
    rho = np.kron(eye, eye).astype(complex)
    for a in "xyz":
        rho += g[f"M{a}"] * (np.kron(s[a], eye) + np.kron(eye, s[a]))
        rho += 4 * g[f"M{a}{a}"] * np.kron(s[a], s[a])
    for a, b in ("xy", "xz", "yz"):
        rho += 2 * g[f"M{a}{b}"] * (np.kron(s[a], s[b]) + np.kron(s[b], s[a]))
    return rho / 4
