"""Time evolution: full master equation, reduced observable systems,
collective-block populations and prethermal plateau detection.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from . import _core
from .bathmodel import RateSet
from .liouvillian import Superoperator, vec
from .measures import purity, von_neumann_entropy
from .spinops import (observable_operators, pair_correlator,
                      two_spin_state_from_observables, validate_density_matrix)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and sampling for the adaptive Dormand-Prince integrator.

    With ``spacing="linear"`` samples are taken every ``record_every``; with
    ``"log"`` there are ``n_samples`` geometrically spaced times between
    ``t_first`` and ``t_max`` (plus t = 0), which resolves both fast and
    slow stages of a two-timescale run.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    t_max: float = 20.0
    max_step: float = math.inf
    record_every: float = 0.1
    spacing: str = "linear"
    n_samples: int = 400
    t_first: float = 1e-3
    h0: float = 1e-3
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.max_step > 0 or not self.h0 > 0:
            raise ValueError("step sizes must be positive")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing must be 'linear' or 'log'")
        if self.spacing == "linear" and not self.record_every > 0:
            raise ValueError("record_every must be positive")
        if self.spacing == "log" and not (0 < self.t_first < self.t_max and self.n_samples >= 2):
            raise ValueError("log spacing needs 0 < t_first < t_max and n_samples >= 2")

    def times(self) -> np.ndarray:
        if self.spacing == "linear":
            n = int(math.floor(self.t_max / self.record_every + 1e-9))
            t = np.arange(n + 1) * self.record_every
            if self.t_max - t[-1] > 1e-12 * self.t_max:
                t = np.append(t, self.t_max)
            return t
        return np.concatenate([[0.0], np.geomspace(self.t_first, self.t_max, self.n_samples)])


def _run(kind, args, y0, times, cfg: IntegratorConfig):
    common = (cfg.rel_tol, cfg.abs_tol, cfg.h0, cfg.max_step, cfg.max_steps)
    if kind == "dense":
        out, nacc, nrej, status = _core.integrate_dense(args, y0, times, *common)
    else:
        out, nacc, nrej, status = _core.integrate_lindblad(*args, y0, times, *common)
    if status == _core.STATUS_UNDERFLOW:
        raise IntegrationError(
            "step size underflow; the problem is too stiff for the explicit integrator "
            "over this horizon, use a reduced system or the steady-state solver")
    if status == _core.STATUS_MAX_STEPS:
        raise IntegrationError(f"step budget of {cfg.max_steps} exhausted")
    if status != _core.STATUS_OK:
        raise IntegrationError(f"integrator returned status {status}")
    return out, {"accepted_steps": int(nacc), "rejected_steps": int(nrej)}


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution. ``observables`` maps a label to a column array."""

    times: np.ndarray
    observables: dict
    purity: np.ndarray | None
    entropy: np.ndarray | None
    conserved_drift: np.ndarray | None
    final_state: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def observable_set(self, k: int) -> dict[str, float]:
        return {name: float(col[k]) for name, col in self.observables.items()}

    def signal(self, name: str) -> np.ndarray:
        if name == "purity":
            if self.purity is None:
                raise KeyError("purity is not available for this trajectory")
            return self.purity
        if name == "entropy":
            if self.entropy is None:
                raise KeyError("entropy is not available for this trajectory")
            return self.entropy
        return self.observables[name]

    def columns(self) -> list[str]:
        cols = ["t", *self.observables]
        cols += [c for c in ("purity", "entropy", "conserved_drift") if getattr(self, c) is not None]
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns()
        w.writerow(cols)
        data = [self.times, *self.observables.values()]
        data += [getattr(self, c) for c in cols[len(self.observables) + 1:]]
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {"times": self.times.tolist(),
               "observables": {k: v.tolist() for k, v in self.observables.items()},
               "metadata": self.metadata}
        for c in ("purity", "entropy", "conserved_drift"):
            v = getattr(self, c)
            out[c] = None if v is None else v.tolist()
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ---------------------------------------------------------- full evolution

def evolve_full(L: Superoperator, rho0: np.ndarray, cfg: IntegratorConfig | None = None,
                method: str = "matrix_free", keep_states: bool = False,
                metadata: dict | None = None) -> Trajectory:
    """Integrate d vec(rho)/dt = L vec(rho) and record diagnostics.

    ``method="matrix_free"`` applies the spin generator directly from the
    rates stored on ``L``; ``"dense"`` multiplies by the assembled matrix.
    Trace drift beyond 1e-8, loss of Hermiticity or eigenvalues below -1e-8
    raise instead of being corrected.
    """
    cfg = cfg or IntegratorConfig()
    n = validate_density_matrix(rho0, tol=1e-8)
    if n != L.n_spins:
        raise ValueError("rho0 does not match the Liouvillian dimension")
    times = cfg.times()
    y0 = vec(np.asarray(rho0, dtype=complex))
    if method == "matrix_free":
        r = L.rates
        out, stats = _run("lindblad", (n, r.A, r.B, r.alpha), y0, times, cfg)
    elif method == "dense":
        out, stats = _run("dense", L.data, y0, times, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")

    d = 1 << n
    states = out.reshape(len(times), d, d).transpose(0, 2, 1)  # undo column stacking
    tr = np.einsum("kii->k", states)
    drift = np.abs(tr - 1).max()
    if drift > 1e-8:
        raise IntegrationError(f"trace drift {drift:.3g} exceeds 1e-8")
    herm = np.abs(states - states.conj().transpose(0, 2, 1)).max()
    if herm > 1e-8:
        raise IntegrationError(f"Hermiticity lost: deviation {herm:.3g}")
    herm_states = 0.5 * (states + states.conj().transpose(0, 2, 1))
    lam_min = np.array([np.linalg.eigvalsh(s)[0] for s in herm_states])
    if lam_min.min() < -1e-8:
        raise IntegrationError(f"state left the positive cone: eigenvalue {lam_min.min():.3g}")

    obs = {name: (out @ vec(op.T)).real for name, op in observable_operators(n).items()}
    pur = np.array([purity(s) for s in herm_states])
    ent = np.array([von_neumann_entropy(s, tol=1e-8) for s in herm_states])
    if n >= 2:
        pairs = np.array([(out @ vec(pair_correlator(n, i, j).T)).real
                          for i, j in combinations(range(1, n + 1), 2)])
        cdrift = np.abs(pairs - pairs[:, :1]).max(axis=0)
    else:
        cdrift = np.zeros(len(times))
    meta = {"method": method, "backend": _core.BACKEND, "n_spins": n,
            "A": L.rates.A, "B": L.rates.B, "alpha": L.rates.alpha,
            "trace_drift": float(drift), "min_eigenvalue": float(lam_min.min()), **stats}
    meta.update(metadata or {})
    traj = Trajectory(times, obs, pur, ent, cdrift, herm_states[-1].copy(), meta)
    if keep_states:
        object.__setattr__(traj, "states", herm_states)
    return traj


# --------------------------------------------------------- reduced systems

TWO_SPIN_EQ13 = ("Mz", "Mzz", "Mc")
TWO_SPIN_NINE = ("Mx", "My", "Mz", "Mxx", "Myy", "Mzz", "Mxy", "Mxz", "Myz")
THREE_SPIN = ("Mz", "Mc", "Mzz", "Mcz", "Mzzz")


def two_spin_generator(rates: RateSet, system: str = "eq13") -> np.ndarray:
    """Affine generator of the two-spin observables, augmented by a constant 1.

    ``"eq13"`` is the closed (Mz, Mzz, Mc) system. ``"nine"`` is the full
    symmetric set; its Mz equation couples to Mxx + Myy with 4 alpha M0 R1.
    """
    R, M0, a = rates.R1, rates.M0, rates.alpha
    if system == "eq13":
        return R * np.array([
            [-2, 0, 4 * M0 * a, 2 * M0],
            [M0, -4, 2 * a, 0],
            [-M0 * a, 4 * a, -2, 0],
            [0, 0, 0, 0],
        ], dtype=float)
    if system == "nine":
        idx = {k: i for i, k in enumerate(TWO_SPIN_NINE)}
        G = np.zeros((10, 10))
        one = 9

        def put(row, col, value):
            G[idx[row], one if col == "1" else idx[col]] += R * value

        put("Mx", "Mx", -1); put("Mx", "Mxz", -2 * a * M0)
        put("My", "My", -1); put("My", "Myz", -2 * a * M0)
        put("Mz", "Mz", -2); put("Mz", "1", 2 * M0)
        put("Mz", "Mxx", 4 * a * M0); put("Mz", "Myy", 4 * a * M0)
        for c in ("Mxx", "Myy"):
            put(c, c, -2); put(c, "Mzz", 2 * a); put(c, "Mz", -0.5 * a * M0)
        put("Mzz", "Mzz", -4); put("Mzz", "Mz", M0)
        put("Mzz", "Mxx", 2 * a); put("Mzz", "Myy", 2 * a)
        put("Mxz", "Mxz", -(3 + 2 * a)); put("Mxz", "Mx", (a / 2 + 1) * M0)
        put("Myz", "Myz", -(3 + 2 * a)); put("Myz", "My", (a / 2 + 1) * M0)
        put("Mxy", "Mxy", -2)
        return G
    raise ValueError(f"unknown two-spin system {system!r}")


def three_spin_generator(rates: RateSet) -> np.ndarray:
    """Affine generator of (Mz, Mc, Mzz, Mcz, Mzzz) plus a constant 1.

    Mc and Mzz sum over unordered pairs, Mcz over an unordered pair times
    the z component of the third spin, and Mzzz is the single triple
    product. The Mc coupling in the Mzz row enters with a plus sign, which
    keeps Mc + Mzz conserved at alpha = 1.
    """
    R, M0, a = rates.R1, rates.M0, rates.alpha
    return R * np.array([
        [-2, 4 * a * M0, 0, 0, 0, 3 * M0],
        [-2 * a * M0, -2, 4 * a, -4 * a * M0, 0, 0],
        [2 * M0, 2 * a, -4, 4 * a * M0, 0, 0],
        [0, (1 + a) * M0, -2 * a * M0, -4 * (1 + a), 12 * a, 0],
        [0, 0, M0, 2 * a, -6, 0],
        [0, 0, 0, 0, 0, 0],
    ], dtype=float)


def _reduced(G, names, init, cfg):
    missing = [k for k in names if k not in init]
    if missing:
        raise ValueError(f"initial observables missing: {missing}")
    y0 = np.array([float(init[k]) for k in names] + [1.0], dtype=complex)
    times = cfg.times()
    out, stats = _run("dense", G.astype(complex), y0, times, cfg)
    return times, {k: out[:, i].real.copy() for i, k in enumerate(names)}, stats


def evolve_two_spin_reduced(rates: RateSet, init: dict, cfg: IntegratorConfig | None = None,
                            system: str = "eq13") -> Trajectory:
    """Integrate the two-spin observable equations.

    ``init`` needs Mz, Mzz, Mc (``eq13``) or the nine symmetric observables
    (``nine``). Purity and entropy come from the exchange-symmetric state
    rebuilt from the observables; the drift column tracks
    <sigma_1 . sigma_2> = 4 (Mzz + Mc).
    """
    cfg = cfg or IntegratorConfig()
    names = TWO_SPIN_EQ13 if system == "eq13" else TWO_SPIN_NINE
    times, obs, stats = _reduced(two_spin_generator(rates, system), names, init, cfg)
    if system == "nine":
        obs["Mc"] = obs["Mxx"] + obs["Myy"]
    obs["F"] = obs["Mzz"] + obs["Mc"]
    states = [two_spin_state_from_observables({k: v[i] for k, v in obs.items() if k != "F"})
              for i in range(len(times))]
    pur = np.array([purity(s) for s in states])
    ent = np.array([von_neumann_entropy(s, tol=1e-8) for s in states])
    drift = 4 * np.abs(obs["F"] - obs["F"][0])
    meta = {"system": system, "n_spins": 2, "A": rates.A, "B": rates.B, "alpha": rates.alpha,
            **stats}
    return Trajectory(times, obs, pur, ent, drift, states[-1], meta)


def evolve_three_spin_reduced(rates: RateSet, init: dict,
                              cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the five coupled three-spin observable equations.

    The drift column tracks sum_{i<j} <sigma_i . sigma_j> = 4 (Mzz + Mc);
    purity and entropy are not determined by these observables.
    """
    cfg = cfg or IntegratorConfig()
    times, obs, stats = _reduced(three_spin_generator(rates), THREE_SPIN, init, cfg)
    s = obs["Mzz"] + obs["Mc"]
    meta = {"system": "three_spin", "n_spins": 3, "A": rates.A, "B": rates.B,
            "alpha": rates.alpha, **stats}
    return Trajectory(times, obs, None, None, 4 * np.abs(s - s[0]), None, meta)


# ------------------------------------------------------ collective blocks

@dataclass(frozen=True)
class BlockPopulations:
    """Populations of one J block, ``P[k]`` belonging to M = -J + k.

    Here M labels energy: M = -J is the lowest level, reached by emission.
    Energy label M is the J_z eigenvalue -M, so ``P`` is already in the
    Dicke-basis order J_z = J, J-1, ..., -J.
    """

    J: float
    P: np.ndarray

    def __post_init__(self):
        two_j = round(2 * self.J)
        if abs(2 * self.J - two_j) > 1e-12 or two_j < 0:
            raise ValueError(f"J must be a non-negative half-integer, got {self.J}")
        if len(self.P) != two_j + 1:
            raise ValueError(f"expected {two_j + 1} populations for J={self.J}")
        if np.min(self.P) < -1e-12:
            raise ValueError("populations must be non-negative")

    @property
    def M(self) -> np.ndarray:
        return -self.J + np.arange(len(self.P))

    def total(self) -> float:
        return float(np.sum(self.P))


@dataclass(frozen=True)
class CollectiveTrajectory:
    J: float
    times: np.ndarray
    P: np.ndarray  # (n_times, 2J+1)

    def at(self, k: int) -> BlockPopulations:
        return BlockPopulations(self.J, self.P[k].copy())

    def final(self) -> BlockPopulations:
        return self.at(len(self.times) - 1)


def zeta(J: float, M):
    return 2 * (J - M) * (J + M + 1)


def collective_generator(J: float, A: float, B: float) -> np.ndarray:
    """Rate matrix of dP_M/dt = -zeta(M)(A P_M - B P_{M+1}) - zeta(-M)(B P_M - A P_{M-1}).

    Neighbours outside [-J, J] never appear: their coefficients
    zeta(J) and zeta(-(-J)) vanish.
    """
    n = round(2 * J) + 1
    G = np.zeros((n, n))
    for k in range(n):
        M = -J + k
        up, down = zeta(J, M), zeta(J, -M)
        G[k, k] = -up * A - down * B
        if k + 1 < n:
            G[k, k + 1] = up * B
        if k > 0:
            G[k, k - 1] = down * A
    return G


def evolve_collective(J: float, A: float, B: float, P0: BlockPopulations,
                      cfg: IntegratorConfig | None = None) -> CollectiveTrajectory:
    """Population dynamics inside one J block at alpha = 1."""
    cfg = cfg or IntegratorConfig()
    if abs(P0.J - J) > 1e-12:
        raise ValueError("initial populations belong to a different block")
    times = cfg.times()
    G = collective_generator(J, A, B)
    out, _ = _run("dense", G.astype(complex), P0.P.astype(complex), times, cfg)
    P = out.real
    if P.min() < -1e-10:
        raise IntegrationError(f"negative population {P.min():.3g} in block J={J}")
    drift = np.abs(P.sum(axis=1) - P0.total()).max()
    if drift > 1e-8:
        raise IntegrationError(f"block population drift {drift:.3g}")
    return CollectiveTrajectory(J, times, P)


# ---------------------------------------------------------------- plateau

@dataclass(frozen=True)
class PlateauReport:
    detected: bool
    t_pre: float = math.nan
    t_R: float = math.nan
    plateau_value: float = math.nan
    plateau_mean: float = math.nan
    final_value: float = math.nan
    t_1: float = math.nan
    stable: bool = False
    signal: str = "purity"

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and math.isnan(v) else v
        return {k: clean(v) for k, v in self.__dict__.items()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def detect_plateau(traj: Trajectory, signal: str = "purity", eps: float | None = None,
                   delta: float = 0.01, R1: float = 1.0,
                   reference: float | None = None) -> PlateauReport:
    """Locate a quasi-stationary stage that precedes the final state.

    A sample belongs to a plateau when |ds/dt| < eps (default 1e-4 R1 times
    the signal range) and the signal is further than ``delta`` times the
    range from the reference final value. The longest such run gives T_pre
    (entry) and T_R (exit). ``plateau_value`` extrapolates the slow decay
    on the run back to t = 0, which removes the drift of a finite plateau;
    ``plateau_mean`` is the plain average over the run and ``t_1`` the time
    at which the signal is halfway from the plateau to the final value.

    ``reference`` (or ``traj.metadata["reference_final"]``) is the value the
    signal would relax to without conservation laws. When the trajectory
    ends on a plateau away from it, the plateau is reported as stable with
    T_R = t_max.
    """
    t = traj.times
    s = traj.signal(signal)
    if reference is None:
        reference = traj.metadata.get("reference_final")
    s_final = float(s[-1])
    ref = s_final if reference is None else float(reference)
    span = max(float(s.max()), ref) - min(float(s.min()), ref)
    if span == 0:
        return PlateauReport(False, final_value=s_final, signal=signal)
    eps = 1e-4 * R1 * span if eps is None else eps
    ds = np.gradient(s, t)
    if abs(ds[-1]) > eps:
        raise ValueError("trajectory has not settled: extend t_max before detecting a plateau")
    mask = (np.abs(ds) < eps) & (np.abs(s - ref) > delta * span)
    runs, start = [], None
    for k, m in enumerate(np.append(mask, False)):
        if m and start is None:
            start = k
        elif not m and start is not None:
            runs.append((start, k - 1))
            start = None
    runs = [r for r in runs if r[1] > r[0]]
    if not runs:
        return PlateauReport(False, final_value=s_final, signal=signal)
    i0, i1 = max(runs, key=lambda r: t[r[1]] - t[r[0]])
    stable = i1 == len(t) - 1
    seg = slice(i0, i1 + 1)
    mean = float(np.mean(s[seg]))
    if stable:
        return PlateauReport(True, float(t[i0]), float(t[-1]), s_final, mean, s_final,
                             math.nan, True, signal)
    value = _slow_intercept(t[seg], s[seg], s_final)
    if value is None:
        value = mean
    half = 0.5 * abs(value - s_final)
    after = np.nonzero((t > t[i0]) & (np.abs(s - s_final) < half))[0]
    t1 = float(t[after[0]]) if after.size else math.nan
    return PlateauReport(True, float(t[i0]), float(t[i1]), float(value), mean, s_final,
                         t1, False, signal)


def _slow_intercept(t, s, s_final):
    """Fit s = s_final + a u + b u^2 with u = exp(-lam t); return the u = 1 value.

    A quadratic in u covers signals that are quadratic in the state, such
    as the purity, whose slow decay carries both lam and 2 lam.
    """
    if len(t) < 4 or t[-1] <= t[0]:
        return None
    dev = s - s_final

    def fit(log_lam):
        u = np.exp(-math.exp(log_lam) * t)
        X = np.column_stack([u, u * u])
        coef, *_ = np.linalg.lstsq(X, dev, rcond=None)
        return coef, float(np.sum((X @ coef - dev) ** 2))

    lo, hi = math.log(0.01 / t[-1]), math.log(10.0 / t[0] if t[0] > 0 else 1e3 / t[-1])
    res = minimize_scalar(lambda x: fit(x)[1], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    coef, _ = fit(res.x)
    return float(s_final + coef.sum())


def relaxation_time(traj: Trajectory, signal: str, target: float, frac: float = 0.01) -> float:
    """Earliest time after which the signal stays within ``frac`` of its range from target."""
    s = traj.signal(signal)
    span = max(float(np.ptp(s)), 1e-300)
    outside = np.nonzero(np.abs(s - target) > frac * span)[0]
    if outside.size == 0:
        return float(traj.times[0])
    k = outside[-1] + 1
    return float(traj.times[k]) if k < len(traj.times) else math.inf
