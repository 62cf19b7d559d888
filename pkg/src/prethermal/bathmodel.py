"""Bath spectral densities, relaxation constants and spatial correlation.

Units: hbar = k_B = 1. Rates are in units of inverse time; by default the
time unit is chosen so that the single-spin relaxation rate R1 = A + B is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

SpatialKind = Literal["constant", "lorentzian", "exponential", "gaussian"]
_KINDS = ("constant", "lorentzian", "exponential", "gaussian")


@dataclass(frozen=True)
class SpatialModel:
    """Spatial correlation function alpha(r / xi) of the bath.

    ``constant`` ignores the geometry and returns ``alpha_fixed``; the
    other kinds decay from 1 at r = 0.
    """

    kind: SpatialKind = "constant"
    alpha_fixed: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown spatial model {self.kind!r}; expected one of {_KINDS}")
        if not 0.0 <= self.alpha_fixed <= 1.0:
            raise ValueError("alpha_fixed must lie in [0, 1]")


@dataclass(frozen=True)
class BathParams:
    """Physical bath constants.

    Parameters
    ----------
    gamma0 : float
        Coupling rate |g_k|^2 omega0^2 / v^3.
    omega0 : float
        Larmor (Zeeman) angular frequency.
    beta : float
        Inverse bath temperature.
    xi : float
        Bath correlation length.
    model : SpatialModel
        Functional form of the spatial correlation.
    """

    gamma0: float
    omega0: float
    beta: float
    xi: float = 1.0
    model: SpatialModel = field(default_factory=SpatialModel)

    def __post_init__(self):
        for name in ("gamma0", "omega0", "beta", "xi"):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class RateSet:
    """Spectral densities and the constants derived from them.

    ``A`` is the absorption rate, ``B`` the emission rate and ``alpha`` the
    spatial correlation multiplying every cross-spin dissipator.
    """

    A: float
    B: float
    alpha: float

    def __post_init__(self):
        if self.A < 0 or self.B <= 0:
            raise ValueError("rates must satisfy A >= 0 and B > 0")
        if self.B < self.A:
            raise ValueError("emission rate B must not be smaller than absorption rate A")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def R1(self) -> float:
        return self.A + self.B

    @property
    def M0(self) -> float:
        return (self.B - self.A) / (self.B + self.A)

    @property
    def beta_omega0(self) -> float:
        """Dimensionless inverse temperature recovered from detailed balance."""
        if self.A == 0:
            return math.inf
        return math.log(self.B / self.A)

    def with_alpha(self, alpha: float) -> "RateSet":
        return RateSet(self.A, self.B, alpha)

    @classmethod
    def from_beta_omega0(cls, beta_omega0: float, alpha: float, R1: float = 1.0) -> "RateSet":
        """Rates for a given beta*omega0, scaled so that A + B = R1."""
        if beta_omega0 <= 0:
            raise ValueError("beta_omega0 must be positive")
        if R1 <= 0:
            raise ValueError("R1 must be positive")
        m0 = math.tanh(beta_omega0 / 2)
        return cls(A=R1 * (1 - m0) / 2, B=R1 * (1 + m0) / 2, alpha=alpha)

    @classmethod
    def from_magnetization(cls, M0: float, alpha: float, R1: float = 1.0) -> "RateSet":
        if not 0 < M0 < 1:
            raise ValueError("M0 must lie in (0, 1)")
        return cls(A=R1 * (1 - M0) / 2, B=R1 * (1 + M0) / 2, alpha=alpha)


def bose_occupation(omega: float, beta: float) -> float:
    """Mean occupation 1 / (exp(beta*omega) - 1) of a bosonic mode."""
    if omega <= 0 or beta <= 0:
        raise ValueError("omega and beta must be positive")
    x = beta * omega
    if x > 700:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def spectral_rates(p: BathParams) -> tuple[float, float]:
    """Absorption and emission rates ``(A, B)`` at the Larmor frequency."""
    n = bose_occupation(p.omega0, p.beta)
    return p.gamma0 * n, p.gamma0 * (1.0 + n)


def spatial_correlation(m: SpatialModel, r: float, xi: float, omega: float = 1.0) -> float:
    """Evaluate alpha at separation ``r``.

    ``omega`` only enters the Lorentzian form xi^2 / (xi^2 + omega^2 r^2).
    """
    if r < 0:
        raise ValueError("separation must be non-negative")
    if xi <= 0:
        raise ValueError("correlation length must be positive")
    if m.kind == "constant":
        value = m.alpha_fixed
    elif m.kind == "lorentzian":
        value = xi**2 / (xi**2 + omega**2 * r**2)
    elif m.kind == "exponential":
        value = math.exp(-r / xi)
    else:
        value = math.exp(-((r / xi) ** 2))
    assert 0.0 <= value <= 1.0
    return value


def rate_set(p: BathParams, r: float, omega: float | None = None) -> RateSet:
    """Full rate set for spins a distance ``r`` apart."""
    a, b = spectral_rates(p)
    alpha = spatial_correlation(p.model, r, p.xi, p.omega0 if omega is None else omega)
    return RateSet(a, b, alpha)
