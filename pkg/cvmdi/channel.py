"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/channel.py
#########################################

Untrusted links: fiber loss, Eve's correlated two-mode attack and the
excess-noise referral between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, UnphysicalStateError
from .gaussian import CovarianceMatrix, physicality_floor

DEFAULT_ATTENUATION_DB_PER_KM = 0.2


class Geometry(str, Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class AttackStrategy(str, Enum):
    NEGATIVE_EPR = "negative_epr"
    ONE_MODE = "one_mode"


def channel_transmittance(
    length_km: float, alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM
) -> float:
    length_km = float(length_km)
    if not length_km >= 0.0:
        raise DomainError(f"fiber length must be >= 0 km, got {length_km!r}")
    if not alpha_db_per_km >= 0.0:
        raise DomainError(f"attenuation must be >= 0 dB/km, got {alpha_db_per_km!r}")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def link_lengths(distance_km: float, geometry: Geometry | str) -> tuple[float, float]:
    """(L_AC, L_BC) for a total Alice-Bob distance."""
    distance_km = float(distance_km)
    if not distance_km >= 0.0:
        raise DomainError(f"distance must be >= 0 km, got {distance_km!r}")
    geometry = Geometry(geometry)
    if geometry is Geometry.SYMMETRIC:
        return distance_km / 2.0, distance_km / 2.0
    return 0.0, distance_km


@dataclass(frozen=True)
class ChannelParams:
    eta_a: float
    eta_b: float
    epsilon_1: float = 0.01
    epsilon_2: float = 0.01
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM

    def __post_init__(self) -> None:
        for name in ("eta_a", "eta_b"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise DomainError(f"{name} must be in (0, 1], got {v!r}")
        for name in ("epsilon_1", "epsilon_2"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise DomainError(f"{name} must be >= 0, got {v!r}")

    @classmethod
    def from_lengths(
        cls,
        l_ac_km: float,
        l_bc_km: float,
        epsilon_1: float = 0.01,
        epsilon_2: float | None = None,
        alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
    ) -> ChannelParams:
        return cls(
            eta_a=channel_transmittance(l_ac_km, alpha_db_per_km),
            eta_b=channel_transmittance(l_bc_km, alpha_db_per_km),
            epsilon_1=epsilon_1,
            epsilon_2=epsilon_1 if epsilon_2 is None else epsilon_2,
            alpha_db_per_km=alpha_db_per_km,
        )

    @classmethod
    def for_distance(
        cls,
        distance_km: float,
        geometry: Geometry | str,
        epsilon_1: float = 0.01,
        epsilon_2: float | None = None,
        alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
    ) -> ChannelParams:
        l_ac, l_bc = link_lengths(distance_km, geometry)
        return cls.from_lengths(l_ac, l_bc, epsilon_1, epsilon_2, alpha_db_per_km)


def negative_epr_phi(omega_a: float, omega_b: float) -> float:
    if omega_a < 1.0 or omega_b < 1.0:
        raise DomainError(f"thermal variances must be >= 1, got ({omega_a!r}, {omega_b!r})")
    return min(
        math.sqrt((omega_a - 1.0) * (omega_b + 1.0)),
        math.sqrt((omega_a + 1.0) * (omega_b - 1.0)),
    )


def _eve_matrix(omega_a: float, omega_b: float, g: float, g_prime: float) -> np.ndarray:
    corr = np.diag([g, g_prime])
    return np.block([[omega_a * np.eye(2), corr], [corr, omega_b * np.eye(2)]])


@dataclass(frozen=True)
class AttackParams:
    """Eve's injected two-mode thermal state, covariance [[wA I, G], [G, wB I]], G = diag(g, g')."""

    omega_a: float
    omega_b: float
    g: float = 0.0
    g_prime: float = 0.0

    def __post_init__(self) -> None:
        if self.omega_a < 1.0 or self.omega_b < 1.0:
            raise DomainError(
                f"thermal variances must be >= 1, got ({self.omega_a!r}, {self.omega_b!r})"
            )
        nu_min = physicality_floor(
            _eve_matrix(self.omega_a, self.omega_b, self.g, self.g_prime)
        )
        if nu_min < 1.0 - 1e-9:
            raise UnphysicalStateError(
                f"attack correlations g={self.g!r}, g'={self.g_prime!r} are unphysical",
                min_symplectic_eigenvalue=nu_min,
            )

    @classmethod
    def negative_epr(cls, omega_a: float, omega_b: float) -> AttackParams:
        phi = negative_epr_phi(omega_a, omega_b)
        return cls(omega_a=omega_a, omega_b=omega_b, g=-phi, g_prime=phi)

    @classmethod
    def one_mode(cls, omega_a: float, omega_b: float) -> AttackParams:
        return cls(omega_a=omega_a, omega_b=omega_b)


def omega_from_epsilon(eta: float, epsilon: float) -> float:
    """Thermal variance adding input-referred excess noise `epsilon` at transmittance `eta`."""
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"transmittance must be in (0, 1], got {eta!r}")
    if epsilon < 0.0:
        raise DomainError(f"excess noise must be >= 0, got {epsilon!r}")
    if eta == 1.0:
        if epsilon > 0.0:
            raise DomainError("a lossless link cannot carry excess noise through a thermal mode")
        return 1.0
    return 1.0 + eta * epsilon / (1.0 - eta)


def attack_from_channel(
    channel: ChannelParams, strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR
) -> AttackParams:
    omega_a = omega_from_epsilon(channel.eta_a, channel.epsilon_1)
    omega_b = omega_from_epsilon(channel.eta_b, channel.epsilon_2)
    if AttackStrategy(strategy) is AttackStrategy.ONE_MODE:
        return AttackParams.one_mode(omega_a, omega_b)
    return AttackParams.negative_epr(omega_a, omega_b)


def eve_covariance(
    attack: AttackParams, labels: tuple[str, str] = ("E1", "E2")
) -> CovarianceMatrix:
    return CovarianceMatrix(
        _eve_matrix(attack.omega_a, attack.omega_b, attack.g, attack.g_prime), labels
    )


@dataclass(frozen=True)
class InjectedNoise:
    """Covariance of the noise sqrt(1-eta_A) E1, sqrt(1-eta_B) E2 that Eve adds at the relay."""

    n_a: float
    n_b: float
    c_x: float
    c_p: float

    @property
    def lambda_x(self) -> float:
        return self.n_a + self.n_b - 2.0 * self.c_x

    @property
    def lambda_p(self) -> float:
        return self.n_a + self.n_b + 2.0 * self.c_p


def injected_noise(
    channel: ChannelParams,
    attack: AttackParams | None = None,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
) -> InjectedNoise:
    loss_a = 1.0 - channel.eta_a
    loss_b = 1.0 - channel.eta_b
    if attack is not None:
        r = math.sqrt(loss_a * loss_b)
        return InjectedNoise(
            n_a=loss_a * attack.omega_a,
            n_b=loss_b * attack.omega_b,
            c_x=attack.g * r,
            c_p=attack.g_prime * r,
        )

    # referred form of (1 - eta)(omega -/+ 1); stays finite when eta = 1
    a_minus = channel.eta_a * channel.epsilon_1
    b_minus = channel.eta_b * channel.epsilon_2
    a_plus = a_minus + 2.0 * loss_a
    b_plus = b_minus + 2.0 * loss_b
    c = 0.0
    if AttackStrategy(strategy) is AttackStrategy.NEGATIVE_EPR:
        c = min(math.sqrt(a_minus * b_plus), math.sqrt(a_plus * b_minus))
    return InjectedNoise(n_a=loss_a + a_minus, n_b=loss_b + b_minus, c_x=-c, c_p=c)
