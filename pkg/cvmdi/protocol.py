"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/protocol.py
#########################################

Closed-form covariance matrices of the monitored CV-MDI protocol.

Each user prepares EPR(V) on (X1, X2), mixes X2 with one arm of a source-noise
EPR(V_S) on a T_S beamsplitter, taps a fraction 1 - T_mon of the output into a
monitoring detector (trusted losses eta_e then eta_d) and sends the rest to
the relay. The relay interferes both pulses on a balanced beamsplitter and
homodynes x on C and p on D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Literal

import numpy as np

from .calibration import eta_e as calibrated_eta_e
from .channel import AttackParams, AttackStrategy, ChannelParams, InjectedNoise, injected_noise
from .errors import ContractViolation, DomainError, SingularMeasurementError
from .gaussian import CovarianceMatrix, condition_heterodyne, direct_sum, thermal_state

Side = Literal["A", "B"]

_I2 = np.eye(2)
_Z2 = np.diag([1.0, -1.0])


class CaseId(str, Enum):
    UNTRUSTED = "untrusted"
    ALICE_ONLY = "alice"
    BOB_ONLY = "bob"
    BOTH = "both"

    @property
    def monitors_alice(self) -> bool:
        return self in (CaseId.ALICE_ONLY, CaseId.BOTH)

    @property
    def monitors_bob(self) -> bool:
        return self in (CaseId.BOB_ONLY, CaseId.BOTH)

    def monitors(self, side: Side) -> bool:
        return self.monitors_alice if side == "A" else self.monitors_bob


# kept mode, source-noise output, source-noise partner, monitor detection, monitor reflection
SIDE_LABELS: dict[str, tuple[str, str, str, str, str]] = {
    "A": ("A1", "F3", "F1", "M3", "P2"),
    "B": ("B1", "G3", "G1", "K3", "Q2"),
}

CASE_ORDERS: dict[CaseId, tuple[str, ...]] = {
    CaseId.UNTRUSTED: ("B1", "A1"),
    CaseId.ALICE_ONLY: ("B1",) + SIDE_LABELS["A"],
    CaseId.BOB_ONLY: ("A1",) + SIDE_LABELS["B"],
    CaseId.BOTH: SIDE_LABELS["A"] + SIDE_LABELS["B"],
}


def source_excess_noise(v_s: float, t_s: float) -> float:
    """eps_S with V_S = 1 + T_S eps_S / (1 - T_S)."""
    if t_s >= 1.0:
        return 0.0
    return (v_s - 1.0) * (1.0 - t_s) / t_s


def source_variance_from_excess(eps_s: float, t_s: float) -> float:
    if eps_s < 0.0:
        raise DomainError(f"source excess noise must be >= 0, got {eps_s!r}")
    if t_s >= 1.0:
        if eps_s > 0.0:
            raise DomainError("T_S = 1 leaves no source-noise port for eps_S > 0")
        return 1.0
    return 1.0 + t_s * eps_s / (1.0 - t_s)


@dataclass(frozen=True)
class ProtocolParams:
    """User-side parameters, in shot-noise units where applicable."""

    v_mod: float = 60.0
    t_s: float = 0.99
    v_s: float = 3.0
    eta_m_alice: float = 0.9
    eta_m_bob: float = 0.9
    eta_d: float = 0.6
    v_el: float = 0.01
    v_rin: float = 0.0
    xi: float = 1.0

    def __post_init__(self) -> None:
        if not self.v_mod >= 0.0:
            raise DomainError(f"v_mod must be >= 0, got {self.v_mod!r}")
        if not (0.0 < self.t_s <= 1.0):
            raise DomainError(f"t_s must be in (0, 1], got {self.t_s!r}")
        if not self.v_s >= 1.0:
            raise DomainError(f"v_s must be >= 1, got {self.v_s!r}")
        for name in ("eta_m_alice", "eta_m_bob"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise DomainError(f"{name} must be in (0, 1], got {v!r}")
        if not (0.0 < self.eta_d < 1.0):
            raise DomainError(f"eta_d must be in (0, 1), got {self.eta_d!r}")
        if self.v_el < 0.0 or self.v_rin < 0.0:
            raise DomainError("v_el and v_rin must be >= 0")
        if not (0.0 < self.xi <= 1.0):
            raise DomainError(f"xi must be in (0, 1], got {self.xi!r}")

    @classmethod
    def from_source_noise(cls, eps_s: float, t_s: float = 0.99, **kwargs) -> ProtocolParams:
        return cls(t_s=t_s, v_s=source_variance_from_excess(eps_s, t_s), **kwargs)

    @property
    def v(self) -> float:
        return self.v_mod + 1.0

    @property
    def source_variance(self) -> float:
        """Preparation-noise variance including the RIN contribution."""
        return self.v_s + self.v_rin

    @property
    def eps_s(self) -> float:
        return source_excess_noise(self.v_s, self.t_s)

    @property
    def eps_s_total(self) -> float:
        return source_excess_noise(self.source_variance, self.t_s)

    @property
    def eta_e(self) -> float:
        return calibrated_eta_e(1.0, self.v_el, self.v_rin)

    def estimated(self) -> ProtocolParams:
        """The parameter set a user who ignores RIN works with."""
        return replace(self, v_rin=0.0)

    def eta_m(self, side: Side) -> float:
        return self.eta_m_alice if side == "A" else self.eta_m_bob


def case_transmittances(case: CaseId | str, params: ProtocolParams) -> tuple[float, float]:
    """(T_M, T_K) for a monitoring case; an unmonitored side taps nothing."""
    case = CaseId(case)
    t_m = params.eta_m_alice if case.monitors_alice else 1.0
    t_k = params.eta_m_bob if case.monitors_bob else 1.0
    return t_m, t_k


@dataclass(frozen=True)
class DerivedSymbols:
    v: float
    v_s: float
    t_s: float
    t_mon: float
    zeta1: float
    zeta2: float
    tau: float
    eta_star: float
    eta_star_prime: float
    k: float
    varphi: float
    delta: float
    sigma: float

    @property
    def kappa(self) -> float:
        """Coefficient of (V - 1 + eps_S) in the monitor variance."""
        return self.t_s * self.eta_star


def derived_symbols(params: ProtocolParams, t_mon: float) -> DerivedSymbols:
    if not (0.0 < t_mon <= 1.0):
        raise DomainError(f"monitor tap transmittance must be in (0, 1], got {t_mon!r}")
    v, v_s, t_s = params.v, params.source_variance, params.t_s
    eta_e, eta_d = params.eta_e, params.eta_d
    return DerivedSymbols(
        v=v,
        v_s=v_s,
        t_s=t_s,
        t_mon=t_mon,
        zeta1=math.sqrt(v * v - 1.0),
        zeta2=math.sqrt(v_s * v_s - 1.0),
        tau=math.sqrt(1.0 - t_s),
        eta_star=eta_d * eta_e * (1.0 - t_mon),
        eta_star_prime=(1.0 - eta_d) * eta_e * (1.0 - t_mon),
        k=eta_d / (1.0 - eta_d),
        varphi=(1.0 - t_s) * v + t_s * v_s,
        delta=math.sqrt(t_s * (1.0 - t_s)) * (v - v_s),
        sigma=t_s * v + (1.0 - t_s) * v_s - 1.0,
    )


def _gamma_star_matrix(s: DerivedSymbols) -> np.ndarray:
    r_e = math.sqrt(s.eta_star)
    r_ep = math.sqrt(s.eta_star_prime)
    r_ts = math.sqrt(s.t_s)
    z1, z2 = s.zeta1 * _Z2, s.zeta2 * _Z2
    zero = np.zeros((2, 2))
    rows = [
        [s.v * _I2, -s.tau * z1, zero, -r_e * r_ts * z1, r_ep * r_ts * z1],
        [-s.tau * z1, s.varphi * _I2, r_ts * z2, r_e * s.delta * _I2, -r_ep * s.delta * _I2],
        [zero, r_ts * z2, s.v_s * _I2, -r_e * s.tau * z2, r_ep * s.tau * z2],
        [
            -r_e * r_ts * z1,
            r_e * s.delta * _I2,
            -r_e * s.tau * z2,
            (s.eta_star * s.sigma + 1.0) * _I2,
            -math.sqrt(s.k) * s.eta_star_prime * s.sigma * _I2,
        ],
        [
            r_ep * r_ts * z1,
            -r_ep * s.delta * _I2,
            r_ep * s.tau * z2,
            -math.sqrt(s.k) * s.eta_star_prime * s.sigma * _I2,
            (s.eta_star_prime * s.sigma + 1.0) * _I2,
        ],
    ]
    return np.block(rows)


def build_gamma_star(
    params: ProtocolParams, side: Side, t_mon: float | None = None
) -> CovarianceMatrix:
    """Trusted modes of one user before the channel, ordered as SIDE_LABELS[side]."""
    if side not in SIDE_LABELS:
        raise ContractViolation(f"side must be 'A' or 'B', got {side!r}")
    sym = derived_symbols(params, params.eta_m(side) if t_mon is None else t_mon)
    return CovarianceMatrix(_gamma_star_matrix(sym), SIDE_LABELS[side])


def _sent_mode_correlations(s: DerivedSymbols) -> list[np.ndarray]:
    """cov(mode, X4) for the SIDE_LABELS modes, X4 being the pulse sent to the relay."""
    r_m = math.sqrt(s.t_mon)
    return [
        r_m * math.sqrt(s.t_s) * s.zeta1 * _Z2,
        -r_m * s.delta * _I2,
        r_m * s.tau * s.zeta2 * _Z2,
        -r_m * math.sqrt(s.eta_star) * s.sigma * _I2,
        r_m * math.sqrt(s.eta_star_prime) * s.sigma * _I2,
    ]


def build_reduced_state(case: CaseId | str, params: ProtocolParams) -> CovarianceMatrix:
    """Trusted modes of a case before the relay measurement, in CASE_ORDERS order."""
    case = CaseId(case)
    if case is CaseId.UNTRUSTED:
        return direct_sum(thermal_state(params.v, "B1"), thermal_state(params.v, "A1"))
    if case is CaseId.ALICE_ONLY:
        return direct_sum(thermal_state(params.v, "B1"), build_gamma_star(params, "A"))
    if case is CaseId.BOB_ONLY:
        return direct_sum(thermal_state(params.v, "A1"), build_gamma_star(params, "B"))
    return direct_sum(build_gamma_star(params, "A"), build_gamma_star(params, "B"))


def build_correlations(
    case: CaseId | str, params: ProtocolParams, channel: ChannelParams
) -> np.ndarray:
    """Cross-covariance of the case's trusted modes with the relay outcomes (x_C, p_D)."""
    case = CaseId(case)
    t_m, t_k = case_transmittances(case, params)
    per_side = {
        "A": (_sent_mode_correlations(derived_symbols(params, t_m)), channel.eta_a),
        "B": (_sent_mode_correlations(derived_symbols(params, t_k)), channel.eta_b),
    }
    blocks: list[np.ndarray] = []
    for label in CASE_ORDERS[case]:
        side = "A" if label in SIDE_LABELS["A"] else "B"
        corr, eta = per_side[side]
        k_block = corr[SIDE_LABELS[side].index(label)]
        if side == "A":
            blocks.append(math.sqrt(eta / 2.0) * k_block)
        else:
            blocks.append(-math.sqrt(eta / 2.0) * k_block @ _Z2)
    return np.vstack(blocks)


def relay_symbols(
    case: CaseId | str, params: ProtocolParams, channel: ChannelParams, noise: InjectedNoise
) -> tuple[float, float]:
    """(theta, theta'), twice the relay outcome variances of x_C and p_D."""
    t_m, t_k = case_transmittances(case, params)
    sigma = derived_symbols(params, 1.0).sigma
    common = (channel.eta_a * t_m + channel.eta_b * t_k) * sigma + channel.eta_a + channel.eta_b
    return common + noise.lambda_x, common + noise.lambda_p


def build_relay_matrix(
    case: CaseId | str, params: ProtocolParams, channel: ChannelParams, noise: InjectedNoise
) -> np.ndarray:
    theta, theta_p = relay_symbols(case, params, channel, noise)
    if theta <= 0.0 or theta_p <= 0.0:
        raise SingularMeasurementError(
            f"relay outcome covariance is not positive: theta={theta!r}, theta'={theta_p!r}"
        )
    return np.diag([theta / 2.0, theta_p / 2.0])


def condition_on_relay(
    state: CovarianceMatrix, correlations: np.ndarray, relay: np.ndarray
) -> CovarianceMatrix:
    """gamma - C R^-1 C^T."""
    c = np.asarray(correlations, dtype=float)
    if c.shape != (state.matrix.shape[0], 2) or np.shape(relay) != (2, 2):
        raise ContractViolation(
            f"correlations {c.shape} / relay {np.shape(relay)} do not match "
            f"{state.n_modes} modes"
        )
    try:
        gain = np.linalg.solve(relay, c.T)
    except np.linalg.LinAlgError as e:
        raise SingularMeasurementError(f"singular relay matrix: {e}") from e
    return CovarianceMatrix(state.matrix - c @ gain, state.labels)


@dataclass(frozen=True)
class CaseMatrices:
    case: CaseId
    reduced: CovarianceMatrix
    correlations: np.ndarray
    relay: np.ndarray
    joint: CovarianceMatrix
    cond: CovarianceMatrix

    @property
    def b1_variances(self) -> tuple[float, float]:
        return self.joint.variance("B1", "x"), self.joint.variance("B1", "p")

    @property
    def b1_cond_variances(self) -> tuple[float, float]:
        return self.cond.variance("B1", "x"), self.cond.variance("B1", "p")


def assemble_case(
    case: CaseId | str,
    params: ProtocolParams,
    channel: ChannelParams,
    attack: AttackParams | None = None,
    *,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
) -> CaseMatrices:
    """Post-relay joint state and its heterodyne-on-A1 conditional."""
    case = CaseId(case)
    noise = injected_noise(channel, attack, strategy)
    reduced = build_reduced_state(case, params)
    corr = build_correlations(case, params, channel)
    relay = build_relay_matrix(case, params, channel, noise)
    joint = condition_on_relay(reduced, corr, relay)
    return CaseMatrices(
        case=case,
        reduced=reduced,
        correlations=corr,
        relay=relay,
        joint=joint,
        cond=condition_heterodyne(joint, "A1"),
    )
