"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/analysis.py
#########################################

Coupled-parameter scanning and the comparison between the key rate RIN-ignoring
users would claim and the rate they actually achieve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .calibration import apply_rin_transform, miscalibration_factor
from .channel import DEFAULT_ATTENUATION_DB_PER_KM, AttackParams, AttackStrategy, ChannelParams
from .errors import ContractViolation, CvmdiError, DomainError, EstimationFailure
from .estimation import (
    MonitorMoments,
    channel_from_estimates,
    linear_model,
    ml_estimators,
    monitor_moments,
    sample_moments,
    simulate_channel_data,
    simulate_monitor_data,
)
from .keyrate import FiniteSizeParams, KeyRateBreakdown, PeMode, secret_key_rate
from .protocol import CaseId, ProtocolParams, case_transmittances, source_variance_from_excess


class RinMode(str, Enum):
    SUBSTITUTION = "substitution"
    SAMPLE_LEVEL = "sample_level"


@dataclass(frozen=True)
class ScanGrid:
    """start + k * step for every k keeping the value below stop."""

    start: float = 0.9
    stop: float = 1.0
    step: float = 1e-3

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise DomainError(f"grid step must be > 0, got {self.step!r}")
        if not self.start < self.stop:
            raise DomainError(f"grid start {self.start!r} must be below stop {self.stop!r}")

    @classmethod
    def single(cls, value: float) -> ScanGrid:
        return cls(start=value, stop=math.nextafter(value, math.inf), step=1.0)

    @property
    def values(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step - 1e-9)) + 1
        return self.start + self.step * np.arange(max(count, 1))


@dataclass(frozen=True)
class Observables:
    """What the users measure: linear-model fits per link and monitor moments per side."""

    t1: float
    sigma1_sq: float
    t2: float
    sigma2_sq: float
    monitors: dict[str, MonitorMoments] = field(default_factory=dict)


def expected_observables(
    case: CaseId | str, params: ProtocolParams, channel: ChannelParams
) -> Observables:
    case = CaseId(case)
    model = linear_model(case, params, channel)
    monitors = {s: monitor_moments(params, s) for s in ("A", "B") if case.monitors(s)}
    return Observables(model.t1, model.sigma1_sq, model.t2, model.sigma2_sq, monitors)


def solve_observables(
    observables: Observables,
    case: CaseId | str,
    params: ProtocolParams,
    t_s: float,
    *,
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
    clip: bool = False,
) -> tuple[ProtocolParams, ChannelParams]:
    """Solve the remaining parameters once T_S is fixed; EstimationFailure if infeasible."""
    case = CaseId(case)
    zeta1_sq = params.v * params.v - 1.0
    t_mon = {"A": 1.0, "B": 1.0}
    eps_s: float | None = None
    for side in ("A", "B"):
        if not case.monitors(side):
            continue
        mom = observables.monitors.get(side)
        if mom is None:
            raise ContractViolation(f"case {case.value} needs monitor moments for side {side}")
        cross = 0.5 * (abs(mom.x_cross) + abs(mom.p_cross))
        kappa = cross * cross / zeta1_sq
        t_mon[side] = 1.0 - kappa / (t_s * params.eta_e * params.eta_d)
        if not (0.0 < t_mon[side] < 1.0):
            raise EstimationFailure(f"tap transmittance {t_mon[side]!r} infeasible at T_S={t_s}")
        if eps_s is None:
            eps_s = max(0.0, (mom.x_sq - 1.0) / kappa - (params.v - 1.0))

    solved = replace(
        params,
        t_s=float(t_s),
        eta_m_alice=t_mon["A"] if case.monitors_alice else params.eta_m_alice,
        eta_m_bob=t_mon["B"] if case.monitors_bob else params.eta_m_bob,
    )
    if eps_s is not None:
        try:
            v_total = source_variance_from_excess(eps_s, t_s)
        except DomainError as e:
            raise EstimationFailure(str(e)) from e
        v_s = v_total - params.v_rin
        if v_s < 1.0 - 1e-9:
            raise EstimationFailure(f"source variance {v_s!r} infeasible at T_S={t_s}")
        solved = replace(solved, v_s=max(v_s, 1.0))

    t_m, t_k = case_transmittances(case, solved)
    channel = channel_from_estimates(
        observables.t1,
        observables.sigma1_sq,
        observables.t2,
        observables.sigma2_sq,
        t_s=t_s,
        t_m=t_m,
        t_k=t_k,
        alpha_db_per_km=alpha_db_per_km,
        clip=clip,
    )
    return solved, channel


@dataclass(frozen=True)
class ScanResult:
    t_s: float
    params: ProtocolParams
    channel: ChannelParams
    rate: KeyRateBreakdown
    feasible_points: int


def scan_coupled_params(
    observables: Observables,
    case: CaseId | str,
    params: ProtocolParams,
    *,
    grid: ScanGrid | None = None,
    fs: FiniteSizeParams | None = None,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
) -> ScanResult:
    """Scan T_S, solve the rest from the observables, keep the minimum-rate solution."""
    grid = grid or ScanGrid()
    best: ScanResult | None = None
    feasible = 0
    for t_s in grid.values:
        try:
            solved, channel = solve_observables(
                observables, case, params, float(t_s), alpha_db_per_km=alpha_db_per_km
            )
            rate = secret_key_rate(case, solved, channel, None, fs, strategy=strategy)
        except CvmdiError:
            continue
        feasible += 1
        if best is None or rate.rate < best.rate.rate:
            best = ScanResult(float(t_s), solved, channel, rate, 0)
    if best is None:
        raise EstimationFailure("no feasible parameter set on the scan grid")
    return replace(best, feasible_points=feasible)


@dataclass(frozen=True)
class SecurityGap:
    mode: RinMode
    estimated: KeyRateBreakdown
    realistic: KeyRateBreakdown

    @property
    def ratio(self) -> float:
        """Claimed over achieved rate; inf once the true rate is gone."""
        if self.realistic.rate <= 0.0:
            return math.inf if self.estimated.rate > 0.0 else math.nan
        return self.estimated.rate / self.realistic.rate


def rin_ignored_moments(moments: MonitorMoments, m: float) -> MonitorMoments:
    """Monitor moments after a detector record is divided by an SNU m times too small."""
    if not m >= 1.0:
        raise DomainError(f"mis-calibration factor must be >= 1, got {m!r}")
    root = math.sqrt(m)
    return MonitorMoments(
        x_cross=moments.x_cross / root,
        p_cross=moments.p_cross / root,
        x_sq=(moments.x_sq - 1.0) / m + 1.0,
    )


def _monitor_records(
    case: CaseId,
    params: ProtocolParams,
    rng: np.random.Generator,
    samples: int,
    *,
    ignore_rin: bool,
) -> dict[str, MonitorMoments]:
    m = miscalibration_factor(1.0, params.v_rin)
    monitors = {}
    for side in ("A", "B"):
        if not case.monitors(side):
            continue
        mon = simulate_monitor_data(params, side, samples, rng)
        if ignore_rin:
            mon = replace(
                mon,
                x_mon=apply_rin_transform(mon.x_mon, m, rng),
                p_mon=apply_rin_transform(mon.p_mon, m, rng),
            )
        monitors[side] = sample_moments(mon)
    return monitors


def _sample_level_rate(
    case: CaseId,
    params: ProtocolParams,
    channel: ChannelParams,
    fs: FiniteSizeParams | None,
    pe_mode: PeMode,
    strategy: AttackStrategy | str,
    rng: np.random.Generator,
    samples: int,
    *,
    ignore_rin: bool,
) -> KeyRateBreakdown:
    """Simulate with the true parameters, estimate from the records, rate the estimates.

    A RIN-ignoring user reads the monitor through a mis-normalised SNU and solves
    with V_RIN = 0.
    """
    est = ml_estimators(simulate_channel_data(case, params, channel, samples, rng))
    monitors = _monitor_records(case, params, rng, samples, ignore_rin=ignore_rin)
    obs = Observables(est.t1_hat, est.sigma1_sq_hat, est.t2_hat, est.sigma2_sq_hat, monitors)
    belief = params.estimated() if ignore_rin else params
    solved, channel_hat = solve_observables(
        obs, case, belief, params.t_s, alpha_db_per_km=channel.alpha_db_per_km, clip=True
    )
    return secret_key_rate(case, solved, channel_hat, None, fs, pe_mode, strategy=strategy)


def estimated_vs_realistic(
    case: CaseId | str,
    params: ProtocolParams,
    channel: ChannelParams,
    fs: FiniteSizeParams | None = None,
    *,
    attack: AttackParams | None = None,
    mode: RinMode | str = RinMode.SUBSTITUTION,
    pe_mode: PeMode | str = PeMode.IDEAL,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
    rng: np.random.Generator | None = None,
    samples: int = 1_000_000,
) -> SecurityGap:
    """Rate with RIN ignored (V_S, eta_e without V_RIN) against the RIN-aware rate."""
    case, mode, pe_mode = CaseId(case), RinMode(mode), PeMode(pe_mode)
    if mode is RinMode.SUBSTITUTION:
        estimated = secret_key_rate(
            case, params.estimated(), channel, attack, fs, pe_mode, strategy=strategy
        )
        realistic = secret_key_rate(case, params, channel, attack, fs, pe_mode, strategy=strategy)
        return SecurityGap(mode, estimated, realistic)

    if rng is None:
        raise ContractViolation("sample-level comparison needs a seeded generator")
    estimated = _sample_level_rate(
        case, params, channel, fs, pe_mode, strategy, rng, samples, ignore_rin=True
    )
    realistic = _sample_level_rate(
        case, params, channel, fs, pe_mode, strategy, rng, samples, ignore_rin=False
    )
    return SecurityGap(mode, estimated, realistic)
