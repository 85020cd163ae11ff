"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/models.py
#########################################
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analysis import RinMode
from .channel import DEFAULT_ATTENUATION_DB_PER_KM, AttackStrategy, ChannelParams, Geometry
from .errors import DomainError
from .keyrate import FiniteSizeParams, PeMode
from .protocol import CaseId, ProtocolParams

RateMode = Literal["estimated", "realistic"]
RowStatus = Literal["ok", "nonpositive", "skipped"]


class RunConfig(BaseModel):
    """Flat run configuration; unset keys take the published default parameter set."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    v_mod: float = 60.0
    epsilon_1: float = 0.01
    epsilon_2: float = 0.01
    t_s: float = 0.99
    v_s: float | None = None
    eps_s: float | None = None
    eta_m_alice: float = 0.9
    eta_m_bob: float = 0.9
    eta_d: float = 0.6
    v_el: float = 0.01
    v_rin: float = 0.0
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM
    xi: float = 1.0
    block_n: float = 1e8
    key_fraction: float = 0.5
    eps_smooth: float = 1e-10
    eps_pa: float = 1e-10
    eps_pe: float = 1e-10
    pe_mode: PeMode = PeMode.IDEAL
    geometry: Geometry = Geometry.SYMMETRIC
    case: CaseId = CaseId.BOTH
    seed: int = 0
    rin_comparison_mode: RinMode = RinMode.SUBSTITUTION
    attack: AttackStrategy = AttackStrategy.NEGATIVE_EPR

    @model_validator(mode="after")
    def _check_domain(self) -> RunConfig:
        if self.v_s is not None and self.eps_s is not None:
            raise ValueError("v_s and eps_s are mutually exclusive")
        try:
            self.protocol_params()
            self.finite_size()
            ChannelParams(1.0, 1.0, self.epsilon_1, self.epsilon_2, self.alpha_db_per_km)
        except DomainError as e:
            raise ValueError(str(e)) from e
        return self

    @property
    def case_id(self) -> CaseId:
        return self.case

    def protocol_params(self) -> ProtocolParams:
        common = dict(
            v_mod=self.v_mod,
            eta_m_alice=self.eta_m_alice,
            eta_m_bob=self.eta_m_bob,
            eta_d=self.eta_d,
            v_el=self.v_el,
            v_rin=self.v_rin,
            xi=self.xi,
        )
        if self.eps_s is not None:
            return ProtocolParams.from_source_noise(self.eps_s, t_s=self.t_s, **common)
        v_s = 3.0 if self.v_s is None else self.v_s
        return ProtocolParams(t_s=self.t_s, v_s=v_s, **common)

    def channel(self, distance_km: float) -> ChannelParams:
        return ChannelParams.for_distance(
            distance_km, self.geometry, self.epsilon_1, self.epsilon_2, self.alpha_db_per_km
        )

    def finite_size(self) -> FiniteSizeParams:
        return FiniteSizeParams(
            block_n=self.block_n,
            key_fraction=self.key_fraction,
            eps_smooth=self.eps_smooth,
            eps_pa=self.eps_pa,
            eps_pe=self.eps_pe,
        )


class SweepRow(BaseModel):
    """One evaluated grid point; field order is the CSV column order."""

    case: CaseId
    l_ac_km: float
    l_bc_km: float
    eta_m: float
    v_rin: float
    mode: RateMode
    i_ab: float | None = None
    chi_ae: float | None = None
    delta_n: float | None = None
    rate_bits_per_use: float | None = None
    status: RowStatus = "ok"


class RateRequest(BaseModel):
    distance_km: float = Field(ge=0.0)
    mode: RateMode = "realistic"
    overrides: dict[str, str | float | int] = Field(default_factory=dict)


class ScanDistanceRequest(BaseModel):
    from_km: float = Field(ge=0.0)
    to_km: float = Field(gt=0.0)
    step_km: float = Field(gt=0.0)
    modes: list[RateMode] = Field(default_factory=lambda: ["realistic"])
    overrides: dict[str, str | float | int] = Field(default_factory=dict)
