"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/keyrate.py
#########################################

Finite-size secret key rate: mutual information, Holevo bound, the
smooth min-entropy correction and worst-case parameter estimation.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import Enum

from scipy.special import erfcinv

from .channel import (
    DEFAULT_ATTENUATION_DB_PER_KM,
    AttackParams,
    AttackStrategy,
    ChannelParams,
    Geometry,
)
from .errors import ContractViolation, CvmdiError, DomainError, EstimationFailure
from .estimation import EstimationResult, channel_from_estimates, expected_estimates
from .gaussian import SymplecticSpectrum, spectrum_entropy, symplectic_eigenvalues
from .protocol import (
    CaseId,
    ProtocolParams,
    assemble_case,
    case_transmittances,
    source_variance_from_excess,
)

DISTANCE_TOLERANCE_KM = 0.05


class PeMode(str, Enum):
    IDEAL = "ideal"
    WORST_CASE = "worst_case"


@dataclass(frozen=True)
class FiniteSizeParams:
    """Block of block_n symbols, a key_fraction of which form the raw key."""

    block_n: float = 1e8
    key_fraction: float = 0.5
    eps_smooth: float = 1e-10
    eps_pa: float = 1e-10
    eps_pe: float = 1e-10
    dim_hx: int = 2

    def __post_init__(self) -> None:
        if not self.block_n > 0.0:
            raise DomainError(f"block_n must be > 0, got {self.block_n!r}")
        if not (0.0 < self.key_fraction <= 1.0):
            raise DomainError(f"key_fraction must be in (0, 1], got {self.key_fraction!r}")
        for name in ("eps_smooth", "eps_pa", "eps_pe"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise DomainError(f"{name} must be in (0, 1), got {v!r}")
        if self.n < 1.0:
            raise DomainError(f"key block n = {self.n!r} must be >= 1")

    @property
    def n(self) -> float:
        return self.key_fraction * self.block_n

    @property
    def pe_samples(self) -> float:
        if self.key_fraction >= 1.0:
            return 0.0
        return self.block_n * (1.0 - self.key_fraction)


@dataclass(frozen=True)
class KeyRateBreakdown:
    i_ab: float
    chi_ae: float
    delta_n: float
    rate: float
    nu_joint: SymplecticSpectrum
    nu_cond: SymplecticSpectrum
    case: CaseId
    pe_mode: PeMode
    key_fraction: float
    xi: float

    @property
    def clamped_rate(self) -> float:
        return max(self.rate, 0.0)


def mutual_information(vx: float, vp: float, vx_cond: float, vp_cond: float) -> float:
    """Alice-Bob information in bits, with the heterodyne vacuum penalty on each variance."""
    for name, v in (("vx", vx), ("vp", vp), ("vx_cond", vx_cond), ("vp_cond", vp_cond)):
        if not v > 0.0:
            raise DomainError(f"{name} must be > 0, got {v!r}")
    if vx_cond > vx + 1e-9 or vp_cond > vp + 1e-9:
        raise ContractViolation("conditional variance exceeds the unconditional one")
    return 0.5 * math.log2(((vx + 1.0) * (vp + 1.0)) / ((vx_cond + 1.0) * (vp_cond + 1.0)))


def expected_spectrum_sizes(case: CaseId | str) -> tuple[int, int]:
    case = CaseId(case)
    if case is CaseId.UNTRUSTED:
        return 2, 1
    if case is CaseId.BOTH:
        return 10, 9
    return 6, 5


def holevo_bound(
    nu_joint: SymplecticSpectrum, nu_cond: SymplecticSpectrum, case: CaseId | str | None = None
) -> float:
    if case is not None and (len(nu_joint), len(nu_cond)) != expected_spectrum_sizes(case):
        raise ContractViolation(
            f"spectrum sizes ({len(nu_joint)}, {len(nu_cond)}) do not match case {case!s}"
        )
    return spectrum_entropy(nu_joint) - spectrum_entropy(nu_cond)


def delta_n(fs: FiniteSizeParams) -> float:
    """(2 dim + 3) sqrt(log2(2/eps_smooth)/n) + (2/n) log2(1/eps_pa)."""
    n = fs.n
    if math.isinf(n):
        return 0.0
    return (2 * fs.dim_hx + 3) * math.sqrt(math.log2(2.0 / fs.eps_smooth) / n) + (
        2.0 / n
    ) * math.log2(1.0 / fs.eps_pa)


def confidence_z(eps_pe: float) -> float:
    """sqrt(2) erfinv(1 - eps_pe)."""
    if not (0.0 < eps_pe < 1.0):
        raise DomainError(f"eps_pe must be in (0, 1), got {eps_pe!r}")
    return math.sqrt(2.0) * float(erfcinv(eps_pe))


def worst_case_adjust(
    estimates: EstimationResult,
    eps_pe: float,
    *,
    case: CaseId | str,
    params: ProtocolParams,
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
) -> tuple[ProtocolParams, ChannelParams]:
    """Shift transmittances down and noise variances up by z standard errors."""
    z = confidence_z(eps_pe)
    t_m, t_k = case_transmittances(case, params)
    channel = channel_from_estimates(
        estimates.t1_hat - z * estimates.se_t1,
        estimates.sigma1_sq_hat + z * estimates.se_sigma1_sq,
        estimates.t2_hat - z * estimates.se_t2,
        estimates.sigma2_sq_hat + z * estimates.se_sigma2_sq,
        t_s=params.t_s,
        t_m=t_m,
        t_k=t_k,
        alpha_db_per_km=alpha_db_per_km,
    )
    if estimates.eps_s_hat is None or params.t_s >= 1.0:
        return params, channel
    eps_s = max(0.0, estimates.eps_s_hat + z * (estimates.se_eps_s or 0.0))
    v_s = source_variance_from_excess(eps_s, params.t_s) - params.v_rin
    if v_s < 1.0:
        raise EstimationFailure(f"adjusted source variance {v_s!r} is below the vacuum level")
    return replace(params, v_s=v_s), channel


def secret_key_rate(
    case: CaseId | str,
    params: ProtocolParams,
    channel: ChannelParams,
    attack: AttackParams | None = None,
    fs: FiniteSizeParams | None = None,
    pe_mode: PeMode | str = PeMode.IDEAL,
    *,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
) -> KeyRateBreakdown:
    """(n/N) (xi I_AB - chi_AE - Delta(n)) in bits per channel use, not clamped."""
    case = CaseId(case)
    pe_mode = PeMode(pe_mode)
    fs = fs or FiniteSizeParams()
    if pe_mode is PeMode.WORST_CASE:
        if attack is not None:
            raise ContractViolation("worst-case estimation derives the attack from the estimates")
        estimates = expected_estimates(case, params, channel, fs.pe_samples)
        params, channel = worst_case_adjust(
            estimates, fs.eps_pe, case=case, params=params, alpha_db_per_km=channel.alpha_db_per_km
        )

    cm = assemble_case(case, params, channel, attack, strategy=strategy)
    i_ab = mutual_information(*cm.b1_variances, *cm.b1_cond_variances)
    nu_joint = symplectic_eigenvalues(cm.joint)
    nu_cond = symplectic_eigenvalues(cm.cond)
    chi = holevo_bound(nu_joint, nu_cond, case)
    d = delta_n(fs)
    return KeyRateBreakdown(
        i_ab=i_ab,
        chi_ae=chi,
        delta_n=d,
        rate=fs.key_fraction * (params.xi * i_ab - chi - d),
        nu_joint=nu_joint,
        nu_cond=nu_cond,
        case=case,
        pe_mode=pe_mode,
        key_fraction=fs.key_fraction,
        xi=params.xi,
    )


def max_secure_distance(
    rate_at: Callable[[float], float],
    *,
    lo: float = 0.0,
    hi: float = 200.0,
    tol: float = DISTANCE_TOLERANCE_KM,
) -> float:
    """Largest distance with a positive rate, by bisection; 0 if none and hi if all."""

    def positive(d: float) -> bool:
        try:
            return rate_at(d) > 0.0
        except CvmdiError:
            return False

    if not positive(lo):
        return 0.0
    if positive(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def secure_distance(
    case: CaseId | str,
    params: ProtocolParams,
    geometry: Geometry | str,
    *,
    epsilon_1: float = 0.01,
    epsilon_2: float | None = None,
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
    fs: FiniteSizeParams | None = None,
    pe_mode: PeMode | str = PeMode.IDEAL,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
    hi: float = 200.0,
) -> float:
    def rate_at(d: float) -> float:
        channel = ChannelParams.for_distance(d, geometry, epsilon_1, epsilon_2, alpha_db_per_km)
        return secret_key_rate(case, params, channel, None, fs, pe_mode, strategy=strategy).rate

    return max_secure_distance(rate_at, hi=hi)
