"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/estimation.py
#########################################

Parameter estimation on synthetic data: the normal linear channel model,
its maximum-likelihood estimators and the source-noise monitor moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import DEFAULT_ATTENUATION_DB_PER_KM, ChannelParams
from .errors import DomainError, EstimationFailure
from .protocol import CaseId, ProtocolParams, Side, case_transmittances, derived_symbols


@dataclass(frozen=True)
class EstimationSamples:
    """Modified prepared quadratures (x1, p2) and the matching relay outcomes (y1, y2)."""

    x1: np.ndarray
    p2: np.ndarray
    y1: np.ndarray
    y2: np.ndarray

    @property
    def m(self) -> int:
        return int(np.size(self.x1))


@dataclass(frozen=True)
class MonitorSamples:
    """One user's kept quadratures and the monitoring detector outcomes."""

    x_kept: np.ndarray
    p_kept: np.ndarray
    x_mon: np.ndarray
    p_mon: np.ndarray

    @property
    def m(self) -> int:
        return int(np.size(self.x_mon))


@dataclass(frozen=True)
class MonitorMoments:
    x_cross: float
    p_cross: float
    x_sq: float


@dataclass(frozen=True)
class EstimationResult:
    t1_hat: float
    t2_hat: float
    sigma1_sq_hat: float
    sigma2_sq_hat: float
    se_t1: float
    se_t2: float
    se_sigma1_sq: float
    se_sigma2_sq: float
    m: float
    eps_s_hat: float | None = None
    se_eps_s: float | None = None


@dataclass(frozen=True)
class LinearModel:
    t1: float
    t2: float
    sigma1_sq: float
    sigma2_sq: float
    x_variance: float


def linear_model(case: CaseId | str, params: ProtocolParams, channel: ChannelParams) -> LinearModel:
    """y = t x + z with t1 = T_S T_M eta_A, sigma1^2 = 1 + t1 eps_1 (likewise for Bob)."""
    t_m, t_k = case_transmittances(case, params)
    t1 = params.t_s * t_m * channel.eta_a
    t2 = params.t_s * t_k * channel.eta_b
    return LinearModel(
        t1=t1,
        t2=t2,
        sigma1_sq=1.0 + t1 * channel.epsilon_1,
        sigma2_sq=1.0 + t2 * channel.epsilon_2,
        x_variance=2.0 * params.v_mod,
    )


def simulate_channel_data(
    case: CaseId | str,
    params: ProtocolParams,
    channel: ChannelParams,
    m: int,
    rng: np.random.Generator,
    *,
    noise_variances: tuple[float, float] | None = None,
) -> EstimationSamples:
    if m < 2:
        raise DomainError(f"need at least 2 samples, got {m!r}")
    model = linear_model(case, params, channel)
    s1, s2 = noise_variances if noise_variances is not None else (model.sigma1_sq, model.sigma2_sq)
    if s1 < 0.0 or s2 < 0.0:
        raise DomainError(f"noise variances must be >= 0, got ({s1!r}, {s2!r})")
    scale = math.sqrt(model.x_variance)
    x1 = rng.normal(0.0, scale, m)
    p2 = rng.normal(0.0, scale, m)
    y1 = model.t1 * x1 + rng.normal(0.0, math.sqrt(s1), m)
    y2 = model.t2 * p2 + rng.normal(0.0, math.sqrt(s2), m)
    return EstimationSamples(x1=x1, p2=p2, y1=y1, y2=y2)


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    m = x.size
    sxx = float(np.dot(x, x))
    if m < 2 or sxx == 0.0:
        raise EstimationFailure("degenerate regressor: sum of x^2 is zero")
    t = float(np.dot(x, y)) / sxx
    resid = y - t * x
    s2 = float(np.dot(resid, resid)) / m
    return t, s2, math.sqrt(s2 / sxx), s2 * math.sqrt(2.0 / m)


def ml_estimators(samples: EstimationSamples) -> EstimationResult:
    """ML fit of the normal linear model; sigma^2 keeps the 1/m normalisation (bias -sigma^2/m)."""
    t1, s1, se_t1, se_s1 = _fit(np.asarray(samples.x1), np.asarray(samples.y1))
    t2, s2, se_t2, se_s2 = _fit(np.asarray(samples.p2), np.asarray(samples.y2))
    return EstimationResult(
        t1_hat=t1,
        t2_hat=t2,
        sigma1_sq_hat=s1,
        sigma2_sq_hat=s2,
        se_t1=se_t1,
        se_t2=se_t2,
        se_sigma1_sq=se_s1,
        se_sigma2_sq=se_s2,
        m=samples.m,
    )


def monitor_moments(params: ProtocolParams, side: Side = "A") -> MonitorMoments:
    """Predicted <x_A1 x_M3>, <p_A1 p_M3> and <x_M3^2> for one monitored user."""
    t_mon = params.eta_m(side)
    if t_mon >= 1.0:
        raise EstimationFailure("monitor tap transmittance is 1: eps_S is unidentifiable")
    sym = derived_symbols(params, t_mon)
    cross = math.sqrt(sym.kappa) * sym.zeta1
    x_sq = sym.kappa * (sym.v - 1.0 + params.eps_s_total) + 1.0
    return MonitorMoments(x_cross=-cross, p_cross=cross, x_sq=x_sq)


def simulate_monitor_data(
    params: ProtocolParams, side: Side, m: int, rng: np.random.Generator
) -> MonitorSamples:
    if m < 2:
        raise DomainError(f"need at least 2 samples, got {m!r}")
    mom = monitor_moments(params, side)
    v = params.v
    cov_x = np.array([[v, mom.x_cross], [mom.x_cross, mom.x_sq]])
    cov_p = np.array([[v, mom.p_cross], [mom.p_cross, mom.x_sq]])
    xs = rng.multivariate_normal(np.zeros(2), cov_x, size=m)
    ps = rng.multivariate_normal(np.zeros(2), cov_p, size=m)
    return MonitorSamples(x_kept=xs[:, 0], p_kept=ps[:, 0], x_mon=xs[:, 1], p_mon=ps[:, 1])


def sample_moments(samples: MonitorSamples) -> MonitorMoments:
    return MonitorMoments(
        x_cross=float(np.mean(samples.x_kept * samples.x_mon)),
        p_cross=float(np.mean(samples.p_kept * samples.p_mon)),
        x_sq=0.5 * float(np.mean(samples.x_mon**2) + np.mean(samples.p_mon**2)),
    )


def estimate_source_noise(
    samples: MonitorSamples, params: ProtocolParams, side: Side = "A"
) -> tuple[float, float]:
    """(eps_S estimate, standard error) from the monitor variance and calibrated losses."""
    t_mon = params.eta_m(side)
    if t_mon >= 1.0:
        raise EstimationFailure("monitor tap transmittance is 1: eps_S is unidentifiable")
    kappa = derived_symbols(params, t_mon).kappa
    x_sq = sample_moments(samples).x_sq
    eps = (x_sq - 1.0) / kappa - (params.v - 1.0)
    return eps, x_sq / (kappa * math.sqrt(samples.m))


def expected_estimates(
    case: CaseId | str, params: ProtocolParams, channel: ChannelParams, m: float
) -> EstimationResult:
    """Estimates at the true parameters with the standard errors of m PE samples."""
    case = CaseId(case)
    if not m >= 2:
        raise EstimationFailure(f"parameter estimation needs at least 2 samples, got {m!r}")
    model = linear_model(case, params, channel)
    root_m = math.sqrt(m)
    eps_s_hat = se_eps_s = None
    monitored = [s for s in ("A", "B") if case.monitors(s) and params.eta_m(s) < 1.0]
    if monitored:
        mom = monitor_moments(params, monitored[0])
        kappa = derived_symbols(params, params.eta_m(monitored[0])).kappa
        eps_s_hat = params.eps_s_total
        se_eps_s = mom.x_sq / (kappa * root_m)
    return EstimationResult(
        t1_hat=model.t1,
        t2_hat=model.t2,
        sigma1_sq_hat=model.sigma1_sq,
        sigma2_sq_hat=model.sigma2_sq,
        se_t1=math.sqrt(model.sigma1_sq / model.x_variance) / root_m,
        se_t2=math.sqrt(model.sigma2_sq / model.x_variance) / root_m,
        se_sigma1_sq=model.sigma1_sq * math.sqrt(2.0) / root_m,
        se_sigma2_sq=model.sigma2_sq * math.sqrt(2.0) / root_m,
        m=m,
        eps_s_hat=eps_s_hat,
        se_eps_s=se_eps_s,
    )


def channel_from_estimates(
    t1: float,
    sigma1_sq: float,
    t2: float,
    sigma2_sq: float,
    *,
    t_s: float,
    t_m: float = 1.0,
    t_k: float = 1.0,
    alpha_db_per_km: float = DEFAULT_ATTENUATION_DB_PER_KM,
    clip: bool = True,
) -> ChannelParams:
    """Invert the linear model: eta = t / (T_S T_mon), eps = (sigma^2 - 1) / t."""
    etas = []
    for t, t_mon in ((t1, t_m), (t2, t_k)):
        if not t > 0.0:
            raise EstimationFailure(f"estimated transmittance {t!r} is not positive")
        eta = t / (t_s * t_mon)
        if eta > 1.0 + 1e-12 and not clip:
            raise EstimationFailure(f"estimated channel transmittance {eta!r} exceeds 1")
        etas.append(min(eta, 1.0))
    return ChannelParams(
        eta_a=etas[0],
        eta_b=etas[1],
        epsilon_1=max(0.0, (sigma1_sq - 1.0) / t1),
        epsilon_2=max(0.0, (sigma2_sq - 1.0) / t2),
        alpha_db_per_km=alpha_db_per_km,
    )
