"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/calibration.py
#########################################

One-time shot-noise calibration of the monitoring detector and the RIN
mis-normalisation seen by users who ignore laser intensity noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _check(u: float, v_el_raw: float, v_rin: float) -> None:
    if not u > 0.0:
        raise DomainError(f"shot-noise unit u must be > 0, got {u!r}")
    if v_el_raw < 0.0 or v_rin < 0.0:
        raise DomainError(f"noise variances must be >= 0, got v_el={v_el_raw!r}, v_rin={v_rin!r}")


def eta_e(u: float = 1.0, v_el_raw: float = 0.0, v_rin: float = 0.0) -> float:
    """Trusted loss equivalent to normalising by the full detector output variance."""
    _check(u, v_el_raw, v_rin)
    return u / (u + v_el_raw + v_rin)


def miscalibration_factor(u: float, v_rin: float) -> float:
    _check(u, 0.0, v_rin)
    return 1.0 + v_rin / u


@dataclass(frozen=True)
class CalibrationModel:
    u: float = 1.0
    v_el_raw: float = 0.0
    v_rin: float = 0.0

    def __post_init__(self) -> None:
        _check(self.u, self.v_el_raw, self.v_rin)

    @property
    def u_prime(self) -> float:
        """SNU of the one-time calibration: the whole output variance."""
        return self.u + self.v_el_raw + self.v_rin

    @property
    def u_bar(self) -> float:
        """SNU a RIN-ignoring user derives as V_tot - V_el."""
        return self.u + self.v_rin

    @property
    def m(self) -> float:
        return miscalibration_factor(self.u, self.v_rin)

    @property
    def eta_e(self) -> float:
        return eta_e(self.u, self.v_el_raw, self.v_rin)


def apply_rin_transform(samples: np.ndarray, m: float, rng: np.random.Generator) -> np.ndarray:
    """x' = sqrt(1/m) x + sqrt(1 - 1/m) v with v standard normal."""
    if not m >= 1.0:
        raise DomainError(f"mis-calibration factor must be >= 1, got {m!r}")
    x = np.asarray(samples, dtype=float)
    if m == 1.0:
        return x.copy()
    noise = rng.standard_normal(x.shape)
    return math.sqrt(1.0 / m) * x + math.sqrt(1.0 - 1.0 / m) * noise
