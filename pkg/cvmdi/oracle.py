"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/oracle.py
#########################################

Circuit-level construction of the protocol from EPR sources, vacua and
beamsplitters. It shares no formulas with protocol.py and is used to check the
closed forms and Eve's purification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    AttackParams,
    AttackStrategy,
    ChannelParams,
    attack_from_channel,
    eve_covariance,
)
from .gaussian import (
    CovarianceMatrix,
    apply_beamsplitter,
    condition_heterodyne,
    condition_homodyne,
    direct_sum,
    epr_state,
    gaussian_entropy,
    partial_trace,
    purify,
    rename,
    vacuum,
)
from .protocol import CASE_ORDERS, CaseId, ProtocolParams, Side

# mode prefixes per user: signal, source noise, monitor, monitor reflections
_WIRING: dict[str, dict[str, str]] = {
    "A": {"x": "A", "n": "F", "m": "M", "r": "P", "vac": "v1 v2 v3"},
    "B": {"x": "B", "n": "G", "m": "K", "r": "Q", "vac": "v4 v5 v6"},
}


def _user_source(params: ProtocolParams, side: Side) -> CovarianceMatrix:
    w = _WIRING[side]
    x, n = w["x"], w["n"]
    state = direct_sum(
        epr_state(params.v, (f"{x}1", f"{x}2")),
        epr_state(params.source_variance, (f"{n}1", f"{n}2")),
    )
    state = apply_beamsplitter(state, f"{x}2", f"{n}2", params.t_s)
    return rename(state, {f"{x}2": f"{x}3", f"{n}2": f"{n}3"})


def _user_monitor(
    state: CovarianceMatrix, params: ProtocolParams, side: Side, monitored: bool
) -> CovarianceMatrix:
    w = _WIRING[side]
    x, m, r = w["x"], w["m"], w["r"]
    if not monitored:
        return rename(state, {f"{x}3": f"{x}4"})
    v1, v2, v3 = w["vac"].split()
    state = direct_sum(state, vacuum(v1), vacuum(v2), vacuum(v3))
    state = apply_beamsplitter(state, f"{x}3", v1, params.eta_m(side))
    state = rename(state, {f"{x}3": f"{x}4", v1: f"{m}1"})
    # eta_e acts first; its reflection is discarded, the eta_d reflection is kept
    state = apply_beamsplitter(state, f"{m}1", v2, params.eta_e)
    state = rename(state, {f"{m}1": f"{m}2", v2: f"{r}1"})
    state = apply_beamsplitter(state, f"{m}2", v3, params.eta_d)
    return rename(state, {f"{m}2": f"{m}3", v3: f"{r}2"})


@dataclass(frozen=True)
class CircuitResult:
    case: CaseId
    state: CovarianceMatrix
    conditioned: CovarianceMatrix
    joint: CovarianceMatrix
    cond: CovarianceMatrix
    trusted_modes: tuple[str, ...]
    eve_modes: tuple[str, ...]

    @property
    def b1_variances(self) -> tuple[float, float]:
        return self.joint.variance("B1", "x"), self.joint.variance("B1", "p")

    @property
    def b1_cond_variances(self) -> tuple[float, float]:
        return self.cond.variance("B1", "x"), self.cond.variance("B1", "p")

    @property
    def relay_correlations(self) -> np.ndarray:
        """Cross-covariance of the kept modes with (x_C, p_D) before the measurement."""
        rows = partial_trace(self.state, CASE_ORDERS[self.case] + ("C", "D")).matrix
        k = 2 * len(CASE_ORDERS[self.case])
        return rows[:k, [k, k + 3]]

    @property
    def relay_matrix(self) -> np.ndarray:
        cd = partial_trace(self.state, ("C", "D")).matrix
        return cd[np.ix_([0, 3], [0, 3])]

    def trusted_entropy(self) -> float:
        return gaussian_entropy(partial_trace(self.conditioned, self.trusted_modes))

    def eve_entropy(self) -> float:
        return gaussian_entropy(partial_trace(self.conditioned, self.eve_modes))


def build_circuit_oracle(
    case: CaseId | str,
    params: ProtocolParams,
    channel: ChannelParams,
    attack: AttackParams | None = None,
    *,
    strategy: AttackStrategy | str = AttackStrategy.NEGATIVE_EPR,
) -> CircuitResult:
    """Global pure state of users, monitors and Eve, conditioned on the relay outcomes."""
    case = CaseId(case)
    if attack is None:
        attack = attack_from_channel(channel, strategy)

    sides = []
    for side in ("A", "B"):
        user = _user_source(params, side)
        sides.append(_user_monitor(user, params, side, case.monitors(side)))
    eve = purify(eve_covariance(attack), ("e1", "e2"))
    state = direct_sum(*sides, eve)

    state = apply_beamsplitter(state, "A4", "E1", channel.eta_a)
    state = apply_beamsplitter(state, "B4", "E2", channel.eta_b)
    state = rename(state, {"A4": "A5", "B4": "B5"})
    state = apply_beamsplitter(state, "B5", "A5", 0.5)
    state = rename(state, {"B5": "D", "A5": "C"})

    conditioned = condition_homodyne(state, "C", "x")
    conditioned = condition_homodyne(conditioned, "D", "p")

    kept = CASE_ORDERS[case]
    trusted = kept
    if case.monitors_alice:
        trusted = trusted + ("P1",)
    if case.monitors_bob:
        trusted = trusted + ("Q1",)
    eve_modes = tuple(x for x in conditioned.labels if x not in trusted)

    joint = partial_trace(conditioned, kept)
    return CircuitResult(
        case=case,
        state=state,
        conditioned=conditioned,
        joint=joint,
        cond=condition_heterodyne(joint, "A1"),
        trusted_modes=trusted,
        eve_modes=eve_modes,
    )
