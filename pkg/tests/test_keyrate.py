"""
#########################################
##      created by: Al Muller
##       filename: tests/test_keyrate.py
#########################################
"""

import math
from dataclasses import replace

import pytest

from cvmdi.channel import AttackParams, AttackStrategy, ChannelParams
from cvmdi.errors import ContractViolation, DomainError, EstimationFailure
from cvmdi.gaussian import SymplecticSpectrum
from cvmdi.keyrate import (
    FiniteSizeParams,
    PeMode,
    confidence_z,
    delta_n,
    holevo_bound,
    max_secure_distance,
    mutual_information,
    secret_key_rate,
    secure_distance,
)
from cvmdi.protocol import CaseId, ProtocolParams

INFINITE_BLOCK = FiniteSizeParams(block_n=math.inf, key_fraction=1.0)


def test_delta_n_reference_value_and_monotonicity() -> None:
    assert delta_n(FiniteSizeParams(block_n=1e8, key_fraction=1.0)) == pytest.approx(
        4.09548e-3, abs=1e-6
    )
    values = [delta_n(FiniteSizeParams(block_n=n, key_fraction=1.0)) for n in (1e6, 1e8, 1e10)]
    assert values[0] > values[1] > values[2] > 0.0
    assert delta_n(INFINITE_BLOCK) == 0.0


def test_finite_size_params_validation() -> None:
    fs = FiniteSizeParams(block_n=1e8, key_fraction=0.5)
    assert fs.n == 5e7
    assert fs.pe_samples == 5e7
    assert FiniteSizeParams(key_fraction=1.0).pe_samples == 0.0
    with pytest.raises(DomainError):
        FiniteSizeParams(key_fraction=0.0)
    with pytest.raises(DomainError):
        FiniteSizeParams(eps_pe=1.0)
    with pytest.raises(DomainError):
        FiniteSizeParams(block_n=1.0, key_fraction=0.5)


def test_confidence_z() -> None:
    assert confidence_z(1e-10) == pytest.approx(6.4666, abs=2e-3)
    assert confidence_z(0.3173105) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        confidence_z(0.0)


def test_mutual_information() -> None:
    assert mutual_information(3.0, 3.0, 1.0, 1.0) == pytest.approx(1.0)
    assert mutual_information(5.0, 5.0, 5.0, 5.0) == 0.0
    assert mutual_information(7.0, 3.0, 3.0, 1.0) == pytest.approx(0.5 * math.log2(32.0 / 8.0))
    with pytest.raises(DomainError):
        mutual_information(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ContractViolation):
        mutual_information(2.0, 2.0, 3.0, 2.0)


def test_holevo_bound() -> None:
    joint = SymplecticSpectrum((3.0, 1.0))
    cond = SymplecticSpectrum((1.0,))
    assert holevo_bound(joint, cond, CaseId.UNTRUSTED) == pytest.approx(2.0)
    with pytest.raises(ContractViolation):
        holevo_bound(joint, cond, CaseId.BOTH)


def test_rate_decomposition() -> None:
    channel = ChannelParams.for_distance(5.0, "asymmetric")
    fs = FiniteSizeParams(block_n=1e9, key_fraction=0.5)
    for case in CaseId:
        r = secret_key_rate(case, ProtocolParams(), channel, fs=fs)
        assert r.rate == pytest.approx(0.5 * (r.xi * r.i_ab - r.chi_ae - r.delta_n))
        assert r.clamped_rate == max(r.rate, 0.0)
        assert r.case is case


def test_asymptotic_rate_has_no_finite_size_term() -> None:
    channel = ChannelParams(1.0, 0.8)
    r = secret_key_rate(CaseId.UNTRUSTED, ProtocolParams(), channel, fs=INFINITE_BLOCK)
    assert r.delta_n == 0.0
    assert r.rate == pytest.approx(r.i_ab - r.chi_ae)


def test_untrusted_symmetric_link_fails_at_long_range() -> None:
    channel = ChannelParams.for_distance(200.0, "symmetric")
    assert secret_key_rate(CaseId.UNTRUSTED, ProtocolParams(), channel).rate <= 0.0


def test_rate_decreases_with_channel_noise() -> None:
    rates = [
        secret_key_rate(
            CaseId.UNTRUSTED, ProtocolParams(), ChannelParams.for_distance(5.0, "asymmetric", eps)
        ).rate
        for eps in (0.0, 0.01, 0.02, 0.05)
    ]
    assert all(b < a for a, b in zip(rates, rates[1:], strict=False))


def test_negative_epr_attack_is_the_stronger_one() -> None:
    channel = ChannelParams(eta_a=0.9, eta_b=0.6, epsilon_1=0.02, epsilon_2=0.02)
    for case in CaseId:
        epr = secret_key_rate(case, ProtocolParams(), channel, strategy=AttackStrategy.NEGATIVE_EPR)
        one = secret_key_rate(case, ProtocolParams(), channel, strategy=AttackStrategy.ONE_MODE)
        assert epr.rate <= one.rate + 1e-12


def test_worst_case_estimation_costs_rate() -> None:
    channel = ChannelParams.for_distance(2.0, "asymmetric")
    for case in CaseId:
        ideal = secret_key_rate(case, ProtocolParams(), channel, pe_mode=PeMode.IDEAL)
        worst = secret_key_rate(case, ProtocolParams(), channel, pe_mode=PeMode.WORST_CASE)
        assert worst.rate <= ideal.rate
        assert worst.pe_mode is PeMode.WORST_CASE


def test_worst_case_rejects_explicit_attack_and_empty_pe_block() -> None:
    channel = ChannelParams(eta_a=0.9, eta_b=0.6)
    with pytest.raises(ContractViolation):
        secret_key_rate(
            CaseId.UNTRUSTED,
            ProtocolParams(),
            channel,
            AttackParams.negative_epr(1.5, 1.5),
            pe_mode="worst_case",
        )
    with pytest.raises(EstimationFailure):
        secret_key_rate(
            CaseId.UNTRUSTED,
            ProtocolParams(),
            channel,
            fs=FiniteSizeParams(key_fraction=1.0),
            pe_mode="worst_case",
        )


@pytest.mark.parametrize("distance", [2.0, 10.0, 20.0])
def test_cases_agree_without_trusted_noise(distance: float) -> None:
    p = replace(ProtocolParams(), t_s=1.0, eta_m_alice=1.0, eta_m_bob=1.0, v_rin=0.0)
    channel = ChannelParams.for_distance(distance, "asymmetric")
    ref = secret_key_rate(CaseId.UNTRUSTED, p, channel).rate
    for case in (CaseId.ALICE_ONLY, CaseId.BOB_ONLY, CaseId.BOTH):
        assert secret_key_rate(case, p, channel).rate == pytest.approx(ref, abs=1e-6)


def test_max_secure_distance_bisection() -> None:
    assert max_secure_distance(lambda d: 50.0 - d) == pytest.approx(50.0, abs=0.05)
    assert max_secure_distance(lambda d: 1.0) == 200.0
    assert max_secure_distance(lambda d: -1.0) == 0.0
    assert max_secure_distance(lambda d: 1.0, hi=30.0) == 30.0

    def failing(d: float) -> float:
        if d > 12.0:
            raise EstimationFailure("out of range")
        return 1.0

    assert max_secure_distance(failing) == pytest.approx(12.0, abs=0.05)


def test_secure_distance_is_bracketed() -> None:
    d = secure_distance(CaseId.UNTRUSTED, ProtocolParams(), "asymmetric", hi=100.0)
    assert 0.0 < d < 100.0


@pytest.mark.parametrize("case", list(CaseId))
def test_rate_falls_with_rin_and_reconciliation_loss(case: CaseId) -> None:
    channel = ChannelParams.for_distance(4.0, "asymmetric")
    by_rin = [
        secret_key_rate(case, ProtocolParams(v_rin=v), channel).rate
        for v in (0.0, 0.05, 0.1, 0.2, 0.3, 0.4)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(by_rin, by_rin[1:], strict=False))
    # descending xi is ascending reconciliation loss 1 - xi
    by_xi = [
        secret_key_rate(case, ProtocolParams(xi=xi), channel).rate
        for xi in (1.0, 0.98, 0.95, 0.9)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(by_xi, by_xi[1:], strict=False))
