"""
#########################################
##      created by: Al Muller
##       filename: tests/test_protocol.py
#########################################
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from cvmdi.channel import ChannelParams, injected_noise
from cvmdi.errors import ContractViolation, DomainError
from cvmdi.gaussian import (
    CovarianceMatrix,
    gaussian_entropy,
    min_symplectic_eigenvalue,
    symplectic_eigenvalues,
)
from cvmdi.protocol import (
    CASE_ORDERS,
    CaseId,
    ProtocolParams,
    assemble_case,
    build_correlations,
    build_gamma_star,
    build_relay_matrix,
    case_transmittances,
    condition_on_relay,
    derived_symbols,
    relay_symbols,
)


def _params(**kw) -> ProtocolParams:
    return replace(ProtocolParams(), **kw)


def _channel(eta_a: float = 0.8, eta_b: float = 0.6) -> ChannelParams:
    return ChannelParams(eta_a=eta_a, eta_b=eta_b, epsilon_1=0.01, epsilon_2=0.01)


def test_default_params_and_derived_symbols() -> None:
    p = ProtocolParams()
    assert p.v == 61.0
    assert p.eta_e == pytest.approx(0.990099, abs=1e-6)
    sym = derived_symbols(p, p.eta_m_alice)
    assert sym.varphi == pytest.approx(3.58)
    assert sym.sigma == pytest.approx(59.42)
    assert sym.delta == pytest.approx(math.sqrt(0.0099) * 58.0)
    assert sym.zeta1 == pytest.approx(math.sqrt(3720.0))
    assert sym.k == pytest.approx(1.5)
    assert sym.eta_star == pytest.approx(0.6 * p.eta_e * 0.1)
    assert sym.eta_star_prime == pytest.approx(0.4 * p.eta_e * 0.1)


def test_params_validation_and_source_noise_encoding() -> None:
    with pytest.raises(DomainError):
        _params(eta_d=1.0)
    with pytest.raises(DomainError):
        _params(eta_d=0.0)
    with pytest.raises(DomainError):
        _params(t_s=0.0)
    with pytest.raises(DomainError):
        ProtocolParams.from_source_noise(0.05, t_s=1.0)

    p = ProtocolParams.from_source_noise(0.05, t_s=0.98)
    assert abs(p.v_s - (1.0 + 0.98 * 0.05 / 0.02)) <= 1e-9
    assert p.eps_s == pytest.approx(0.05)
    assert ProtocolParams.from_source_noise(0.0, t_s=1.0).v_s == 1.0


def test_estimated_params_drop_rin() -> None:
    p = _params(v_rin=0.4)
    assert p.source_variance == pytest.approx(3.4)
    assert p.eta_e == pytest.approx(0.709220, abs=1e-6)
    est = p.estimated()
    assert est.source_variance == 3.0
    assert est.eta_e == pytest.approx(0.990099, abs=1e-6)


def test_case_transmittances() -> None:
    p = _params(eta_m_alice=0.8, eta_m_bob=0.7)
    assert case_transmittances(CaseId.UNTRUSTED, p) == (1.0, 1.0)
    assert case_transmittances(CaseId.ALICE_ONLY, p) == (0.8, 1.0)
    assert case_transmittances(CaseId.BOB_ONLY, p) == (1.0, 0.7)
    assert case_transmittances("both", p) == (0.8, 0.7)


def test_gamma_star_decouples_without_source_noise_or_tap() -> None:
    g = build_gamma_star(_params(t_s=1.0, eta_m_alice=1.0), "A")
    assert g.labels == ("A1", "F3", "F1", "M3", "P2")
    assert np.allclose(g.block("A1"), 61.0 * np.eye(2))
    for other in ("F3", "F1", "M3", "P2"):
        assert np.allclose(g.block("A1", other), 0.0)
    assert np.allclose(g.block("M3"), np.eye(2))


def test_gamma_star_is_physical_at_default_parameters() -> None:
    for side in ("A", "B"):
        g = build_gamma_star(ProtocolParams(), side)
        assert g.matrix.shape == (10, 10)
        assert min_symplectic_eigenvalue(g) >= 1.0 - 1e-9


def test_relay_matrix_lossless_limit() -> None:
    p = ProtocolParams()
    ch = ChannelParams(eta_a=1.0, eta_b=1.0, epsilon_1=0.0, epsilon_2=0.0)
    sigma = derived_symbols(p, 1.0).sigma
    theta, theta_p = relay_symbols(CaseId.UNTRUSTED, p, ch, injected_noise(ch))
    assert theta == pytest.approx(2.0 * sigma + 2.0)
    assert theta_p == pytest.approx(2.0 * sigma + 2.0)
    r = build_relay_matrix(CaseId.UNTRUSTED, p, ch, injected_noise(ch))
    assert np.allclose(r, np.diag([sigma + 1.0, sigma + 1.0]))


def test_correlation_shapes_and_vanishing_monitor_rows() -> None:
    ch = _channel()
    assert build_correlations(CaseId.UNTRUSTED, ProtocolParams(), ch).shape == (4, 2)
    assert build_correlations(CaseId.ALICE_ONLY, ProtocolParams(), ch).shape == (12, 2)
    assert build_correlations(CaseId.BOB_ONLY, ProtocolParams(), ch).shape == (12, 2)

    c = build_correlations(CaseId.BOTH, _params(eta_m_alice=1.0, eta_m_bob=1.0), ch)
    assert c.shape == (20, 2)
    order = CASE_ORDERS[CaseId.BOTH]
    for label in ("M3", "P2", "K3", "Q2"):
        i = order.index(label)
        assert np.allclose(c[2 * i : 2 * i + 2], 0.0)


def test_condition_on_relay_contract() -> None:
    state = CovarianceMatrix(np.diag([3.0, 3.0, 2.0, 2.0]), ("A1", "B1"))
    same = condition_on_relay(state, np.zeros((4, 2)), np.eye(2))
    assert np.array_equal(same.matrix, state.matrix)
    with pytest.raises(ContractViolation):
        condition_on_relay(state, np.zeros((6, 2)), np.eye(2))


@pytest.mark.parametrize(
    ("case", "sizes"),
    [
        (CaseId.UNTRUSTED, (2, 1)),
        (CaseId.ALICE_ONLY, (6, 5)),
        (CaseId.BOB_ONLY, (6, 5)),
        (CaseId.BOTH, (10, 9)),
    ],
)
def test_assemble_case_spectrum_sizes(case: CaseId, sizes: tuple[int, int]) -> None:
    cm = assemble_case(case, ProtocolParams(), _channel())
    assert cm.joint.labels == CASE_ORDERS[case]
    assert (len(symplectic_eigenvalues(cm.joint)), len(symplectic_eigenvalues(cm.cond))) == sizes
    assert "A1" not in cm.cond.labels


def test_conditional_matrices_are_physical() -> None:
    for case in CaseId:
        for eta_a, eta_b in [(1.0, 0.9), (0.9, 0.9), (0.5, 0.2), (1.0, 0.05)]:
            cm = assemble_case(case, _params(v_rin=0.2), _channel(eta_a, eta_b))
            assert min_symplectic_eigenvalue(cm.joint) >= 1.0 - 1e-9
            assert min_symplectic_eigenvalue(cm.cond) >= 1.0 - 1e-9


def test_degenerate_parameters_collapse_cases() -> None:
    p = _params(t_s=1.0, eta_m_alice=1.0, eta_m_bob=1.0, v_rin=0.0)
    ch = _channel(0.9, 0.3)
    ref = assemble_case(CaseId.UNTRUSTED, p, ch)
    for case in (CaseId.ALICE_ONLY, CaseId.BOB_ONLY, CaseId.BOTH):
        cm = assemble_case(case, p, ch)
        assert cm.b1_variances == pytest.approx(ref.b1_variances, abs=1e-9)
        assert cm.b1_cond_variances == pytest.approx(ref.b1_cond_variances, abs=1e-9)


def test_alice_bob_exchange_preserves_joint_entropy() -> None:
    pa = _params(eta_m_alice=0.7, eta_m_bob=0.95)
    pb = _params(eta_m_alice=0.95, eta_m_bob=0.7)
    alice = assemble_case(CaseId.ALICE_ONLY, pa, _channel(0.8, 0.35))
    bob = assemble_case(CaseId.BOB_ONLY, pb, _channel(0.35, 0.8))
    assert gaussian_entropy(alice.joint) == pytest.approx(gaussian_entropy(bob.joint), abs=1e-9)
    assert symplectic_eigenvalues(alice.joint).values == pytest.approx(
        symplectic_eigenvalues(bob.joint).values, abs=1e-9
    )
