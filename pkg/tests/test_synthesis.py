import numpy as np
import pytest

from copos.fuzzy import CONTROL_DOMAIN, DEFAULT_DOMAIN, build_vertices, premise_bounds
from copos.model import STEPANOVA_TABLE1
from copos.synthesis import (
    SynthesisOptions,
    check_positivity,
    default_control_system,
    lcplf_stability,
    spectral_radius,
    synthesize_pdc,
    synthesis_result_to_dict,
    verify_closed_loop,
)

P = STEPANOVA_TABLE1

# counterexample pair from the stability analysis: both matrices are
# nonnegative and Schur, the system has no LCPLF but its dual does
A1_CE = np.array([[0.5, 0.5], [1.0 / 3.0, 0.5]])
A2_CE = np.array([[0.5, 0.5], [2.0 / 27.0, 2.0 / 3.0]])


def test_check_positivity_discrete():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN))
    rep = check_positivity(vs.A, vs.B, mode="discrete")
    assert not any(rep.a_ok)  # every A_i has a negative diagonal entry
    assert not rep.all_ok
    rep = check_positivity([np.eye(2)], [np.eye(2)])
    assert rep.all_ok


def test_check_positivity_continuous_metzler():
    A = np.array([[-1.0, 0.5], [0.2, -3.0]])
    rep = check_positivity([A], [np.eye(2)], mode="continuous")
    assert rep.a_ok == (True,) and rep.all_ok
    A_bad = np.array([[-1.0, -0.5], [0.2, -3.0]])
    assert check_positivity([A_bad], mode="continuous").a_ok == (False,)
    with pytest.raises(ValueError):
        check_positivity([A], mode="diskrete")


def test_spectral_radius_closed_forms():
    assert spectral_radius(np.diag([0.3, -0.8])) == pytest.approx(0.8, abs=1e-15)
    assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0
    assert spectral_radius(np.array([[2.0]])) == 2.0
    # complex pair: rotation scaled by 0.9
    R = 0.9 * np.array([[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]])
    assert spectral_radius(R) == pytest.approx(0.9, abs=1e-12)


def test_spectral_radius_nonneg_matches_eigvals_oracle():
    rng = np.random.default_rng(21)
    for _ in range(50):
        M = rng.uniform(0.0, 1.0, size=(4, 4))
        oracle = float(np.abs(np.linalg.eigvals(M)).max())
        assert spectral_radius(M) == pytest.approx(oracle, abs=1e-8)


def test_spectral_radius_periodic_fallback():
    # cyclic permutation: power iteration stalls, char-poly takes over
    C = np.zeros((4, 4))
    C[0, 1] = C[1, 2] = C[2, 3] = C[3, 0] = 1.0
    assert spectral_radius(C) == pytest.approx(1.0, abs=1e-9)


def test_spectral_radius_general_4x4():
    rng = np.random.default_rng(22)
    for _ in range(50):
        M = rng.normal(size=(4, 4))
        oracle = float(np.abs(np.linalg.eigvals(M)).max())
        assert spectral_radius(M) == pytest.approx(oracle, rel=1e-8, abs=1e-10)


def test_spectral_radius_validation():
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ValueError):
        spectral_radius(np.array([[np.inf, 0.0], [0.0, 0.0]]))


def test_lcplf_counterexample_primal_infeasible_dual_feasible():
    assert lcplf_stability([A1_CE, A2_CE]) is None
    cert = lcplf_stability([A1_CE, A2_CE], dual=True)
    assert cert is not None
    assert np.all(cert.p > 0.0)
    assert cert.worst_margin < 0.0
    # the dual certificate satisfies (A_i - I) p << 0 on the original vertices
    for A in (A1_CE, A2_CE):
        assert np.all((A - np.eye(2)) @ cert.p < 0.0)


def test_lcplf_published_dual_vector():
    # direct evaluation of the quoted vector p = (4, 3)
    p = np.array([4.0, 3.0])
    r1 = (A1_CE - np.eye(2)) @ p
    r2 = (A2_CE - np.eye(2)) @ p
    assert r1 == pytest.approx([-0.5, -1.0 / 6.0], abs=1e-12)
    assert r2 == pytest.approx([-0.5, -19.0 / 27.0], abs=1e-12)
    assert np.all(r1 < 0.0) and np.all(r2 < 0.0)


def test_lcplf_contraction_feasible_both_ways():
    A = 0.5 * np.eye(2)
    for dual in (False, True):
        cert = lcplf_stability([A], dual=dual)
        assert cert is not None and cert.worst_margin < 0.0


def test_lcplf_certificate_implies_schur():
    rng = np.random.default_rng(31)
    found = 0
    for _ in range(40):
        mats = [rng.uniform(0.0, 0.45, size=(3, 3)) for _ in range(3)]
        cert = lcplf_stability(mats)
        if cert is not None:
            found += 1
            for A in mats:
                assert spectral_radius(A) < 1.0
    assert found >= 10


def test_lcplf_certificate_scale_invariance():
    cert = lcplf_stability([A1_CE, A2_CE], dual=True)
    for c in (0.5, 3.0, 100.0):
        for A in (A1_CE, A2_CE):
            scaled = ((A - np.eye(2)) @ (c * cert.p)).max()
        assert scaled <= c * cert.worst_margin + 1e-12


def test_lcplf_rejects_mixed_shapes():
    with pytest.raises(ValueError):
        lcplf_stability([np.eye(2), np.eye(3)])


@pytest.fixture(scope="module")
def default_synthesis():
    system = default_control_system(P)
    return system, synthesize_pdc(system)


def test_synthesize_default_feasible(default_synthesis):
    system, res = default_synthesis
    assert res.feasible
    assert np.all(res.Q >= res.options.eps - 1e-15)
    for Kj, Mj in zip(res.K, res.M):
        assert np.allclose(Kj * res.Q[None, :], Mj, atol=1e-9)


def test_synthesize_default_replay_properties(default_synthesis):
    system, res = default_synthesis
    r = system.r
    p = res.certificate.p
    assert np.array_equal(p, res.Q)
    # sufficiency replay: every pair margin strictly negative
    assert res.certificate.margins.shape == (r, r)
    assert res.certificate.margins.max() < 0.0
    rep = res.report
    assert rep.rows_checked == (0, 1)
    assert rep.all_nonneg
    assert rep.all_schur and rep.worst_radius < 1.0
    assert rep.certificate is not None  # independent LCPLF on the closed loop
    assert rep.passed


def test_synthesize_deterministic(default_synthesis):
    system, res = default_synthesis
    res2 = synthesize_pdc(system)
    assert np.array_equal(res.Q, res2.Q)
    for K1, K2 in zip(res.K, res2.K):
        assert np.array_equal(K1, K2)


def test_synthesize_without_pins_hits_gain_boundary(default_synthesis):
    # bare Theorem-type conditions say nothing about the integrator
    # channels: the feasibility vertex zeroes them and the closed loop
    # keeps eigenvalues exactly on the unit circle
    system, _ = default_synthesis
    res = synthesize_pdc(system, SynthesisOptions(gain_pins=None))
    assert res.feasible
    assert res.certificate.margins.max() < 0.0
    assert res.report.all_nonneg
    # a double unit eigenvalue; its numerical radius is 1 up to root
    # sensitivity of the repeated root
    assert res.report.worst_radius == pytest.approx(1.0, abs=1e-4)
    assert res.report.worst_radius > 0.999


def test_synthesize_single_rule_trivial():
    res = synthesize_pdc(([0.5 * np.eye(2)], [np.eye(2)]))
    assert res.feasible
    assert res.report.all_schur and res.report.all_nonneg


def test_synthesize_uncontrollable_infeasible():
    res = synthesize_pdc(([2.0 * np.eye(2)], [np.zeros((2, 2))]))
    assert not res.feasible
    assert res.diagnostics  # violated-constraint labels


def test_synthesize_requires_discrete_augmented():
    from copos.fuzzy import augment
    vs = build_vertices(premise_bounds(P, CONTROL_DOMAIN))
    with pytest.raises(ValueError):
        synthesize_pdc(augment(vs))


def test_synthesize_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        synthesize_pdc(([np.eye(2), np.eye(3)], [np.eye(2), np.eye(3)]))


def test_strict_paper_mode_records_outcome(default_synthesis):
    system, _ = default_synthesis
    res = synthesize_pdc(system, SynthesisOptions(enforce_8c=True, gain_pins=None))
    # either outcome is acceptable; if feasible, M must be nonpositive
    if res.feasible:
        for Mj in res.M:
            assert Mj.max() <= 1e-12
    else:
        assert res.diagnostics


def test_verify_closed_loop_zero_gain_fails(default_synthesis):
    system, res = default_synthesis
    K0 = [np.zeros((2, 4))] * system.r
    rep = verify_closed_loop(system, K0)
    # open loop has 1 + T*theta1_max > 1 on the first vertex
    assert not rep.all_schur
    assert rep.worst_radius > 1.0


def test_verify_closed_loop_detects_perturbation(default_synthesis):
    system, res = default_synthesis
    K_bad = [Kj.copy() for Kj in res.K]
    K_bad[0][0, 0] += 1e3
    rep = verify_closed_loop(system, K_bad)
    assert (not rep.all_nonneg) or (not rep.all_schur)


def test_verify_closed_loop_gain_shape_check(default_synthesis):
    system, res = default_synthesis
    with pytest.raises(ValueError):
        verify_closed_loop(system, [np.zeros((2, 2))] * system.r)


def test_result_serialization(default_synthesis):
    _, res = default_synthesis
    data = synthesis_result_to_dict(res)
    assert data["feasible"]
    assert np.allclose(np.array(data["K"][0]), res.K[0])
    assert data["report"]["all_schur"] and data["report"]["passed"]
    infeasible = synthesize_pdc(([2.0 * np.eye(2)], [np.zeros((2, 2))]))
    data = synthesis_result_to_dict(infeasible)
    assert not data["feasible"] and data["diagnostics"]
