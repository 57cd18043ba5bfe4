import math

import numpy as np
import pytest

from copos.fuzzy import (
    CONTROL_DOMAIN,
    DEFAULT_DOMAIN,
    DEFAULT_T,
    DegenerateSectorError,
    Domain,
    PremiseBounds,
    augment,
    blend,
    build_vertices,
    clamp_premises,
    discretize_euler,
    membership,
    premise_bounds,
    premise_values,
    system_from_dict,
    system_to_dict,
)
from copos.model import STEPANOVA_TABLE1, State, integrate_rk4, zero_policy

P = STEPANOVA_TABLE1

# Published vertex entries (theta1 max/min, theta2 max/min, theta3 max/min)
PUB_T1 = (5.0178, -5.1391)
PUB_T2 = (-0.3740, -8.3121)
PUB_T3 = (-0.100, -1000.0)


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain(0.0, 1000.0, 0.0, 5.0)
    with pytest.raises(ValueError):
        Domain(10.0, 1.0, 0.0, 5.0)
    with pytest.raises(ValueError):
        Domain(0.1, 1000.0, 5.0, 1.0)
    # zero-width boxes construct but collapse at fuzzification time
    with pytest.raises(DegenerateSectorError):
        premise_bounds(P, Domain(1.0, 1.0, 0.0, 5.0))


def test_premise_values_published_points():
    t1, _, _ = premise_values(P, State(1000.0, 5.0))
    assert t1 == pytest.approx(-5.1391, abs=1e-4)
    t1, _, _ = premise_values(P, State(0.1, 0.0))
    assert t1 == pytest.approx(5.0178, abs=1e-4)
    _, _, t3 = premise_values(P, State(1000.0, 2.0))
    assert t3 == pytest.approx(-1000.0, abs=1e-12)


def test_premise_bounds_endpoint_published():
    b = premise_bounds(P, DEFAULT_DOMAIN, "endpoint")
    assert b.theta1[1] == pytest.approx(PUB_T1[0], abs=1e-4)
    assert b.theta1[0] == pytest.approx(PUB_T1[1], abs=1e-4)
    assert b.theta2[1] == pytest.approx(PUB_T2[0], abs=1e-4)
    assert b.theta2[0] == pytest.approx(PUB_T2[1], abs=1e-4)
    assert b.theta3[1] == pytest.approx(PUB_T3[0], abs=1e-12)
    assert b.theta3[0] == pytest.approx(PUB_T3[1], abs=1e-12)


def test_premise_bounds_global_interior_maximum():
    b = premise_bounds(P, DEFAULT_DOMAIN, "global")
    # oracle: dense 1-D grid maximization of theta2 over x1
    x1 = np.linspace(DEFAULT_DOMAIN.x1_min, DEFAULT_DOMAIN.x1_max, 2_000_001)
    grid_max = float((P.mu_I * (x1 - P.beta * x1 ** 2) - P.delta).max())
    assert b.theta2[1] == pytest.approx(grid_max, abs=1e-6)
    assert b.theta2[1] == pytest.approx(P.mu_I / (4 * P.beta) - P.delta, rel=1e-12)
    assert b.theta2[1] == pytest.approx(0.0838, abs=1e-4)
    # maximum is attained at x1 = 1/(2 beta)
    assert 1.0 / (2 * P.beta) == pytest.approx(189.39, abs=0.01)


def test_global_bounds_dominate_endpoint():
    for domain in (DEFAULT_DOMAIN, CONTROL_DOMAIN, Domain(10.0, 500.0, 0.1, 3.0)):
        ep = premise_bounds(P, domain, "endpoint")
        gl = premise_bounds(P, domain, "global")
        for (elo, ehi), (glo, ghi) in zip(ep.intervals(), gl.intervals()):
            assert glo <= elo + 1e-12
            assert ghi >= ehi - 1e-12


def test_membership_corners_and_midpoint():
    b = premise_bounds(P, DEFAULT_DOMAIN)
    h_max = membership((b.theta1[1], b.theta2[1], b.theta3[1]), b)
    assert h_max == pytest.approx(np.eye(8)[0], abs=1e-15)
    h_min = membership((b.theta1[0], b.theta2[0], b.theta3[0]), b)
    assert h_min == pytest.approx(np.eye(8)[7], abs=1e-15)
    mid = tuple(0.5 * (lo + hi) for lo, hi in b.intervals())
    assert membership(mid, b) == pytest.approx(np.full(8, 0.125), abs=1e-15)


def test_membership_simplex_property():
    b = premise_bounds(P, DEFAULT_DOMAIN)
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        s = State(float(rng.uniform(0.1, 1000.0)), float(rng.uniform(0.0, 5.0)))
        h = membership(premise_values(P, s), b)
        assert abs(float(h.sum()) - 1.0) <= 1e-12
        assert h.min() >= 0.0 and h.max() <= 1.0


def test_membership_degenerate_sector():
    with pytest.raises(DegenerateSectorError):
        PremiseBounds(theta1=(1.0, 1.0), theta2=(0.0, 1.0), theta3=(-1.0, 0.0),
                      mode="endpoint")


def test_clamp_premises_counts():
    b = premise_bounds(P, DEFAULT_DOMAIN)
    theta = (b.theta1[1] + 1.0, 0.5 * sum(b.theta2), b.theta3[0] - 5.0)
    clamped, n = clamp_premises(theta, b)
    assert n == 2
    assert clamped[0] == b.theta1[1]
    assert clamped[2] == b.theta3[0]


def test_build_vertices_match_published_matrices():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN, "endpoint"))
    A_pub = {
        0: (PUB_T1[0], PUB_T2[0]), 1: (PUB_T1[0], PUB_T2[0]),
        2: (PUB_T1[0], PUB_T2[1]), 3: (PUB_T1[0], PUB_T2[1]),
        4: (PUB_T1[1], PUB_T2[0]), 5: (PUB_T1[1], PUB_T2[0]),
        6: (PUB_T1[1], PUB_T2[1]), 7: (PUB_T1[1], PUB_T2[1]),
    }
    for i in range(8):
        expect_A = np.diag(A_pub[i])
        expect_B = np.diag([PUB_T3[0] if i % 2 == 0 else PUB_T3[1], 1.0])
        assert np.allclose(vs.A[i], expect_A, atol=1e-4)
        assert np.allclose(vs.B[i], expect_B, atol=1e-4)
        assert vs.B[i][1, 1] == 1.0
    assert np.array_equal(vs.C, np.eye(2))


def test_blend_corners_and_mean():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN))
    h = np.eye(8)[0]
    A, B = blend(h, vs)
    assert np.array_equal(A, vs.A[0]) and np.array_equal(B, vs.B[0])
    A, B = blend(np.full(8, 0.125), vs)
    assert np.allclose(A, sum(vs.A) / 8.0)
    assert np.allclose(B, sum(vs.B) / 8.0)


def test_blend_rejects_simplex_violation():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN))
    with pytest.raises(ValueError):
        blend(np.full(8, 0.2), vs)
    h = np.zeros(8)
    h[0], h[1] = 1.5, -0.5
    with pytest.raises(ValueError):
        blend(h, vs)


def test_sector_exactness():
    # blended matrices reproduce the directly evaluated premise matrices;
    # this needs bounds that actually enclose the sectors, i.e. global mode
    # (endpoint bounds miss theta2's interior maximum on the full box)
    b = premise_bounds(P, DEFAULT_DOMAIN, "global")
    vs = build_vertices(b)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10_000):
        s = State(float(rng.uniform(0.1, 1000.0)), float(rng.uniform(0.0, 5.0)))
        t1, t2, t3 = premise_values(P, s)
        h = membership((t1, t2, t3), b)
        A, B = blend(h, vs)
        err = max(abs(A[0, 0] - t1), abs(A[1, 1] - t2), abs(B[0, 0] - t3),
                  abs(A[0, 1]), abs(A[1, 0]), abs(B[0, 1]), abs(B[1, 0] ),
                  abs(B[1, 1] - 1.0))
        worst = max(worst, err)
    assert worst < 1e-10


def test_augment_block_structure():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN))
    avs = augment(vs)
    for Ab, Bb, Ai, Bi in zip(avs.Abar, avs.Bbar, vs.A, vs.B):
        assert Ab.shape == (4, 4) and Bb.shape == (4, 2)
        assert np.array_equal(Ab[:2, :2], Ai)
        assert np.array_equal(Ab[2:, :2], -np.eye(2))
        assert np.array_equal(Ab[:, 2:], np.zeros((4, 2)))
        assert np.array_equal(Bb[:2, :], Bi)
        assert np.array_equal(Bb[2:, :], np.zeros((2, 2)))
    assert avs.Cbar.shape == (2, 4)
    assert np.array_equal(avs.Cbar, np.hstack([np.eye(2), np.zeros((2, 2))]))
    # reference injection touches only the integrator rows
    zr = np.array([0.0, 0.0, 50.0, 1.6])
    assert np.array_equal(avs.Dbar @ zr, np.array([0.0, 0.0, 50.0, 1.6]))
    assert not avs.discrete and avs.T is None


def test_discretize_euler_structure():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN))
    avs = augment(vs)
    T = 0.01
    dvs = discretize_euler(avs, T)
    assert dvs.discrete and dvs.T == T
    for Ad, Ab in zip(dvs.Abar, avs.Abar):
        assert np.allclose(Ad, np.eye(4) + T * Ab, atol=1e-15)
    for Bd, Bb in zip(dvs.Bbar, avs.Bbar):
        assert np.allclose(Bd, T * Bb, atol=1e-15)
    assert np.allclose(dvs.Dbar, T * avs.Dbar)
    # diagonal structure: Ad(0,0) = 1 + T * theta1 corner
    b = avs.premise_bounds
    assert dvs.Abar[0][0, 0] == pytest.approx(1 + T * b.theta1[1], rel=1e-15)
    # T -> 0 limit approaches the identity
    tiny = discretize_euler(avs, 1e-9)
    assert np.allclose(tiny.Abar[3], np.eye(4), atol=1e-7)
    with pytest.raises(ValueError):
        discretize_euler(avs, 0.0)
    with pytest.raises(ValueError):
        discretize_euler(dvs, 0.01)


def test_discrete_open_loop_tracks_rk4_oracle():
    # iterate the discrete T-S model with the physically-unforced input
    # u = (0, alpha); compare against the RK4 oracle over 10 days
    b = premise_bounds(P, DEFAULT_DOMAIN)
    dvs = discretize_euler(augment(build_vertices(b)), DEFAULT_T)
    n = int(round(10.0 / DEFAULT_T))
    xbar = np.array([600.0, 0.1, 0.0, 0.0])
    U = np.array([0.0, P.alpha])
    for _ in range(n):
        h = membership(premise_values(P, State(xbar[0], xbar[1])), b)
        Ad, Bd = blend(h, dvs)
        xbar = Ad @ xbar + Bd @ U  # z_r = 0: no reference injection
    oracle = integrate_rk4(P, State(600.0, 0.1), zero_policy, t_end=10.0, dt=DEFAULT_T)
    rel = np.abs(xbar[:2] - oracle.states[-1]) / np.abs(oracle.states[-1])
    assert rel.max() < 0.02


def test_serialization_roundtrip():
    vs = build_vertices(premise_bounds(P, DEFAULT_DOMAIN))
    for system in (vs, augment(vs), discretize_euler(augment(vs), 0.01)):
        data = system_to_dict(system)
        back = system_from_dict(data)
        for M1, M2 in zip(system.state_matrices, back.state_matrices):
            assert np.array_equal(M1, M2)
        for M1, M2 in zip(system.input_matrices, back.input_matrices):
            assert np.array_equal(M1, M2)
        assert back.premise_bounds == system.premise_bounds
