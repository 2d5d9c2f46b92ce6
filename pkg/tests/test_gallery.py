import numpy as np
import pytest

from hyrrt import FlowInputSignal, IntegratorScheme, continuous_simulator, in_C_prime, in_D_prime
from hyrrt.gallery import (
    GALLERY,
    BipedParams,
    BouncingBallParams,
    biped_swap,
    compass_gait_impact,
    get_entry,
    make_biped,
    make_bouncing_ball,
    make_point_mass,
)


def _e(t):
    return np.array([np.sin(t), np.cos(t)])


def _de(t):
    return np.array([np.cos(t), -np.sin(t)])


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def impact_oracle(x, p):
    """Post-impact leg rates from explicit angular momenta of the three point masses.

    Conserves the walker's momentum about the landing foot and the trailing
    leg's momentum about the hip; geometry is built from positions and
    velocities rather than from the closed-form matrices.
    """
    m, mh, l = p.leg_mass, p.hip_mass, p.leg_length
    a = b = l / 2
    tp, ts, wp, ws = x[0], x[1], x[3], x[4]
    landing = l * _e(tp) - l * _e(ts)

    def bodies(tp, ts, wp, ws, foot):
        hip, v_hip = foot + l * _e(tp), l * wp * _de(tp)
        stance, v_stance = foot + a * _e(tp), a * wp * _de(tp)
        swing, v_swing = hip - b * _e(ts), v_hip - b * ws * _de(ts)
        return [(m, stance, v_stance), (mh, hip, v_hip), (m, swing, v_swing)]

    pre = bodies(tp, ts, wp, ws, np.zeros(2))
    L_total = sum(mm * _cross(r - landing, v) for mm, r, v in pre)
    L_trailing = m * _cross(pre[0][1] - pre[1][1], pre[0][2])

    def post(w):
        q = bodies(ts, tp, w[0], w[1], landing)
        return np.array([sum(mm * _cross(r - landing, v) for mm, r, v in q), m * _cross(q[2][1] - q[1][1], q[2][2])])

    A = np.column_stack([post([1.0, 0.0]), post([0.0, 1.0])])
    return np.linalg.solve(A, [L_total, L_trailing])


# -- bouncing ball ----------------------------------------------------------------------


def test_bouncing_ball_membership():
    H, _ = make_bouncing_ball()
    assert H.in_C([3.0, -1.0], [7.0]) and not H.in_D([3.0, -1.0], [7.0])
    assert H.in_D([0.0, -1.0], [0.0]) and not H.in_D([0.0, 1.0], [0.0])
    assert not H.in_D([0.0, -1.0], [-0.5])


def test_bouncing_ball_problem_sets():
    _, prob = make_bouncing_ball()
    assert prob.X0.contains([15.0, 0.0]) and prob.X0.distance([15.0, 1.0]) == 1.0
    assert prob.Xf.contains([10.0, 0.0])
    assert prob.Xu([1.0, 1.0], [5.0]) and prob.Xu([1.0, 1.0], [9.0])
    assert not prob.Xu([1.0, 1.0], [4.999])


def test_bouncing_ball_jump_map():
    H, _ = make_bouncing_ball()
    np.testing.assert_allclose(H.g([0.0, -10.0], [0.0]), [0.0, 8.0])
    np.testing.assert_allclose(H.g([0.0, -2.0], [1.0]), [0.0, 2.6])


def test_unactuated_bounce_loses_energy():
    H, _ = make_bouncing_ball()
    for v in np.linspace(-25, -0.1, 50):
        out = H.g([0.0, v], [0.0])
        assert abs(out[1]) == pytest.approx(0.8 * abs(v)) and abs(out[1]) < abs(v)


def test_bouncing_ball_params_validation():
    with pytest.raises(ValueError):
        BouncingBallParams(lam=1.0)
    with pytest.raises(ValueError):
        BouncingBallParams(gamma=0.0)
    H, _ = make_bouncing_ball({"gamma": 1.62, "lam": 0.5})
    assert H.f(np.zeros(2), np.zeros(1))[1] == -1.62


# -- biped ---------------------------------------------------------------------------


def test_biped_goal_and_start():
    H, prob = make_biped()
    xf = np.array([0.70, -0.70, 0.0, 0.1, 0.1, 0.0])
    assert prob.Xf.contains(xf)
    x0 = prob.X0.sample(np.random.default_rng(0))
    np.testing.assert_allclose(x0[:3], [-0.70, 0.70, 0.0])
    np.testing.assert_allclose(x0[3:5], impact_oracle(xf, BipedParams()), atol=1e-12)
    np.testing.assert_allclose(x0, [-0.7, 0.7, 0.0, 2.2289e-4, -0.099924, 0.0], atol=1e-6)


def test_impact_matches_momentum_oracle():
    p = BipedParams()
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = np.array([0.7, rng.uniform(-0.9, 0.9), 0.1, rng.uniform(0, 1.5), rng.uniform(-1.5, 1.0), 0.05])
        np.testing.assert_allclose(compass_gait_impact(x, p)[:2], impact_oracle(x, p), atol=1e-10)


def test_impact_with_other_masses_matches_oracle():
    p = BipedParams(leg_mass=2.0, hip_mass=5.0, leg_length=0.8)
    x = np.array([0.7, -0.4, 0.0, 0.6, -0.3, 0.0])
    np.testing.assert_allclose(compass_gait_impact(x, p)[:2], impact_oracle(x, p), atol=1e-10)


def test_swap_exchanges_legs():
    np.testing.assert_array_equal(biped_swap(np.array([0.3, -0.2, 0.05])), [-0.2, 0.3, 0.05])


def test_pluggable_contact_map():
    H, _ = make_biped({"omega_map": lambda x: np.array([1.0, 2.0, 3.0])})
    out = H.g(np.array([0.7, -0.7, 0.0, 0.1, 0.1, 0.0]), np.zeros(3))
    np.testing.assert_array_equal(out, [-0.7, 0.7, 0.0, 1.0, 2.0, 3.0])


def test_biped_unsafe_accelerations():
    _, prob = make_biped()
    x = np.array([0.1, -0.1, 0.0, 0.2, 0.2, 0.0])
    assert prob.Xu(x, np.array([3.1, 0.0, 0.0]))
    assert prob.Xu(x, np.array([0.0, -3.1, 0.0]))
    assert prob.Xu(x, np.array([0.0, 0.0, 0.21]))
    assert not prob.Xu(x, np.array([3.0, -3.0, 0.2]))


def test_biped_sets():
    H, prob = make_biped()
    u = np.zeros(3)
    assert H.in_C([0.5, 0, 0, 0, 0, 0], u) and not H.in_C([0.8, 0, 0, 0, 0, 0], u)
    assert H.in_D([0.7, 0, 0, 0.3, 0, 0], u) and not H.in_D([0.7, 0, 0, -0.3, 0, 0], u)
    # touching the switching surface while moving forward is unsafe
    assert prob.Xu([0.7, 0, 0, 0.3, 0, 0], u)


def test_biped_flow_integrates_rates():
    H, _ = make_biped()
    x0 = np.array([0.0, 0.1, -0.05, 0.5, -0.4, 0.1])
    a = np.array([1.0, -2.0, 0.1])
    psi = continuous_simulator(H, "flow", x0, FlowInputSignal(0.4, a), IntegratorScheme("rk4", 1e-2))
    for t, _, x in psi.phi.samples():
        np.testing.assert_allclose(x[:3], x0[:3] + x0[3:] * t + 0.5 * a * t**2, atol=1e-12)
        np.testing.assert_allclose(x[3:], x0[3:] + a * t, atol=1e-12)


def test_biped_flow_stops_at_impact_surface():
    H, _ = make_biped()
    x0 = np.array([0.6, -0.6, 0.0, 1.0, 0.0, 0.0])
    psi = continuous_simulator(H, "jump", x0, FlowInputSignal(0.2, np.zeros(3)), IntegratorScheme("rk4", 1e-2))
    assert psi.end.t == pytest.approx(0.1, abs=1e-8)
    assert H.in_D(psi.phi.final, np.zeros(3))


# -- point mass -------------------------------------------------------------------------


def test_point_mass_has_no_jumps():
    H, _ = make_point_mass()
    rng = np.random.default_rng(2)
    assert not any(in_D_prime(H, H.state_bounds.sample(rng)) for _ in range(200))
    assert H.jump_prime().is_empty


def test_point_mass_double_integrator():
    H, _ = make_point_mass()
    psi = continuous_simulator(H, "flow", [0.0, 0.0], FlowInputSignal(1.0, [1.0]), IntegratorScheme("rk4", 1e-2))
    np.testing.assert_allclose(psi.phi.final, [0.5, 1.0], atol=1e-12)


def test_point_mass_stops_at_box_edge():
    H, _ = make_point_mass()
    psi = continuous_simulator(H, "flow", [9.0, 2.0], FlowInputSignal(1.0, [0.0]), IntegratorScheme("rk4", 1e-2))
    assert psi.end.t == pytest.approx(0.5, abs=1e-8)
    assert psi.phi.final[0] == pytest.approx(10.0, abs=1e-8)


def test_point_mass_unsafe_speed():
    _, prob = make_point_mass()
    assert prob.Xu([0.0, 4.0], [0.0]) and prob.Xu([0.0, -4.5], [0.0])
    assert not prob.Xu([0.0, 3.9], [2.0])


# -- zero-crossing conventions ------------------------------------------------------------


def region_points(H, rng, k=10_000):
    lo, hi = H.state_bounds.lo, H.state_bounds.hi
    span = hi - lo
    return rng.uniform(lo - 0.5 * span, hi + 0.5 * span, (k, H.n)), rng.uniform(-1, 1, (k, H.m))


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_zero_crossing_signs(name):
    H, _ = get_entry(name).factory(None)
    rng = np.random.default_rng(3)
    X, U = region_points(H, rng)
    U = np.clip(U, H.input_bounds_flow.lo, H.input_bounds_flow.hi)
    n_in = n_out = 0
    for x, u in zip(X, U):
        hf = H.flow_zero_crossing(x, u)
        if H.in_C(x, u, 0.0):
            assert hf >= 0
            n_in += 1
        else:
            assert hf < 0
            n_out += 1
        hg = H.jump_zero_crossing(x, u)
        # h_g vanishes before the state can reach D from inside C
        if H.in_D(x, u, 0.0):
            assert hg <= 0
    assert n_in > 100 and n_out > 100


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_zero_crossing_vanishes_on_boundary(name):
    H, _ = get_entry(name).factory(None)
    u = H.input_bounds_flow.lo.copy()
    boundary = {
        "bouncing_ball": [0.0, -2.0],
        "biped": [0.7, 0.0, 0.0, 0.2, 0.0, 0.0],
        "point_mass": [10.0, 1.0],
    }[name]
    assert H.flow_zero_crossing(np.array(boundary), u) == pytest.approx(0.0, abs=1e-12)


def test_projection_fallback_sampler_for_biped():
    H, _ = make_biped()
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = H.flow_prime().sample(rng)
        assert in_C_prime(H, x)
        xd = H.jump_prime().sample(rng)
        assert in_D_prime(H, xd)


def test_unknown_gallery_id():
    with pytest.raises(ValueError):
        get_entry("unicycle")
