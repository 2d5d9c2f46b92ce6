"""Built-in hybrid systems and planning problems.

``bouncing_ball``
    Actuated ball: flows under gravity above the surface and is kicked by
    the input at impact.
``biped``
    Compass-gait walker with torso under pre-feedback, so the flow is a
    triple integrator in the leg and torso angles.
``point_mass``
    Double integrator on a line, no jumps. A reconstruction chosen for this
    package; its parameters are not taken from any published setup.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from .library import InputLibrary, build_flow_library, grid_levels
from .system import MEMBERSHIP_TOL, Box, HybridSystem, MotionPlanningProblem, StateSet


def _params_from(cls, params):
    if params is None:
        return cls()
    if isinstance(params, cls):
        return params
    return cls(**params)


# -- bouncing ball ----------------------------------------------------------------


@dataclass(frozen=True)
class BouncingBallParams:
    gamma: float = 9.81
    lam: float = 0.8
    height_max: float = 20.0
    speed_max: float = 25.0
    u_max: float = 4.0
    unsafe_u: float = 5.0
    x0: tuple = (15.0, 0.0)
    xf: tuple = (10.0, 0.0)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.lam < 1:
            raise ValueError("restitution must lie in (0, 1)")
        if not (self.height_max > 0 and self.speed_max > 0 and self.u_max >= 0):
            raise ValueError("bounds must be positive")


def _bb_system(p: BouncingBallParams, delta: float = 0.0) -> HybridSystem:
    gamma, lam, d = p.gamma, p.lam, delta

    def flow_set(x, u, tol=MEMBERSHIP_TOL):
        return x[0] >= -d - tol

    def flow_map(x, u):
        return np.array([x[1], -gamma])

    def jump_set(x, u, tol=MEMBERSHIP_TOL):
        if u[0] < -d - tol:
            return False
        strip = abs(x[0]) <= d + tol and x[1] <= tol
        # rounded end of the inflated ray around the origin
        return strip or (d > 0 and np.hypot(x[0], x[1]) <= d + tol)

    def jump_map(x, u):
        return np.array([x[0], -lam * x[1] + u[0]])

    def jump_projection(x, tol=MEMBERSHIP_TOL):
        return jump_set(x, np.array([p.u_max]), tol)

    def jump_sampler(rng):
        return np.array([0.0, rng.uniform(-p.speed_max, 0.0)])

    bounds = Box([-d, -p.speed_max - d], [p.height_max + d, p.speed_max + d])
    return HybridSystem(
        n=2,
        m=1,
        flow_set=flow_set,
        flow_map=flow_map,
        jump_set=jump_set,
        jump_map=jump_map,
        state_bounds=bounds,
        input_bounds_flow=Box([-d], [d]),
        input_bounds_jump=Box([-d], [p.u_max + d]),
        flow_projection=lambda x, tol=MEMBERSHIP_TOL: x[0] >= -d - tol,
        jump_projection=jump_projection,
        flow_projection_sampler=bounds.sample,
        jump_projection_sampler=jump_sampler if d == 0 else None,
        flow_zero_crossing=lambda x, u: x[0] + d,
        jump_zero_crossing=lambda x, u: x[0] + d,
        inflation=lambda delta_: _bb_system(p, delta_),
        name="bouncing_ball" if d == 0 else f"bouncing_ball+inflated({d:g})",
        params={**asdict(p), "delta_inflation": d},
    )


def make_bouncing_ball(params=None) -> tuple[HybridSystem, MotionPlanningProblem]:
    """Ball dropped from ``x0`` that must come to ``xf`` without kicks ``u >= unsafe_u``."""
    p = _params_from(BouncingBallParams, params)
    H = _bb_system(p)
    prob = MotionPlanningProblem(
        X0=StateSet.point(p.x0),
        Xf=StateSet.point(p.xf),
        Xu=lambda x, u: u[0] >= p.unsafe_u,
        system=H,
        name="bouncing_ball",
    )
    return H, prob


def bouncing_ball_library(u_levels=(0.0, 1.0, 2.0, 3.0, 4.0), t_star: float = 0.1) -> InputLibrary:
    return build_flow_library([[0.0]], t_star).with_jumps(np.array(u_levels, dtype=float)[:, None])


# -- biped ------------------------------------------------------------------------


@dataclass(frozen=True)
class BipedParams:
    """Compass walker with torso.

    ``omega_map`` maps the pre-impact state to post-impact angular
    velocities ``(w_p, w_s, w_t)``. Left as ``None`` it defaults to
    :func:`compass_gait_impact` with these masses and lengths.
    """

    phi_s: float = 0.70
    leg_length: float = 1.0
    torso_length: float = 1.0
    leg_mass: float = 1.0
    hip_mass: float = 1.0
    torso_mass: float = 1.0
    a_min: tuple = (-3.0, -3.0, -0.2)
    a_max: tuple = (3.0, 3.0, 0.2)
    theta_min: tuple = (-0.9, -0.9, -0.3)
    theta_max: tuple = (0.70, 0.9, 0.3)
    omega_min: tuple = (-1.0, -1.5, -0.3)
    omega_max: tuple = (1.5, 1.0, 0.3)
    omega_map: Optional[Callable[[NDArray], NDArray]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.phi_s > 0:
            raise ValueError("step angle must be positive")
        if np.any(np.asarray(self.a_min) > np.asarray(self.a_max)):
            raise ValueError("acceleration bounds are reversed")
        if min(self.leg_length, self.leg_mass, self.hip_mass) <= 0:
            raise ValueError("masses and lengths must be positive")


def compass_gait_impact(x: NDArray, p: BipedParams) -> NDArray:
    """Plastic impact of the compass gait, legs of uniform mass.

    Angular momentum of the whole walker about the new contact point and of
    the trailing leg about the hip is conserved. Legs are labelled before
    the impact, so the returned ``(w_p, w_s, w_t)`` already belongs to the
    new stance and swing legs. The torso rate passes through unchanged.
    This is a simplified stand-in; pass ``omega_map`` for another model.
    """
    m, mh, l = p.leg_mass, p.hip_mass, p.leg_length
    a = b = 0.5 * l
    th_p, th_s = x[0], x[1]
    c = np.cos(th_p - th_s)
    q_minus = np.array([[-m * a * b, -m * a * b + (mh * l**2 + 2 * m * a * l) * c], [0.0, -m * a * b]])
    q_plus = np.array(
        [[m * b * (b - l * c), m * l * (l - b * c) + m * a**2 + mh * l**2], [m * b**2, -m * b * l * c]]
    )
    # ordering (swing, stance) before and (new swing, new stance) after
    w_minus = np.array([x[4], x[3]])
    w_plus = np.linalg.solve(q_plus, q_minus @ w_minus)
    return np.array([w_plus[1], w_plus[0], x[5]])


def _biped_system(p: BipedParams, delta: float = 0.0) -> HybridSystem:
    d = delta
    phi_s = p.phi_s
    omega_map = p.omega_map or (lambda x: compass_gait_impact(x, p))

    def flow_set(x, u, tol=MEMBERSHIP_TOL):
        return phi_s - x[0] >= -d - tol

    def flow_map(x, u):
        return np.concatenate([x[3:6], u])

    def jump_set(x, u, tol=MEMBERSHIP_TOL):
        if d == 0:
            return abs(phi_s - x[0]) <= tol and x[3] >= -tol
        return np.hypot(phi_s - x[0], min(x[3], 0.0)) <= d + tol

    def jump_map(x, u):
        return np.concatenate([[x[1], x[0], x[2]], omega_map(np.asarray(x, dtype=float))])

    lo = np.concatenate([p.theta_min, p.omega_min])
    hi = np.concatenate([p.theta_max, p.omega_max])
    bounds = Box(lo - d, hi + d)

    def jump_sampler(rng):
        x = bounds.sample(rng)
        x[0] = phi_s
        x[3] = rng.uniform(0.0, hi[3])
        return x

    return HybridSystem(
        n=6,
        m=3,
        flow_set=flow_set,
        flow_map=flow_map,
        jump_set=jump_set,
        jump_map=jump_map,
        state_bounds=bounds,
        input_bounds_flow=Box(np.asarray(p.a_min) - d, np.asarray(p.a_max) + d),
        input_bounds_jump=Box(np.full(3, -d), np.full(3, d)),
        flow_projection=lambda x, tol=MEMBERSHIP_TOL: flow_set(x, None, tol),
        jump_projection=lambda x, tol=MEMBERSHIP_TOL: jump_set(x, None, tol),
        flow_projection_sampler=bounds.sample if hi[0] <= phi_s else None,
        jump_projection_sampler=jump_sampler if d == 0 else None,
        flow_zero_crossing=lambda x, u: phi_s - x[0] + d,
        jump_zero_crossing=lambda x, u: phi_s - x[0] + d,
        inflation=lambda delta_: _biped_system(p, delta_),
        name="biped" if d == 0 else f"biped+inflated({d:g})",
        params={k: v for k, v in asdict(p).items() if k != "omega_map"} | {"delta_inflation": d},
    )


def biped_swap(theta: NDArray) -> NDArray:
    """Planted and swing leg angles trade places; the torso angle stays."""
    return np.array([theta[1], theta[0], theta[2]])


def make_biped(params=None) -> tuple[HybridSystem, MotionPlanningProblem]:
    """One walking step: from just after an impact to just before the next."""
    p = _params_from(BipedParams, params)
    H = _biped_system(p)
    xf = np.array([p.phi_s, -p.phi_s, 0.0, 0.1, 0.1, 0.0])
    x0 = H.g(xf, np.zeros(3))
    a_lo, a_hi = np.asarray(p.a_min), np.asarray(p.a_max)

    def unsafe(x, u):
        return bool(np.any(u < a_lo) or np.any(u > a_hi)) or H.in_D(x, u)

    prob = MotionPlanningProblem(
        X0=StateSet.point(x0), Xf=StateSet.point(xf), Xu=unsafe, system=H, name="biped"
    )
    return H, prob


def biped_library(t_star: float = 0.2) -> InputLibrary:
    axes = [
        [-2.0, -1.0, 0.0, 1.0, 2.0],
        [-2.0, -1.0, 0.0, 1.0, 2.0],
        [-0.15, -0.0875, -0.025, 0.0375, 0.10],
    ]
    return build_flow_library(grid_levels(axes), t_star).with_jumps(np.zeros((1, 3)))


# -- point mass -------------------------------------------------------------------


@dataclass(frozen=True)
class PointMassParams:
    pos_max: float = 10.0
    vel_max: float = 5.0
    u_max: float = 2.0
    x0: tuple = (-5.0, 0.0)
    xf: tuple = (5.0, 0.0)
    vel_unsafe: float = 4.0

    def __post_init__(self):
        if not self.u_max > 0:
            raise ValueError("u_max must be positive")
        if not (self.pos_max > 0 and self.vel_max > 0):
            raise ValueError("bounds must be positive")


def _pm_system(p: PointMassParams, delta: float = 0.0) -> HybridSystem:
    d = delta
    xbox = Box([-p.pos_max, -p.vel_max], [p.pos_max, p.vel_max])
    ubox = Box([-p.u_max], [p.u_max])

    def flow_set(x, u, tol=MEMBERSHIP_TOL):
        if d == 0:
            return xbox.contains(x, tol) and ubox.contains(u, tol)
        return xbox.distance(x) <= d + tol and ubox.distance(u) <= d + tol

    def margin(x, u):
        # signed distance to the state box boundary, positive inside
        inside = min(np.min(x - xbox.lo), np.min(xbox.hi - x))
        return inside + d if inside >= 0 else d - xbox.distance(x)

    bounds = xbox.expanded(d)
    return HybridSystem(
        n=2,
        m=1,
        flow_set=flow_set,
        flow_map=lambda x, u: np.array([x[1], u[0]]),
        jump_set=None,
        jump_map=None,
        state_bounds=bounds,
        input_bounds_flow=ubox.expanded(d),
        input_bounds_jump=Box([0.0], [0.0]),
        flow_projection=lambda x, tol=MEMBERSHIP_TOL: xbox.distance(x) <= d + tol,
        flow_projection_sampler=bounds.sample,
        flow_zero_crossing=margin,
        jump_zero_crossing=margin,
        inflation=lambda delta_: _pm_system(p, delta_),
        name="point_mass" if d == 0 else f"point_mass+inflated({d:g})",
        params={**asdict(p), "delta_inflation": d},
    )


def make_point_mass(params=None) -> tuple[HybridSystem, MotionPlanningProblem]:
    """Move between two rest states without exceeding ``vel_unsafe``."""
    p = _params_from(PointMassParams, params)
    H = _pm_system(p)

    def unsafe(x, u):
        return abs(x[1]) >= p.vel_unsafe or abs(u[0]) > p.u_max

    prob = MotionPlanningProblem(
        X0=StateSet.point(p.x0), Xf=StateSet.point(p.xf), Xu=unsafe, system=H, name="point_mass"
    )
    return H, prob


def point_mass_library(levels=(-2.0, -1.0, 0.0, 1.0, 2.0), t_star: float = 0.5) -> InputLibrary:
    return build_flow_library([[v] for v in levels], t_star)


# -- registry ---------------------------------------------------------------------


@dataclass(frozen=True)
class GalleryEntry:
    """Factory plus the planner settings that go with the shipped instance."""

    factory: Callable
    params_type: type
    library: Callable[[], InputLibrary]
    eps: float
    p_n: float
    max_iter: int
    step: float = 1e-3


GALLERY = {
    "bouncing_ball": GalleryEntry(make_bouncing_ball, BouncingBallParams, bouncing_ball_library, 0.2, 0.5, 2000),
    "biped": GalleryEntry(make_biped, BipedParams, biped_library, 0.3, 0.9, 5000, step=1e-2),
    "point_mass": GalleryEntry(make_point_mass, PointMassParams, point_mass_library, 0.2, 1.0, 5000, step=1e-2),
}


def get_entry(name: str) -> GalleryEntry:
    try:
        return GALLERY[name]
    except KeyError:
        raise ValueError(f"unknown gallery system {name!r}; choose from {sorted(GALLERY)}") from None
