"""Hybrid system data ``(C, f, D, g)``, state sets and motion planning problems.

Sets are membership predicates plus optional samplers rather than geometric
objects. Flow and jump sets take ``(x, u, tol)`` and must accept points
that violate their defining constraints by at most ``tol``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .arcs import SolutionPair

MEMBERSHIP_TOL = 1e-9

SetPredicate = Callable[[NDArray, NDArray, float], bool]
Map = Callable[[NDArray, NDArray], NDArray]
UnsafeSet = Callable[[NDArray, NDArray], bool]


class SamplingError(RuntimeError):
    """Rejection sampling ran out of attempts."""


def _vec(x: ArrayLike) -> NDArray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[lo, hi]``."""

    lo: NDArray
    hi: NDArray

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.shape != hi.shape:
            raise ValueError("box bounds have different shapes")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(hi < lo):
            raise ValueError(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x: ArrayLike, tol: float = 0.0) -> bool:
        x = _vec(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def sample(self, rng: np.random.Generator) -> NDArray:
        return rng.uniform(self.lo, self.hi)

    def distance(self, x: ArrayLike) -> float:
        x = _vec(x)
        gap = np.maximum(0.0, np.maximum(self.lo - x, x - self.hi))
        return float(np.linalg.norm(gap))

    def grid(self, points_per_axis: int) -> NDArray:
        axes = [
            np.array([lo]) if lo == hi else np.linspace(lo, hi, points_per_axis)
            for lo, hi in zip(self.lo, self.hi)
        ]
        return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, self.dim)

    def expanded(self, delta: float) -> Box:
        return Box(self.lo - delta, self.hi + delta)


class StateSet:
    """A subset of ``R^n``: membership test plus, optionally, a sampler.

    Parameters
    ----------
    contains : callable ``(x, tol) -> bool``
    dim : int
    sampler : callable ``rng -> x``, optional
        Draws members directly. Without one, :meth:`sample` falls back to
        rejection sampling inside ``bounds``.
    distance : callable ``x -> float``, optional
        Exact Euclidean distance to the set. Without one, distances are
        approximated against ``10**4`` cached members.
    bounds : Box, optional
        Region used for rejection sampling.
    """

    def __init__(
        self,
        contains: Callable[[NDArray, float], bool],
        dim: int,
        sampler: Optional[Callable[[np.random.Generator], NDArray]] = None,
        distance: Optional[Callable[[NDArray], float]] = None,
        bounds: Optional[Box] = None,
        points: Optional[NDArray] = None,
        empty: bool = False,
    ):
        self._contains = contains
        self.dim = dim
        self._sampler = sampler
        self._distance = distance
        self.bounds = bounds
        self.points = points
        self.is_empty = empty

    @classmethod
    def from_points(cls, points: ArrayLike) -> StateSet:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        P.setflags(write=False)

        def contains(x, tol=MEMBERSHIP_TOL):
            return bool(np.min(np.linalg.norm(P - _vec(x), axis=1)) <= tol)

        def sampler(rng):
            return P[0].copy() if len(P) == 1 else P[rng.integers(len(P))].copy()

        def distance(x):
            return float(np.min(np.linalg.norm(P - _vec(x), axis=1)))

        return cls(contains, P.shape[1], sampler, distance, points=P)

    @classmethod
    def point(cls, x: ArrayLike) -> StateSet:
        return cls.from_points([_vec(x)])

    @classmethod
    def box(cls, lo: ArrayLike, hi: ArrayLike) -> StateSet:
        b = Box(lo, hi)
        return cls(lambda x, tol=MEMBERSHIP_TOL: b.contains(x, tol), b.dim, b.sample, b.distance, bounds=b)

    @classmethod
    def empty(cls, dim: int) -> StateSet:
        def sampler(rng):
            raise SamplingError("cannot sample from an empty set")

        return cls(lambda x, tol=MEMBERSHIP_TOL: False, dim, sampler, lambda x: np.inf, empty=True)

    def contains(self, x: ArrayLike, tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(self._contains(_vec(x), tol))

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def sample(
        self,
        rng: np.random.Generator,
        bounds: Optional[Box] = None,
        max_attempts: int = 100_000,
    ) -> NDArray:
        if self._sampler is not None:
            return _vec(self._sampler(rng))
        region = bounds or self.bounds
        if region is None:
            raise SamplingError("set has neither a sampler nor sampling bounds")
        for _ in range(max_attempts):
            x = region.sample(rng)
            if self._contains(x, 0.0):
                return x
        raise SamplingError(
            f"no member found in {max_attempts} draws; the set may have zero measure in its bounds"
        )

    @cached_property
    def _distance_cloud(self) -> NDArray:
        # fixed seed keeps distances reproducible and independent of planner RNG
        rng = np.random.default_rng(0)
        return np.array([self.sample(rng) for _ in range(10_000)])

    def distance(self, x: ArrayLike) -> float:
        """Euclidean distance from ``x`` to the set."""
        x = _vec(x)
        if self._distance is not None:
            return float(self._distance(x))
        if self.is_empty:
            return np.inf
        if self.contains(x, 0.0):
            return 0.0
        return float(np.min(np.linalg.norm(self._distance_cloud - x, axis=1)))


@dataclass(frozen=True, eq=False)
class HybridSystem:
    """Hybrid system with inputs: flow ``x' = f(x, u)`` on ``C``, jump ``x+ = g(x, u)`` on ``D``.

    ``jump_set=None`` encodes ``D = {}``. The optional hooks let a system
    provide exact versions of quantities that otherwise fall back to
    generic approximations: state-space projections of ``C`` and ``D``
    (``flow_projection``/``jump_projection``, default: input grid search),
    direct samplers for them, zero-crossing functions, and an analytic
    ``inflation(delta)``.
    """

    n: int
    m: int
    flow_set: SetPredicate
    flow_map: Map
    jump_set: Optional[SetPredicate]
    jump_map: Optional[Map]
    state_bounds: Box
    input_bounds_flow: Box
    input_bounds_jump: Box
    flow_projection: Optional[Callable[[NDArray, float], bool]] = None
    jump_projection: Optional[Callable[[NDArray, float], bool]] = None
    flow_projection_sampler: Optional[Callable[[np.random.Generator], NDArray]] = None
    jump_projection_sampler: Optional[Callable[[np.random.Generator], NDArray]] = None
    flow_zero_crossing: Optional[Callable[[NDArray, NDArray], float]] = None
    jump_zero_crossing: Optional[Callable[[NDArray, NDArray], float]] = None
    inflation: Optional[Callable[[float], "HybridSystem"]] = None
    name: str = "hybrid-system"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.state_bounds.dim != self.n:
            raise ValueError("state bounds do not match the state dimension")
        if self.input_bounds_flow.dim != self.m or self.input_bounds_jump.dim != self.m:
            raise ValueError("input bounds do not match the input dimension")
        if (self.jump_set is None) != (self.jump_map is None):
            raise ValueError("jump set and jump map must be given together")

    @property
    def has_jumps(self) -> bool:
        return self.jump_set is not None

    def in_C(self, x: ArrayLike, u: ArrayLike, tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(self.flow_set(_vec(x), _vec(u), tol))

    def in_D(self, x: ArrayLike, u: ArrayLike, tol: float = MEMBERSHIP_TOL) -> bool:
        if self.jump_set is None:
            return False
        return bool(self.jump_set(_vec(x), _vec(u), tol))

    def f(self, x: NDArray, u: NDArray) -> NDArray:
        return self.flow_map(x, u)

    def g(self, x: NDArray, u: NDArray) -> NDArray:
        if self.jump_map is None:
            raise ValueError(f"{self.name} has no jump map")
        return _vec(self.jump_map(_vec(x), _vec(u)))

    def flow_prime(self) -> StateSet:
        """Closure of ``C'`` as a :class:`StateSet` restricted to the state bounds."""
        return StateSet(
            lambda x, tol=MEMBERSHIP_TOL: in_C_prime(self, x, tol),
            self.n,
            sampler=self.flow_projection_sampler,
            bounds=self.state_bounds,
        )

    def jump_prime(self) -> StateSet:
        if not self.has_jumps:
            return StateSet.empty(self.n)
        return StateSet(
            lambda x, tol=MEMBERSHIP_TOL: in_D_prime(self, x, tol),
            self.n,
            sampler=self.jump_projection_sampler,
            bounds=self.state_bounds,
        )


@dataclass(frozen=True, eq=False)
class MotionPlanningProblem:
    """``(X0, Xf, Xu, H)``: reach ``Xf`` from ``X0`` without entering ``Xu``."""

    X0: StateSet
    Xf: StateSet
    Xu: UnsafeSet
    system: HybridSystem
    name: str = "problem"

    def __post_init__(self):
        n = self.system.n
        if self.X0.dim != n or self.Xf.dim != n:
            raise ValueError("X0/Xf dimensions do not match the system state dimension")

    def with_system(self, system: HybridSystem) -> MotionPlanningProblem:
        return replace(self, system=system)


# -- projections ----------------------------------------------------------------


def in_C_prime(H: HybridSystem, x: ArrayLike, tol: float = MEMBERSHIP_TOL, grid: int = 17) -> bool:
    """Is there an input ``u`` in ``U_C`` with ``(x, u)`` in ``C``?

    Uses the system's analytic projection when it has one, otherwise a grid
    search over the flow input box with ``grid`` points per axis.
    """
    x = _vec(x)
    if H.flow_projection is not None:
        return bool(H.flow_projection(x, tol))
    return any(H.flow_set(x, u, tol) for u in H.input_bounds_flow.grid(grid))


def in_D_prime(H: HybridSystem, x: ArrayLike, tol: float = MEMBERSHIP_TOL, grid: int = 17) -> bool:
    """Is there an input ``u`` in ``U_D`` with ``(x, u)`` in ``D``?"""
    if not H.has_jumps:
        return False
    x = _vec(x)
    if H.jump_projection is not None:
        return bool(H.jump_projection(x, tol))
    return any(H.jump_set(x, u, tol) for u in H.input_bounds_jump.grid(grid))


# -- inflation ------------------------------------------------------------------


def _unit_rows(rng: np.random.Generator, k: int, d: int) -> NDArray:
    if d == 0:
        return np.zeros((k, 0))
    v = rng.standard_normal((k, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def ball_probes(n: int, m: int, count: int = 32) -> tuple[NDArray, NDArray]:
    """Deterministic offsets on the boundary of the product of unit balls.

    The first rows move one coordinate at a time (``+-e_i`` in ``x`` with
    ``u`` fixed, then the same in ``u``); the rest pair random unit
    directions in both spaces.
    """
    px, pu = [], []
    for i in range(n):
        for s in (1.0, -1.0):
            e = np.zeros(n)
            e[i] = s
            px.append(e)
            pu.append(np.zeros(m))
    for i in range(m):
        for s in (1.0, -1.0):
            e = np.zeros(m)
            e[i] = s
            px.append(np.zeros(n))
            pu.append(e)
    px, pu = px[:count], pu[:count]
    extra = count - len(px)
    if extra > 0:
        rng = np.random.default_rng(12345)
        px.extend(_unit_rows(rng, extra, n))
        pu.extend(_unit_rows(rng, extra, m))
    return np.array(px).reshape(-1, n), np.array(pu).reshape(-1, m)


def _inflated_predicate(
    base: SetPredicate,
    delta: float,
    gauge: Optional[Callable[[NDArray, NDArray], float]],
    n: int,
    m: int,
    n_probes: int,
) -> SetPredicate:
    if gauge is not None:
        return lambda x, u, tol=MEMBERSHIP_TOL: gauge(x, u) <= delta + tol
    px, pu = ball_probes(n, m, n_probes)
    # interior probes at half radius catch thin sets the boundary ring misses
    px = np.vstack([px, 0.5 * px])
    pu = np.vstack([pu, 0.5 * pu])

    def member(x, u, tol=MEMBERSHIP_TOL):
        if base(x, u, tol):
            return True
        for dx, du in zip(px, pu):
            if base(x + delta * dx, u + delta * du, tol):
                return True
        return False

    return member


def inflate(
    H: HybridSystem,
    delta: float,
    flow_gauge: Optional[Callable[[NDArray, NDArray], float]] = None,
    jump_gauge: Optional[Callable[[NDArray, NDArray], float]] = None,
    n_probes: int = 64,
) -> HybridSystem:
    """The ``delta``-inflation of ``H``.

    ``C`` and ``D`` grow to every ``(x, u)`` within Euclidean distance
    ``delta`` of some ``(y, v)`` in the original set, measured separately in
    state and input. ``f`` and ``g`` are unchanged.

    Systems with an ``inflation`` hook get their exact inflated sets. Else,
    if a gauge ``(x, u) -> min over (y, v) in the set of max(|x-y|, |u-v|)``
    is supplied it decides membership exactly; otherwise membership is
    approximated by probing ``n_probes`` offsets in the ``delta`` ball, which
    can only under-approximate the inflated set.
    """
    if delta < 0:
        raise ValueError(f"inflation radius must be nonnegative, got {delta}")
    if delta == 0:
        return H
    if H.inflation is not None and flow_gauge is None and jump_gauge is None:
        return H.inflation(delta)
    C_d = _inflated_predicate(H.flow_set, delta, flow_gauge, H.n, H.m, n_probes)
    D_d = None
    if H.has_jumps:
        D_d = _inflated_predicate(H.jump_set, delta, jump_gauge, H.n, H.m, n_probes)
    return HybridSystem(
        n=H.n,
        m=H.m,
        flow_set=C_d,
        flow_map=H.flow_map,
        jump_set=D_d,
        jump_map=H.jump_map,
        state_bounds=H.state_bounds.expanded(delta),
        input_bounds_flow=H.input_bounds_flow.expanded(delta),
        input_bounds_jump=H.input_bounds_jump.expanded(delta),
        name=f"{H.name}+inflated({delta:g})",
        params={**H.params, "delta_inflation": delta},
    )


# -- clearance ------------------------------------------------------------------


def clearance_check(
    psi: SolutionPair,
    delta: float,
    H: HybridSystem,
    Xu: Optional[UnsafeSet],
    n_probes: int = 32,
    tol: float = MEMBERSHIP_TOL,
) -> bool:
    """Does ``psi`` keep a ``delta`` margin, checked at probe resolution?

    Samples on flow intervals with nonempty interior must keep their
    ``delta`` neighbourhood inside ``C``; samples where a jump happens must
    keep it inside ``D``; every neighbourhood must miss ``Xu``.
    """
    if delta <= 0:
        raise ValueError("clearance radius must be positive")
    px, pu = ball_probes(psi.n, psi.m, n_probes)
    px, pu = delta * px, delta * pu
    J = psi.phi.n_jumps
    for j, ((t, X), (_, U)) in enumerate(zip(psi.phi.segments, psi.u.segments)):
        flowing = t[-1] > t[0]
        for k in range(len(t)):
            x, u = X[k], U[k]
            jumping = j < J and k == len(t) - 1
            if Xu is not None and Xu(x, u):
                return False
            for dx, du in zip(px, pu):
                y, v = x + dx, u + du
                if flowing and not H.in_C(y, v, tol):
                    return False
                if jumping and not H.in_D(y, v, tol):
                    return False
                if Xu is not None and Xu(y, v):
                    return False
    return True
