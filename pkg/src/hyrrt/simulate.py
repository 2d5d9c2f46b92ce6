"""Continuous and discrete simulators producing sampled solution pairs.

The continuous simulator integrates with a fixed step, watches a
zero-crossing function for the active priority rule, and localises the
event by bisection over re-integrated sub-steps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .arcs import HybridArc, SolutionPair
from .system import MEMBERSHIP_TOL, HybridSystem

FORWARD_EULER = "forward-euler"
BACKWARD_EULER = "backward-euler"
RK4 = "rk4"
METHODS = (FORWARD_EULER, BACKWARD_EULER, RK4)


class PriorityRule(str, enum.Enum):
    """What to do in ``C n D``: keep flowing, or stop so a jump can happen."""

    FLOW = "flow"
    JUMP = "jump"


class ImplicitSolverError(RuntimeError):
    """Backward Euler's fixed-point iteration did not converge."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(f"implicit step did not converge: residual {residual:.3g} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class IntegratorScheme:
    """Fixed-step scheme ``F_s``.

    ``max_iter``, ``residual_tol`` and ``damping`` only matter for backward
    Euler, which is solved by damped fixed-point iteration.
    """

    method: str = RK4
    step: float = 1e-3
    max_iter: int = 100
    residual_tol: float = 1e-12
    damping: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.step > 0:
            raise ValueError("integration step must be positive")
        if not (self.residual_tol > 0 and self.max_iter > 0 and 0 < self.damping <= 1):
            raise ValueError("invalid implicit-solver settings")


@dataclass(frozen=True)
class ZeroCrossingConfig:
    """Zero-crossing functions ``h_f`` (for ``C``) and ``h_g`` (for ``C \\ D``)."""

    h_f: Callable[[NDArray, NDArray], float]
    h_g: Callable[[NDArray, NDArray], float]
    tol_t: float = 1e-9
    max_iter: int = 60

    def __post_init__(self):
        if not self.tol_t > 0:
            raise ValueError("tol_t must be positive")

    @classmethod
    def for_system(cls, H: HybridSystem, tol_t: float = 1e-9, max_iter: int = 60) -> ZeroCrossingConfig:
        """The system's own functions, or +-1 indicator functions as a fallback."""
        h_f = H.flow_zero_crossing
        h_g = H.jump_zero_crossing
        if h_f is None:
            def h_f(x, u):
                return 1.0 if H.flow_set(x, u, 0.0) else -1.0
        if h_g is None:
            def h_g(x, u):
                return 1.0 if H.flow_set(x, u, 0.0) and not H.in_D(x, u, 0.0) else -1.0
        return cls(h_f, h_g, tol_t, max_iter)

    def h(self, rule: PriorityRule) -> Callable[[NDArray, NDArray], float]:
        return self.h_f if PriorityRule(rule) is PriorityRule.FLOW else self.h_g


def _const(u_signal) -> Optional[NDArray]:
    value = getattr(u_signal, "value", None)
    return None if value is None else np.asarray(value, dtype=float)


def integrator_step(
    scheme: IntegratorScheme,
    x: NDArray,
    u_signal,
    f: Callable[[NDArray, NDArray], NDArray],
    t: float,
    step: Optional[float] = None,
) -> NDArray:
    """One step of ``F_s`` from ``(t, x)``; ``step`` overrides the scheme's ``s``."""
    s = scheme.step if step is None else step
    x = np.asarray(x, dtype=float)
    if s == 0:
        return x.copy()
    const = _const(u_signal)
    u = (lambda tt: const) if const is not None else u_signal
    if scheme.method == FORWARD_EULER:
        return x + s * np.asarray(f(x, u(t)), dtype=float)
    if scheme.method == RK4:
        uh = u(t + 0.5 * s)
        k1 = np.asarray(f(x, u(t)), dtype=float)
        k2 = np.asarray(f(x + 0.5 * s * k1, uh), dtype=float)
        k3 = np.asarray(f(x + 0.5 * s * k2, uh), dtype=float)
        k4 = np.asarray(f(x + s * k3, u(t + s)), dtype=float)
        return x + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # backward Euler: y = x + s f(y, u(t+s))
    u1 = u(t + s)
    y = x + s * np.asarray(f(x, u1), dtype=float)
    alpha = scheme.damping
    res = np.inf
    for it in range(1, scheme.max_iter + 1):
        target = x + s * np.asarray(f(y, u1), dtype=float)
        new_res = float(np.linalg.norm(target - y))
        if new_res <= scheme.residual_tol:
            return target
        if new_res > res:
            alpha *= 0.5
        res = new_res
        y = (1.0 - alpha) * y + alpha * target
    raise ImplicitSolverError(res, scheme.max_iter)


def _stepper(scheme: IntegratorScheme, f, u_signal):
    """``(x, t, s) -> x_plus``, specialised for constant inputs.

    The fast paths assume ``f`` returns a float array; they matter because
    integration dominates planner run time.
    """
    const = _const(u_signal)
    if const is None or scheme.method == BACKWARD_EULER:
        return lambda x, t, s: integrator_step(scheme, x, u_signal, f, t, s)
    u = const
    if scheme.method == FORWARD_EULER:
        return lambda x, t, s: x + s * f(x, u)

    def rk4(x, t, s):
        hs = 0.5 * s
        k1 = f(x, u)
        k2 = f(x + hs * k1, u)
        k3 = f(x + hs * k2, u)
        k4 = f(x + s * k3, u)
        return x + (s / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    return rk4


def _localize(h, x_prev, u_signal, f, t, s, scheme, zc):
    """Bisect the sub-step in ``[0, s]`` where ``h`` turns negative.

    Returns the sub-step length on the inside of the crossing and the
    matching state.
    """
    const = _const(u_signal)
    step = _stepper(scheme, f, u_signal)
    lo, hi = 0.0, s
    x_lo = np.asarray(x_prev, dtype=float)
    u0 = const if const is not None else u_signal(t)
    h_lo = h(x_lo, u0)
    for _ in range(zc.max_iter):
        # a narrow bracket is not enough: the kept state must also sit on the
        # boundary to membership tolerance, or a fast crossing misses D
        if hi - lo <= zc.tol_t and h_lo <= 0.1 * MEMBERSHIP_TOL:
            break
        mid = 0.5 * (lo + hi)
        x_mid = step(x_prev, t, mid)
        u_mid = const if const is not None else u_signal(t + mid)
        h_mid = h(x_mid, u_mid)
        if h_mid >= 0:
            lo, x_lo, h_lo = mid, x_mid, h_mid
        else:
            hi = mid
    return lo, x_lo


def detect_crossing(
    zc: ZeroCrossingConfig,
    x_prev: ArrayLike,
    x_next: ArrayLike,
    u_signal,
    t: float,
    rule: PriorityRule,
    f: Callable,
    scheme: IntegratorScheme,
    step: Optional[float] = None,
) -> Optional[float]:
    """Event time within the step ``[t, t + s]``, or ``None`` without a sign change.

    A step ending exactly on ``h = 0`` reports ``t + s``.
    """
    s = scheme.step if step is None else step
    h = zc.h(rule)
    const = _const(u_signal)
    u_next = const if const is not None else u_signal(t + s)
    h_next = h(np.asarray(x_next, dtype=float), u_next)
    if h_next > 0:
        return None
    if h_next == 0:
        return t + s
    lo, _ = _localize(h, x_prev, u_signal, f, t, s, scheme, zc)
    return t + lo


def _grid(duration: float, s: float) -> NDArray:
    n = max(1, math.ceil(duration / s - 1e-9))
    ts = np.arange(n + 1, dtype=float) * s
    ts[-1] = duration
    return ts


def continuous_simulator(
    H: HybridSystem,
    rule: PriorityRule,
    x0: ArrayLike,
    u_signal,
    scheme: Optional[IntegratorScheme] = None,
    zc: Optional[ZeroCrossingConfig] = None,
    duration: Optional[float] = None,
    tol: float = MEMBERSHIP_TOL,
) -> SolutionPair:
    """Maximal sampled flow from ``x0`` under ``u_signal`` on ``[0, t_hat] x {0}``.

    Flow stops at the signal's end, or at the first crossing of ``h_f``
    (``rule="flow"``: about to leave ``C``) or ``h_g`` (``rule="jump"``:
    about to leave ``C \\ D``). With ``rule="jump"`` a start inside ``D``
    yields a single sample.

    Parameters
    ----------
    u_signal : callable ``t -> u``
        Usually a :class:`~hyrrt.library.FlowInputSignal`.
    duration : float, optional
        Defaults to ``u_signal.duration``.

    Raises
    ------
    ValueError
        If ``(x0, u(0))`` is outside the closure of ``C``.
    """
    rule = PriorityRule(rule)
    scheme = scheme or IntegratorScheme()
    zc = zc or ZeroCrossingConfig.for_system(H)
    T = float(u_signal.duration if duration is None else duration)
    if T < 0:
        raise ValueError("signal duration must be nonnegative")
    const = _const(u_signal)
    u_at = (lambda tt: const) if const is not None else (lambda tt: np.asarray(u_signal(tt), dtype=float))
    x = np.asarray(x0, dtype=float).copy()
    u0 = u_at(0.0)
    if not H.in_C(x, u0, tol):
        raise ValueError(f"initial point ({x}, {u0}) is outside the flow set")

    ts_out = [0.0]
    xs = [x]
    if T > 0 and not (rule is PriorityRule.JUMP and H.in_D(x, u0, tol)):
        h = zc.h(rule)
        f = H.flow_map
        grid = _grid(T, scheme.step).tolist()
        step = _stepper(scheme, f, u_signal)
        for k in range(1, len(grid)):
            t, s = grid[k - 1], grid[k] - grid[k - 1]
            x_next = step(x, t, s)
            h_next = h(x_next, u_at(grid[k]))
            if h_next > 0:
                ts_out.append(grid[k])
                xs.append(x_next)
                x = x_next
                continue
            if h_next == 0:
                ts_out.append(grid[k])
                xs.append(x_next)
                break
            lo, x_lo = _localize(h, x, u_signal, f, t, s, scheme, zc)
            if t + lo > t:
                ts_out.append(t + lo)
                xs.append(x_lo)
            break
    ts_arr = np.array(ts_out)
    X = np.array(xs)
    U = np.array([u_at(tt) for tt in ts_out]) if const is None else np.tile(const, (len(ts_out), 1))
    return SolutionPair(HybridArc([(ts_arr, X)]), HybridArc([(ts_arr, U)]))


def discrete_simulator(
    H: HybridSystem,
    x0: ArrayLike,
    u_D: ArrayLike,
    tol: float = MEMBERSHIP_TOL,
) -> SolutionPair:
    """Single jump from ``x0`` with input ``u_D`` on the domain ``{0} x {0, 1}``.

    The input after the jump repeats ``u_D``.
    """
    x0 = np.asarray(x0, dtype=float)
    u = np.atleast_1d(np.asarray(u_D, dtype=float))
    if not H.in_D(x0, u, tol):
        raise ValueError(f"({x0}, {u}) is not in the jump set")
    x1 = H.g(x0, u)
    phi = HybridArc([([0.0], x0[None, :]), ([0.0], x1[None, :])])
    ua = HybridArc([([0.0], u[None, :]), ([0.0], u[None, :])])
    return SolutionPair(phi, ua)

