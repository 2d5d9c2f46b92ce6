"""RRT-style search for motion plans of hybrid systems.

Each iteration draws a random state from the flow or the jump region,
finds the nearest tree vertex, and extends it by one simulated flow or one
jump. After every successful extension the tree is checked for a path
from ``X0`` to within ``eps`` of ``Xf``.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .arcs import SolutionPair, concat_all
from .library import InputLibrary, flow_candidates, jump_candidates, sample_flow_input, sample_jump_input
from .simulate import (
    IntegratorScheme,
    PriorityRule,
    ZeroCrossingConfig,
    continuous_simulator,
    discrete_simulator,
)
from .system import MEMBERSHIP_TOL, HybridSystem, MotionPlanningProblem, SamplingError, StateSet

RANDOM = "random"
GREEDY = "greedy"


class ExtendOutcome(str, enum.Enum):
    REACHED = "reached"
    ADVANCED = "advanced"
    TRAPPED = "trapped"


class SearchTree:
    """Vertices carry states; each non-root vertex has one incoming edge with its solution pair."""

    def __init__(self, n: int):
        self.n = n
        self._X = np.empty((64, n))
        self._size = 0
        self.parent: list[Optional[int]] = []
        self.edges: dict[tuple[int, int], SolutionPair] = {}
        # per-vertex membership caches: name -> (owner, flags)
        self._flags: dict[str, tuple] = {}

    def __len__(self) -> int:
        return self._size

    @property
    def states(self) -> NDArray:
        return self._X[: self._size]

    def state(self, v: int) -> NDArray:
        return self._X[v].copy()

    @property
    def roots(self) -> list[int]:
        return [v for v, p in enumerate(self.parent) if p is None]

    def add_vertex(self, x: ArrayLike, parent: Optional[int] = None, psi: Optional[SolutionPair] = None) -> int:
        x = np.asarray(x, dtype=float)
        if (parent is None) != (psi is None):
            raise ValueError("an edge needs both a parent and a solution pair")
        if parent is not None and not 0 <= parent < self._size:
            raise ValueError(f"unknown parent vertex {parent}")
        if self._size == len(self._X):
            self._X = np.vstack([self._X, np.empty_like(self._X)])
        v = self._size
        self._X[v] = x
        self._size += 1
        self.parent.append(parent)
        if parent is not None:
            self.edges[(parent, v)] = psi
        return v

    def edge_into(self, v: int) -> SolutionPair:
        return self.edges[(self.parent[v], v)]

    def path_to(self, v: int) -> list[int]:
        """Vertices from the root down to ``v``."""
        path = [v]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path[::-1]

    def flags(self, name: str, pred, owner=None) -> list[bool]:
        """Cached ``pred(state)`` for every vertex, computed on first use.

        The cache is rebuilt when ``owner`` (the set behind ``pred``) changes.
        """
        held, cache = self._flags.get(name, (None, None))
        if cache is None or held is not owner:
            cache = []
            self._flags[name] = (owner, cache)
        for v in range(len(cache), self._size):
            cache.append(bool(pred(self._X[v])))
        return cache

    def check_invariants(self, atol: float = 1e-9) -> None:
        """Raise ``AssertionError`` if parent links or edge endpoints are inconsistent."""
        assert len(self.parent) == self._size
        for v, p in enumerate(self.parent):
            if p is None:
                continue
            assert p < v, "parents precede children, so the tree is acyclic"
            psi = self.edges[(p, v)]
            assert np.allclose(psi.phi.initial, self._X[p], atol=atol)
            assert np.allclose(psi.phi.final, self._X[v], atol=atol)
        assert len(self.edges) == self._size - len(self.roots)


@dataclass
class PlannerConfig:
    """Planner settings.

    ``p_n`` may be 1 for systems without jumps. ``max_iter=None`` runs until
    a plan is found. ``X_c``/``X_d`` default to the system's state bounds.
    With ``greedy_skip_reached`` greedy mode ignores candidates that land on
    a state the tree already holds.
    """

    p_n: float = 0.5
    p_fg: float = 0.5
    max_iter: Optional[int] = 2000
    eps: float = 0.2
    eps_reach: float = 1e-6
    X_c: Optional[StateSet] = None
    X_d: Optional[StateSet] = None
    seed: int = 0
    n_init_samples: int = 1
    mode: str = RANDOM
    scheme: IntegratorScheme = field(default_factory=IntegratorScheme)
    greedy_draws: int = 32
    greedy_skip_reached: bool = True

    def __post_init__(self):
        if not 0 < self.p_n <= 1:
            raise ValueError("p_n must lie in (0, 1]")
        if not 0 < self.p_fg < 1:
            raise ValueError("p_fg must lie in (0, 1)")
        if not (self.eps > 0 and self.eps_reach > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter is not None and self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.n_init_samples < 1:
            raise ValueError("need at least one initial sample")
        if self.mode not in (RANDOM, GREEDY):
            raise ValueError(f"mode must be {RANDOM!r} or {GREEDY!r}")


@dataclass
class PlannerStats:
    iterations: int = 0
    vertices: int = 0
    wall_time: float = 0.0
    outcomes: dict = field(default_factory=lambda: {o.value: 0 for o in ExtendOutcome})
    skipped: int = 0


@dataclass
class PlanResult:
    plan: Optional[SolutionPair]
    path: Optional[list]
    tree: SearchTree
    stats: PlannerStats

    @property
    def success(self) -> bool:
        return self.plan is not None


# -- building blocks ----------------------------------------------------------------


def tree_init(X0: StateSet, n_init_samples: int, rng: np.random.Generator) -> SearchTree:
    if X0.is_empty:
        raise ValueError("X0 is empty")
    tree = SearchTree(X0.dim)
    for _ in range(n_init_samples):
        tree.add_vertex(X0.sample(rng))
    return tree


def random_state(S: StateSet, rng: np.random.Generator, bounds=None) -> NDArray:
    return S.sample(rng, bounds)


def _constraint(H: HybridSystem, S: Optional[StateSet]):
    if S is None:
        return lambda x: H.state_bounds.contains(x, MEMBERSHIP_TOL)
    return S.contains


def nearest_neighbor(
    x_rand: ArrayLike,
    tree: SearchTree,
    flag: PriorityRule,
    config: PlannerConfig,
    H: HybridSystem,
) -> Optional[int]:
    """Closest vertex inside ``X_c`` (flow) or ``X_d`` (jump); lowest id on ties.

    Returns ``None`` when no vertex satisfies the constraint.
    """
    flow = PriorityRule(flag) is PriorityRule.FLOW
    name = "X_c" if flow else "X_d"
    S = config.X_c if flow else config.X_d
    ok = np.fromiter(tree.flags(name, _constraint(H, S), owner=S if S is not None else H), bool, len(tree))
    if not ok.any():
        return None
    d = np.linalg.norm(tree.states - np.asarray(x_rand, dtype=float), axis=1)
    d[~ok] = np.inf
    return int(np.argmin(d))


@dataclass
class NewState:
    ok: bool
    x_new: Optional[NDArray] = None
    psi: Optional[SolutionPair] = None
    reason: str = ""

    def __iter__(self):
        return iter((self.ok, self.x_new, self.psi))


def _is_safe(psi: SolutionPair, Xu) -> bool:
    if Xu is None:
        return True
    for (_, X), (_, U) in zip(psi.phi.segments, psi.u.segments):
        for x, u in zip(X, U):
            if Xu(x, u):
                return False
    return True


def _flow_candidate(x, sig, H, Xu, scheme, zc, cache=None) -> NewState:
    if not H.in_C(x, sig(0.0)):
        return NewState(False, reason="input not admissible in C")
    # simulation is a pure function of (state, signal), so repeats are looked up
    key = (x.tobytes(), id(sig)) if cache is not None else None
    if key is not None and key in cache:
        return cache[key]
    res = _simulate_flow(x, sig, H, Xu, scheme, zc)
    if key is not None:
        cache[key] = res
    return res


def _simulate_flow(x, sig, H, Xu, scheme, zc) -> NewState:
    psi = continuous_simulator(H, PriorityRule.FLOW, x, sig, scheme, zc)
    if psi.end.t == 0:
        return NewState(False, reason="zero-length flow")
    if not _is_safe(psi, Xu):
        return NewState(False, reason="unsafe")
    return NewState(True, psi.phi.final.copy(), psi)


def _jump_candidate(x, u, H, Xu) -> NewState:
    if not H.in_D(x, u):
        return NewState(False, reason="input not admissible in D")
    psi = discrete_simulator(H, x, u)
    if not _is_safe(psi, Xu):
        return NewState(False, reason="unsafe")
    return NewState(True, psi.phi.final.copy(), psi)


def new_state(
    x_rand: ArrayLike,
    v_cur: int,
    tree: SearchTree,
    lib: InputLibrary,
    H: HybridSystem,
    Xu,
    config: PlannerConfig,
    rng: np.random.Generator,
    zc: Optional[ZeroCrossingConfig] = None,
    cache: Optional[dict] = None,
) -> NewState:
    """Extend vertex ``v_cur`` by one flow or one jump.

    The regime follows the vertex: flow in ``C' \\ D'``, jump in
    ``D' \\ C'``, and a ``p_fg`` coin flip in ``C' n D'``. Random mode
    applies one sampled input; greedy mode tries every library element and
    keeps the safe result closest to ``x_rand``.
    """
    x = tree.state(v_cur)
    in_c = tree.flags("C'", H.flow_prime().contains, owner=H)[v_cur]
    in_d = tree.flags("D'", H.jump_prime().contains, owner=H)[v_cur] if H.has_jumps else False
    if in_c and in_d:
        flow = rng.uniform() <= config.p_fg
    elif in_c or in_d:
        flow = in_c
    else:
        return NewState(False, reason=f"vertex {v_cur} lies in neither C' nor D'")
    zc = zc or ZeroCrossingConfig.for_system(H)
    scheme = config.scheme
    if config.mode == RANDOM:
        if flow:
            return _flow_candidate(x, sample_flow_input(lib, rng), H, Xu, scheme, zc, cache)
        return _jump_candidate(x, sample_jump_input(lib, rng), H, Xu)
    if flow:
        results = [
            _flow_candidate(x, s, H, Xu, scheme, zc, cache) for s in flow_candidates(lib, rng, config.greedy_draws)
        ]
    else:
        results = [_jump_candidate(x, u, H, Xu) for u in jump_candidates(lib, rng, config.greedy_draws)]
    x_rand = np.asarray(x_rand, dtype=float)
    best, best_d = None, np.inf
    for r in results:
        if r.ok and config.greedy_skip_reached and _already_reached(tree, r.x_new, config.eps_reach):
            continue
        if r.ok:
            d = float(np.linalg.norm(r.x_new - x_rand))
            if d < best_d:
                best, best_d = r, d
    return best or NewState(False, reason="no safe candidate")


def _already_reached(tree: SearchTree, x: NDArray, tol: float) -> bool:
    return bool(np.min(np.linalg.norm(tree.states - x, axis=1)) <= tol)


def extend(
    tree: SearchTree,
    x: ArrayLike,
    lib: InputLibrary,
    H: HybridSystem,
    Xu,
    flag: PriorityRule,
    config: PlannerConfig,
    rng: np.random.Generator,
    zc: Optional[ZeroCrossingConfig] = None,
    cache: Optional[dict] = None,
) -> tuple[ExtendOutcome, Optional[int]]:
    """Nearest vertex, then :func:`new_state`; returns the outcome and the new vertex id."""
    v_cur = nearest_neighbor(x, tree, flag, config, H)
    if v_cur is None:
        return ExtendOutcome.TRAPPED, None
    res = new_state(x, v_cur, tree, lib, H, Xu, config, rng, zc, cache)
    if not res.ok:
        return ExtendOutcome.TRAPPED, None
    v_new = tree.add_vertex(res.x_new, v_cur, res.psi)
    if np.linalg.norm(res.x_new - np.asarray(x, dtype=float)) <= config.eps_reach:
        return ExtendOutcome.REACHED, v_new
    return ExtendOutcome.ADVANCED, v_new


def check_solution(
    tree: SearchTree,
    X0: StateSet,
    Xf: StateSet,
    eps: float,
    H: HybridSystem,
    vertex: Optional[int] = None,
) -> Optional[list[int]]:
    """Root-to-vertex path ending within ``eps`` of ``Xf``, or ``None``.

    With ``vertex`` given only that vertex's path is examined; otherwise
    every vertex is tried in id order. Consecutive purely continuous edges
    must join at a point of ``C``.
    """
    candidates = range(len(tree)) if vertex is None else [vertex]
    for v in candidates:
        if Xf.distance(tree.states[v]) > eps:
            continue
        path = tree.path_to(v)
        if not X0.contains(tree.states[path[0]]):
            continue
        if _joins_ok(tree, path, H):
            return path
    return None


def _joins_ok(tree: SearchTree, path: list[int], H: HybridSystem) -> bool:
    edges = [tree.edges[(a, b)] for a, b in zip(path, path[1:])]
    for e1, e2 in zip(edges, edges[1:]):
        if e1.is_purely_continuous and e2.is_purely_continuous:
            if not H.in_C(e2.phi.initial, e2.u.initial):
                return False
    return True


def path_to_motion_plan(tree: SearchTree, path: list[int]) -> SolutionPair:
    if len(path) < 2:
        raise ValueError("a motion plan needs at least one edge")
    try:
        parts = [tree.edges[(a, b)] for a, b in zip(path, path[1:])]
    except KeyError as e:
        raise ValueError(f"path uses a missing edge {e.args[0]}") from None
    return concat_all(parts)


# -- main loop --------------------------------------------------------------------


def hyrrt(problem: MotionPlanningProblem, lib: InputLibrary, config: PlannerConfig) -> PlanResult:
    """Search for a motion plan; gives up after ``config.max_iter`` iterations."""
    start = time.perf_counter()
    H = problem.system
    rng = np.random.default_rng(config.seed)
    tree = tree_init(problem.X0, config.n_init_samples, rng)
    zc = ZeroCrossingConfig.for_system(H)
    C_prime, D_prime = H.flow_prime(), H.jump_prime()
    stats = PlannerStats()
    # continuous-family signals are fresh objects each draw, so only finite ones repeat
    cache = {} if lib.flow_mode == "finite" else None
    plan = path = None
    k = 0
    while config.max_iter is None or k < config.max_iter:
        k += 1
        if rng.uniform() <= config.p_n:
            flag, region = PriorityRule.FLOW, C_prime
        else:
            flag, region = PriorityRule.JUMP, D_prime
        if region.is_empty:
            stats.skipped += 1
            continue
        try:
            x_rand = random_state(region, rng, H.state_bounds)
        except SamplingError:
            stats.skipped += 1
            continue
        outcome, v_new = extend(tree, x_rand, lib, H, problem.Xu, flag, config, rng, zc, cache)
        stats.outcomes[outcome.value] += 1
        if outcome is not ExtendOutcome.TRAPPED:
            path = check_solution(tree, problem.X0, problem.Xf, config.eps, H, v_new)
            if path is not None:
                plan = path_to_motion_plan(tree, path) if len(path) > 1 else None
                if plan is not None:
                    break
                path = None
    stats.iterations = k
    stats.vertices = len(tree)
    stats.wall_time = time.perf_counter() - start
    return PlanResult(plan, path, tree, stats)
