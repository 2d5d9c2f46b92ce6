"""Checking sampled solution pairs against a hybrid system and a problem."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .arcs import SolutionPair
from .system import HybridSystem, MotionPlanningProblem

# Stencils shorter than this are dominated by rounding, not dynamics.
MIN_STENCIL = 1e-9


@dataclass
class ValidationReport:
    """Outcome of a validation run.

    ``checks`` maps each check name to its verdict and ``violations`` holds
    human-readable details for every failed sample.
    """

    checks: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def __bool__(self) -> bool:
        return self.passed

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks[name] = self.checks.get(name, True) and bool(ok)
        if not ok and detail:
            self.violations.append(f"{name}: {detail}")

    def merge(self, other: ValidationReport) -> None:
        for name, ok in other.checks.items():
            self.record(name, ok)
        self.violations.extend(other.violations)

    def __str__(self) -> str:
        lines = [f"{'PASS' if self.passed else 'FAIL'}"]
        lines += [f"  {k}: {'ok' if v else 'FAILED'}" for k, v in self.checks.items()]
        lines += [f"  - {v}" for v in self.violations[:20]]
        return "\n".join(lines)


def _stencils(t: NDArray, i: int, h: float) -> list[tuple[int, int]]:
    """Index pairs for the left, right and central differences at sample ``i``.

    Besides the immediate neighbours, the first neighbours at least ``h / 2``
    away on each side are used, so one short event step never leaves a
    sample with only a rounding-dominated stencil.
    """
    left = right = None
    for k in range(i - 1, -1, -1):
        if t[i] - t[k] >= 0.5 * h:
            left = k
            break
    for k in range(i + 1, len(t)):
        if t[k] - t[i] >= 0.5 * h:
            right = k
            break
    if left is None and i > 0:
        left = 0
    if right is None and i < len(t) - 1:
        right = len(t) - 1
    pairs = []
    if i > 0 and left != i - 1:
        pairs.append((i - 1, i))
    if i < len(t) - 1 and right != i + 1:
        pairs.append((i, i + 1))
    if left is not None:
        pairs.append((left, i))
    if right is not None:
        pairs.append((i, right))
    if left is not None and right is not None:
        pairs.append((left, right))
    return [(a, b) for a, b in pairs if t[b] - t[a] >= MIN_STENCIL]


def flow_residuals(H: HybridSystem, t: NDArray, X: NDArray, U: NDArray) -> NDArray:
    """Finite-difference ``|phi' - f(phi, u)|`` at every sample of one segment.

    Each sample takes the smallest residual among its left, right and
    central differences, since an input switch is a legitimate kink in
    ``phi``. One-sided differences may also use the input on their side:
    the value at a single instant is arbitrary, and the last sample before
    a jump carries the jump input. Samples without a usable stencil get
    ``nan``.
    """
    out = np.full(len(t), np.nan)
    if len(t) < 2:
        return out
    h = float(np.median(np.diff(t)))
    for i in range(len(t)):
        fx = np.asarray(H.flow_map(X[i], U[i]), dtype=float)
        best = np.inf
        for a, b in _stencils(t, i, h):
            d = (X[b] - X[a]) / (t[b] - t[a])
            best = min(best, float(np.linalg.norm(d - fx)))
            side = a if b == i else b if a == i else None
            if side is not None and not np.array_equal(U[side], U[i]):
                f_side = np.asarray(H.flow_map(X[i], U[side]), dtype=float)
                best = min(best, float(np.linalg.norm(d - f_side)))
        if np.isfinite(best):
            out[i] = best
    return out


def validate_solution_pair(H: HybridSystem, psi: SolutionPair, tol: float) -> ValidationReport:
    """Check ``psi`` against the data of ``H`` to tolerance ``tol``.

    Checks the initial point against ``closure(C) u D``, interior flow
    samples against ``C``, the flow equation by finite differences, and at
    every jump both ``D`` membership and the jump equation.
    """
    if tol <= 0:
        raise ValueError("validation tolerance must be positive")
    if psi.n != H.n or psi.m != H.m:
        raise ValueError(f"pair has dims ({psi.n}, {psi.m}), system has ({H.n}, {H.m})")
    rep = ValidationReport()
    x0, u0 = psi.phi.initial, psi.u.initial
    rep.record(
        "initial",
        H.in_C(x0, u0, tol) or H.in_D(x0, u0, tol),
        f"({x0}, {u0}) is in neither C nor D",
    )
    J = psi.phi.n_jumps
    for j, ((t, X), (_, U)) in enumerate(zip(psi.phi.segments, psi.u.segments)):
        if t[-1] > t[0]:
            for k in range(1, len(t) - 1):
                ok = H.in_C(X[k], U[k], tol)
                rep.record("flow_set", ok, f"sample (t={t[k]:.6g}, j={j}) outside C")
            res = flow_residuals(H, t, X, U)
            bad = np.nonzero(res > tol)[0]
            rep.record(
                "flow_map",
                len(bad) == 0,
                f"segment {j}: residual {np.nanmax(res) if len(bad) else 0:.3g} > {tol:.3g} "
                f"at t={t[bad[0]] if len(bad) else 0:.6g}",
            )
        if j < J:
            x, u = X[-1], U[-1]
            rep.record("jump_set", H.in_D(x, u, tol), f"jump at (t={t[-1]:.6g}, j={j}) from outside D")
            if H.has_jumps:
                x_plus = psi.phi.segments[j + 1][1][0]
                err = float(np.linalg.norm(x_plus - H.g(x, u)))
                rep.record("jump_map", err <= tol, f"jump {j}: residual {err:.3g} > {tol:.3g}")
            else:
                rep.record("jump_map", False, f"jump {j} recorded for a system without jumps")
    rep.checks.setdefault("flow_set", True)
    rep.checks.setdefault("flow_map", True)
    rep.checks.setdefault("jump_set", True)
    rep.checks.setdefault("jump_map", True)
    return rep


def check_motion_plan(
    problem: MotionPlanningProblem,
    psi: SolutionPair,
    eps: float,
    tol: float,
    system: Optional[HybridSystem] = None,
) -> ValidationReport:
    """Full plan check: start in ``X0``, valid for the system, ends within ``eps`` of ``Xf``, avoids ``Xu``.

    ``system`` overrides ``problem.system``, e.g. to validate against an
    inflated system.
    """
    H = system or problem.system
    rep = ValidationReport()
    x0 = psi.phi.initial
    rep.record("root_in_X0", problem.X0.contains(x0, tol), f"initial state {x0} not in X0")
    rep.merge(validate_solution_pair(H, psi, tol))
    d = problem.Xf.distance(psi.phi.final)
    rep.record("reaches_Xf", d <= eps, f"terminal distance to Xf {d:.4g} > {eps:.4g}")
    unsafe = [(t, j) for t, j, x, u in psi.samples() if problem.Xu(x, u)]
    rep.record(
        "avoids_Xu",
        not unsafe,
        f"{len(unsafe)} samples in Xu, first at {unsafe[0] if unsafe else None}",
    )
    return rep
