"""Input libraries: constant flow signals and jump input values."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .system import Box

FINITE = "finite"
CONTINUOUS = "continuous"


@dataclass(frozen=True, eq=False)
class FlowInputSignal:
    """Constant input ``[0, duration] -> {value}``."""

    duration: float
    value: NDArray

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"signal duration must be positive, got {self.duration}")
        v = np.atleast_1d(np.asarray(self.value, dtype=float)).copy()
        v.setflags(write=False)
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "value", v)

    def __call__(self, t: float) -> NDArray:
        return self.value

    def __repr__(self) -> str:
        return f"FlowInputSignal([0, {self.duration:g}] -> {self.value.tolist()})"


@dataclass(frozen=True, eq=False)
class InputLibrary:
    """Flow signals and jump inputs the planner may apply.

    Each side is either a finite list or a continuous family. A continuous
    flow side draws durations from ``[0, T_m]`` and levels from the
    ``flow_box``; a continuous jump side draws from ``jump_box``.

    Parameters
    ----------
    flow_signals : sequence of FlowInputSignal, optional
    jump_values : array of shape (k, m), optional
    T_m : float, optional
        Maximum flow duration in continuous mode.
    flow_box, jump_box : Box, optional
    """

    flow_signals: Optional[tuple] = None
    jump_values: Optional[NDArray] = None
    T_m: Optional[float] = None
    flow_box: Optional[Box] = None
    jump_box: Optional[Box] = None

    def __post_init__(self):
        if self.flow_signals is not None:
            object.__setattr__(self, "flow_signals", tuple(self.flow_signals))
            if self.flow_box is not None:
                raise ValueError("give either finite flow signals or a continuous flow family")
        elif self.flow_box is not None and not (self.T_m is not None and self.T_m > 0):
            raise ValueError("continuous flow mode needs T_m > 0")
        if self.jump_values is not None:
            if self.jump_box is not None:
                raise ValueError("give either finite jump values or a jump box")
            jv = np.asarray(self.jump_values, dtype=float)
            jv = jv.reshape(len(jv), -1) if jv.ndim <= 1 else jv
            jv.setflags(write=False)
            object.__setattr__(self, "jump_values", jv)

    @property
    def flow_mode(self) -> Optional[str]:
        if self.flow_signals is not None:
            return FINITE
        if self.flow_box is not None:
            return CONTINUOUS
        return None

    @property
    def jump_mode(self) -> Optional[str]:
        if self.jump_values is not None:
            return FINITE
        if self.jump_box is not None:
            return CONTINUOUS
        return None

    @property
    def has_flow(self) -> bool:
        return bool(self.flow_signals) or self.flow_box is not None

    @property
    def has_jump(self) -> bool:
        return (self.jump_values is not None and len(self.jump_values) > 0) or self.jump_box is not None

    def with_jumps(self, values: ArrayLike) -> InputLibrary:
        return InputLibrary(self.flow_signals, values, self.T_m, self.flow_box, None)


def build_flow_library(levels: Sequence[ArrayLike], t_star: float) -> InputLibrary:
    """One constant signal of duration ``t_star`` per level."""
    if len(levels) == 0:
        raise ValueError("flow library needs at least one level")
    if not t_star > 0:
        raise ValueError(f"t_star must be positive, got {t_star}")
    return InputLibrary(flow_signals=tuple(FlowInputSignal(t_star, lv) for lv in levels))


def grid_levels(axes: Sequence[Sequence[float]]) -> list[NDArray]:
    """Cartesian product of per-axis level lists, first axis slowest."""
    return [np.array(p, dtype=float) for p in itertools.product(*axes)]


def sample_flow_input(lib: InputLibrary, rng: np.random.Generator) -> FlowInputSignal:
    if lib.flow_signals is not None:
        if not lib.flow_signals:
            raise ValueError("flow side of the library is empty")
        return lib.flow_signals[int(rng.integers(len(lib.flow_signals)))]
    if lib.flow_box is None:
        raise ValueError("flow side of the library is empty")
    # uniform on [0, T_m] but a zero duration is useless, so redraw
    while True:
        dur = rng.uniform(0.0, lib.T_m)
        if dur > 0:
            break
    return FlowInputSignal(dur, lib.flow_box.sample(rng))


def sample_jump_input(lib: InputLibrary, rng: np.random.Generator) -> NDArray:
    if lib.jump_values is not None:
        if len(lib.jump_values) == 0:
            raise ValueError("jump side of the library is empty")
        return lib.jump_values[int(rng.integers(len(lib.jump_values)))].copy()
    if lib.jump_box is None:
        raise ValueError("jump side of the library is empty")
    return lib.jump_box.sample(rng)


def flow_candidates(lib: InputLibrary, rng: np.random.Generator, draws: int = 32) -> list[FlowInputSignal]:
    """Every finite flow signal, or ``draws`` samples of a continuous family."""
    if lib.flow_signals is not None:
        return list(lib.flow_signals)
    return [sample_flow_input(lib, rng) for _ in range(draws)]


def jump_candidates(lib: InputLibrary, rng: np.random.Generator, draws: int = 32) -> list[NDArray]:
    if lib.jump_values is not None:
        return [v.copy() for v in lib.jump_values]
    return [sample_jump_input(lib, rng) for _ in range(draws)]
