"""Hybrid time domains, hybrid arcs and solution pairs.

Arcs are stored as sampled trajectories: one ordered sample list per jump
index ``j``. Between samples of the same segment an arc is read by linear
interpolation in ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

# Absolute tolerance used when matching hybrid times against stored samples.
TIME_ATOL = 1e-12


@dataclass(frozen=True, order=True)
class HybridTime:
    """A hybrid time ``(t, j)``: ordinary time plus jump count."""

    t: float
    j: int

    def __post_init__(self):
        if not np.isfinite(self.t) or self.t < 0:
            raise ValueError(f"hybrid time needs t >= 0, got {self.t}")
        if int(self.j) != self.j or self.j < 0:
            raise ValueError(f"hybrid time needs integer j >= 0, got {self.j}")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "j", int(self.j))

    def __add__(self, other: HybridTime) -> HybridTime:
        return HybridTime(self.t + other.t, self.j + other.j)

    @property
    def total(self) -> float:
        """``t + j``, the quantity bounded by ``tau`` in closeness checks."""
        return self.t + self.j


@dataclass(frozen=True)
class HybridTimeDomain:
    """Compact hybrid time domain ``U_j [t_j, t_{j+1}] x {j}``.

    ``intervals`` holds ``(j, t_start, t_end)`` triples for ``j = 0..J``.
    """

    intervals: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("a hybrid time domain needs at least one interval")
        prev_end = 0.0
        for k, (j, t0, t1) in enumerate(self.intervals):
            if j != k:
                raise ValueError(f"interval {k} carries jump index {j}")
            if t1 < t0:
                raise ValueError(f"interval {j} is reversed: [{t0}, {t1}]")
            if abs(t0 - prev_end) > TIME_ATOL * max(1.0, abs(prev_end)):
                raise ValueError(
                    f"interval {j} starts at {t0}, previous ended at {prev_end}"
                )
            prev_end = t1

    @property
    def max(self) -> HybridTime:
        j, _, t1 = self.intervals[-1]
        return HybridTime(t1, j)

    @property
    def n_jumps(self) -> int:
        return len(self.intervals) - 1

    def __contains__(self, tj) -> bool:
        t, j = (tj.t, tj.j) if isinstance(tj, HybridTime) else tj
        if j < 0 or j >= len(self.intervals) or int(j) != j:
            return False
        _, t0, t1 = self.intervals[int(j)]
        return t0 - TIME_ATOL <= t <= t1 + TIME_ATOL

    def translate(self, offset: HybridTime) -> list[tuple[int, float, float]]:
        """Intervals shifted by ``offset`` (Minkowski sum with one point)."""
        return [(j + offset.j, t0 + offset.t, t1 + offset.t) for j, t0, t1 in self.intervals]


class HybridArc:
    """A function on a compact hybrid time domain, stored as samples.

    Parameters
    ----------
    segments : sequence of (times, values)
        Entry ``j`` holds the strictly increasing sample times of interval
        ``j`` (shape ``(k,)``) and the matching values (shape ``(k, n)``).
        A zero-length interval holds exactly one sample.
    """

    __slots__ = ("_times", "_values", "dim")

    def __init__(self, segments: Sequence[tuple[ArrayLike, ArrayLike]]):
        if len(segments) == 0:
            raise ValueError("an arc needs at least one segment")
        times, values = [], []
        dim = None
        for j, (t, x) in enumerate(segments):
            t = np.array(t, dtype=float).reshape(-1)
            x = np.array(x, dtype=float)
            if x.ndim == 1:
                x = x.reshape(len(t), -1) if len(t) else x.reshape(0, -1)
            if len(t) == 0:
                raise ValueError(f"segment {j} has no samples")
            if x.shape[0] != len(t):
                raise ValueError(f"segment {j}: {len(t)} times but {x.shape[0]} values")
            if dim is None:
                dim = x.shape[1]
            elif x.shape[1] != dim:
                raise ValueError(f"segment {j} has dimension {x.shape[1]}, expected {dim}")
            if np.any(np.diff(t) <= 0):
                raise ValueError(f"segment {j} sample times are not strictly increasing")
            t.setflags(write=False)
            x.setflags(write=False)
            times.append(t)
            values.append(x)
        self._times = tuple(times)
        self._values = tuple(values)
        self.dim = int(dim)
        # validates the interval chain
        self.domain

    # -- construction helpers -------------------------------------------------

    @classmethod
    def point(cls, x: ArrayLike, t: float = 0.0) -> HybridArc:
        return cls([([t], np.atleast_2d(np.asarray(x, dtype=float)))])

    # -- accessors --------------------------------------------------------------

    @property
    def segments(self) -> tuple[tuple[NDArray, NDArray], ...]:
        return tuple(zip(self._times, self._values))

    @property
    def domain(self) -> HybridTimeDomain:
        return HybridTimeDomain(
            tuple((j, float(t[0]), float(t[-1])) for j, t in enumerate(self._times))
        )

    @property
    def end(self) -> HybridTime:
        return HybridTime(float(self._times[-1][-1]), len(self._times) - 1)

    @property
    def n_jumps(self) -> int:
        return len(self._times) - 1

    @property
    def initial(self) -> NDArray:
        return self._values[0][0]

    @property
    def final(self) -> NDArray:
        return self._values[-1][-1]

    def __len__(self) -> int:
        return sum(len(t) for t in self._times)

    def samples(self) -> Iterator[tuple[float, int, NDArray]]:
        """Yield ``(t, j, value)`` in hybrid-time order."""
        for j, (t, x) in enumerate(zip(self._times, self._values)):
            for k in range(len(t)):
                yield float(t[k]), j, x[k]

    def __call__(self, t: float, j: int) -> NDArray:
        if (t, j) not in self.domain:
            raise ValueError(f"({t}, {j}) is outside the arc's domain")
        ts, xs = self._times[j], self._values[j]
        k = int(np.searchsorted(ts, t))
        if k < len(ts) and abs(ts[k] - t) <= TIME_ATOL:
            return xs[k].copy()
        if k > 0 and abs(ts[k - 1] - t) <= TIME_ATOL:
            return xs[k - 1].copy()
        if k == 0:
            return xs[0].copy()
        if k == len(ts):
            return xs[-1].copy()
        w = (t - ts[k - 1]) / (ts[k] - ts[k - 1])
        return (1.0 - w) * xs[k - 1] + w * xs[k]

    def allclose(self, other: HybridArc, atol: float = 1e-12) -> bool:
        """Identical domains and samples up to ``atol``."""
        if self.dim != other.dim or self.n_jumps != other.n_jumps:
            return False
        for (t1, x1), (t2, x2) in zip(self.segments, other.segments):
            if t1.shape != t2.shape:
                return False
            if not (np.allclose(t1, t2, rtol=0, atol=atol) and np.allclose(x1, x2, rtol=0, atol=atol)):
                return False
        return True

    def __repr__(self) -> str:
        end = self.end
        return f"HybridArc(dim={self.dim}, samples={len(self)}, end=({end.t:.6g}, {end.j}))"


@dataclass(frozen=True, eq=False)
class SolutionPair:
    """State arc ``phi`` and input arc ``u`` on one shared sample grid."""

    phi: HybridArc
    u: HybridArc

    def __post_init__(self):
        if self.phi.n_jumps != self.u.n_jumps:
            raise ValueError("state and input arcs have different jump counts")
        for j, ((tp, _), (tu, _)) in enumerate(zip(self.phi.segments, self.u.segments)):
            if tp.shape != tu.shape or np.any(tp != tu):
                raise ValueError(f"state and input sample grids differ on segment {j}")

    @property
    def n(self) -> int:
        return self.phi.dim

    @property
    def m(self) -> int:
        return self.u.dim

    @property
    def end(self) -> HybridTime:
        return self.phi.end

    @property
    def is_purely_continuous(self) -> bool:
        return self.phi.n_jumps == 0

    def samples(self) -> Iterator[tuple[float, int, NDArray, NDArray]]:
        for (t, j, x), (_, _, u) in zip(self.phi.samples(), self.u.samples()):
            yield t, j, x, u

    def allclose(self, other: SolutionPair, atol: float = 1e-12) -> bool:
        return self.phi.allclose(other.phi, atol) and self.u.allclose(other.u, atol)


# -- concatenation and truncation -----------------------------------------------


def concat(phi1, phi2):
    """Concatenate ``phi2`` onto the end of the compact arc ``phi1``.

    The result lives on ``dom phi1 U (dom phi2 + (T, J))`` where ``(T, J)``
    is the last hybrid time of ``phi1``. At ``(T, J)`` itself the value is
    taken from ``phi2(0, 0)``. Works on :class:`HybridArc` and, pairwise, on
    :class:`SolutionPair`.
    """
    if isinstance(phi1, SolutionPair) and isinstance(phi2, SolutionPair):
        return SolutionPair(concat(phi1.phi, phi2.phi), concat(phi1.u, phi2.u))
    if not isinstance(phi1, HybridArc) or not isinstance(phi2, HybridArc):
        raise TypeError("concat expects two HybridArcs or two SolutionPairs")
    if phi1.dim != phi2.dim:
        raise ValueError(f"cannot concatenate arcs of dimension {phi1.dim} and {phi2.dim}")
    T = phi1.end.t
    segs = list(phi1.segments[:-1])
    t_last, x_last = phi1.segments[-1]
    t2, x2 = phi2.segments[0]
    segs.append(
        (np.concatenate([t_last[:-1], t2 + T]), np.concatenate([x_last[:-1], x2]))
    )
    segs.extend((t + T, x) for t, x in phi2.segments[1:])
    return HybridArc(segs)


def concat_all(parts: Sequence):
    """Left fold of :func:`concat` over ``parts``."""
    if not parts:
        raise ValueError("nothing to concatenate")
    out = parts[0]
    for p in parts[1:]:
        out = concat(out, p)
    return out


def _as_time(tj) -> HybridTime:
    return tj if isinstance(tj, HybridTime) else HybridTime(*tj)


def truncate(phi, start, stop):
    """Restrict ``phi`` to hybrid times between ``start`` and ``stop``.

    The kept piece is translated so that ``start`` maps to ``(0, 0)``.
    Boundary times that fall between stored samples get a linearly
    interpolated sample.
    """
    if isinstance(phi, SolutionPair):
        return SolutionPair(truncate(phi.phi, start, stop), truncate(phi.u, start, stop))
    start, stop = _as_time(start), _as_time(stop)
    dom = phi.domain
    for tj in (start, stop):
        if tj not in dom:
            raise ValueError(f"({tj.t}, {tj.j}) is not in the arc's domain")
    if start.t > stop.t or start.j > stop.j:
        raise ValueError("truncation bounds are in reversed order")

    segs = []
    for j in range(start.j, stop.j + 1):
        ts, xs = phi.segments[j]
        if j == start.j:
            keep = ts > start.t + TIME_ATOL
            ts = np.concatenate([[start.t], ts[keep]])
            xs = np.vstack([phi(start.t, j), xs[keep]])
        if j == stop.j:
            keep = ts < stop.t - TIME_ATOL
            ts = np.concatenate([ts[keep], [stop.t]])
            xs = np.vstack([xs[keep], phi(stop.t, j)])
        segs.append((ts - start.t, xs))
    return HybridArc(segs)


# -- closeness ------------------------------------------------------------------


def _witness_distance(tp: NDArray, P: NDArray, tb: NDArray, xb: NDArray, eps: float) -> NDArray:
    """Smallest ``|P_k - b(s)|`` over ``s`` in segment ``tb`` with ``|tp_k - s| < eps``.

    ``b`` is the piecewise-linear interpolant through ``(tb, xb)``. Returns
    ``inf`` where no admissible ``s`` exists.
    """
    if len(tb) == 1:
        d = np.linalg.norm(P - xb[0], axis=1)
        return np.where(np.abs(tp - tb[0]) < eps, d, np.inf)
    a, b = tb[:-1], tb[1:]
    seg = xb[1:] - xb[:-1]
    seg_sq = np.einsum("ij,ij->i", seg, seg)
    out = np.full(len(tp), np.inf)
    chunk = max(1, 200_000 // max(1, len(a)))
    for s0 in range(0, len(tp), chunk):
        t_k = tp[s0 : s0 + chunk, None]
        P_k = P[s0 : s0 + chunk, None, :]
        feasible = (a[None, :] < t_k + eps) & (b[None, :] > t_k - eps)
        lo = np.maximum(a[None, :], t_k - eps)
        hi = np.minimum(b[None, :], t_k + eps)
        width = b - a
        lam_lo = (lo - a) / width
        lam_hi = (hi - a) / width
        rel = P_k - xb[None, :-1, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(seg_sq > 0, np.einsum("kij,ij->ki", rel, seg) / seg_sq, 0.0)
        lam = np.clip(lam, lam_lo, lam_hi)
        diff = rel - lam[..., None] * seg[None, :, :]
        d = np.sqrt(np.einsum("kij,kij->ki", diff, diff))
        d = np.where(feasible, d, np.inf)
        out[s0 : s0 + chunk] = d.min(axis=1)
    return out


def _one_sided_close(a: HybridArc, b: HybridArc, tau: float, eps: float) -> bool:
    b_segments = b.segments
    for j, (t, x) in enumerate(a.segments):
        mask = t + j <= tau
        if not mask.any():
            continue
        if j >= len(b_segments):
            return False
        tb, xb = b_segments[j]
        d = _witness_distance(t[mask], x[mask], tb, xb, eps)
        if not np.all(d < eps):
            return False
    return True


def are_close(phi1: HybridArc, phi2: HybridArc, tau: float, eps: float) -> bool:
    """Graphical ``(tau, eps)``-closeness of two hybrid arcs.

    Every stored sample ``(t, j)`` of either arc with ``t + j <= tau`` needs
    a time ``s`` on the other arc's ``j``-th interval with ``|t - s| < eps``
    and value distance below ``eps``. The witness side is read through its
    piecewise-linear interpolant.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if phi1.dim != phi2.dim:
        raise ValueError("arcs have different dimensions")
    return _one_sided_close(phi1, phi2, tau, eps) and _one_sided_close(phi2, phi1, tau, eps)
