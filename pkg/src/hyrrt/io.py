"""Reading and writing plans, plot data and problem files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .arcs import HybridArc, SolutionPair
from .gallery import get_entry
from .library import InputLibrary, build_flow_library
from .planner import PlannerConfig, SearchTree
from .simulate import IntegratorScheme
from .system import Box, MotionPlanningProblem, StateSet, inflate

PathLike = Union[str, Path]


# -- plans ------------------------------------------------------------------------


def plan_to_dict(psi: SolutionPair) -> dict:
    segs = []
    for j, ((t, X), (_, U)) in enumerate(zip(psi.phi.segments, psi.u.segments)):
        samples = [{"t": float(t[k]), "x": X[k].tolist(), "u": U[k].tolist()} for k in range(len(t))]
        segs.append({"j": j, "samples": samples})
    return {"n": psi.n, "m": psi.m, "segments": segs}


def plan_from_dict(d: dict) -> SolutionPair:
    n, m = int(d["n"]), int(d["m"])
    phi_segs, u_segs = [], []
    for j, seg in enumerate(sorted(d["segments"], key=lambda s: s["j"])):
        if seg["j"] != j:
            raise ValueError(f"segments skip jump index {j}")
        t = [s["t"] for s in seg["samples"]]
        phi_segs.append((t, np.array([s["x"] for s in seg["samples"]], dtype=float).reshape(-1, n)))
        u_segs.append((t, np.array([s["u"] for s in seg["samples"]], dtype=float).reshape(-1, m)))
    return SolutionPair(HybridArc(phi_segs), HybridArc(u_segs))


def plan_to_json(psi: SolutionPair) -> str:
    return json.dumps(plan_to_dict(psi), indent=1)


def plan_to_csv(psi: SolutionPair) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "j"] + [f"x_{i}" for i in range(psi.n)] + [f"u_{i}" for i in range(psi.m)])
    for t, j, x, u in psi.samples():
        w.writerow([repr(t), j] + [repr(float(v)) for v in x] + [repr(float(v)) for v in u])
    return buf.getvalue()


def plan_from_csv(text: str) -> SolutionPair:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    n = sum(h.startswith("x_") for h in header)
    m = sum(h.startswith("u_") for h in header)
    segs: dict[int, list] = {}
    for r in body:
        segs.setdefault(int(r[1]), []).append([float(v) for v in [r[0]] + r[2:]])
    phi_segs, u_segs = [], []
    for j in range(len(segs)):
        a = np.array(segs[j]).reshape(-1, 1 + n + m)
        phi_segs.append((a[:, 0], a[:, 1 : 1 + n]))
        u_segs.append((a[:, 0], a[:, 1 + n :]))
    return SolutionPair(HybridArc(phi_segs), HybridArc(u_segs))


def export_plan(psi: SolutionPair, path: PathLike, fmt: Optional[str] = None) -> Path:
    """Write ``psi`` as JSON or CSV; the format defaults to the file suffix."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "json").lower()
    if fmt not in ("json", "csv"):
        raise ValueError(f"unsupported plan format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plan_to_json(psi) if fmt == "json" else plan_to_csv(psi))
    return path


def load_plan(path: PathLike) -> SolutionPair:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return plan_from_csv(text)
    return plan_from_dict(json.loads(text))


# -- plot data --------------------------------------------------------------------


def _header(n: int) -> str:
    return "# t j " + " ".join(f"x_{i}" for i in range(n)) + "\n"


def _block(arc: HybridArc) -> str:
    return "".join(
        f"{t!r} {j} " + " ".join(repr(float(v)) for v in x) + "\n" for t, j, x in arc.samples()
    )


def plot_data(obj: Union[SolutionPair, SearchTree]) -> str:
    """Gnuplot-friendly text: one block per plan, or one block per tree edge.

    Blocks are separated by a blank line. Rows within a block follow hybrid
    time order.
    """
    if isinstance(obj, SolutionPair):
        return _header(obj.n) + _block(obj.phi)
    blocks = [_block(psi.phi) for _, psi in sorted(obj.edges.items())]
    return _header(obj.n) + "\n".join(blocks)


def emit_plot_data(obj: Union[SolutionPair, SearchTree], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plot_data(obj))
    return path


# -- problem files ----------------------------------------------------------------


@dataclass
class LoadedProblem:
    problem: MotionPlanningProblem
    library: InputLibrary
    config: PlannerConfig
    spec: dict


def _state_set(spec, n: int) -> Optional[StateSet]:
    if spec is None:
        return None
    if isinstance(spec, list):
        return StateSet.point(spec) if np.ndim(spec) == 1 else StateSet.from_points(spec)
    if "point" in spec:
        return StateSet.point(spec["point"])
    if "points" in spec:
        return StateSet.from_points(spec["points"])
    if "box" in spec:
        return StateSet.box(spec["box"]["lo"], spec["box"]["hi"])
    raise ValueError(f"cannot read state set {spec!r}")


def _unsafe(spec, default):
    if spec is None or spec == "default":
        return default
    if spec == "none":
        return lambda x, u: False
    states = [Box(b["lo"], b["hi"]) for b in spec.get("state_boxes", [])]
    inputs = [Box(b["lo"], b["hi"]) for b in spec.get("input_boxes", [])]
    keep_default = spec.get("include_default", True)

    def unsafe(x, u):
        if keep_default and default(x, u):
            return True
        return any(b.contains(x) for b in states) or any(b.contains(u) for b in inputs)

    return unsafe


def _library(spec: Optional[dict], default: InputLibrary, H) -> InputLibrary:
    if not spec:
        return default
    mode = spec.get("mode", "finite")
    jump = spec.get("jump_values")
    jump = None if jump is None else np.array(jump, dtype=float).reshape(len(jump), -1)
    if mode == "continuous":
        return InputLibrary(
            flow_box=H.input_bounds_flow,
            T_m=float(spec["flow_T_m"]),
            jump_values=jump,
            jump_box=None if jump is not None else H.input_bounds_jump,
        )
    lib = build_flow_library([np.atleast_1d(v) for v in spec["flow_levels"]], float(spec["flow_t_star"]))
    return lib.with_jumps(jump if jump is not None else default.jump_values)


def load_problem(source: Union[PathLike, dict]) -> LoadedProblem:
    """Build problem, library and planner settings from a problem file.

    Keys: ``system`` (gallery id), ``params``, ``X0``, ``Xf``, ``Xu``,
    ``delta_inflation``, and optional ``library`` and ``planner`` blocks.
    Missing pieces fall back to the gallery instance.
    """
    spec = dict(source) if isinstance(source, dict) else json.loads(Path(source).read_text())
    entry = get_entry(spec["system"])
    H, base = entry.factory(spec.get("params"))
    delta = float(spec.get("delta_inflation", 0.0) or 0.0)
    H_plan = inflate(H, delta)
    X0 = _state_set(spec.get("X0"), H.n) or base.X0
    Xf = _state_set(spec.get("Xf"), H.n) or base.Xf
    problem = MotionPlanningProblem(X0, Xf, _unsafe(spec.get("Xu"), base.Xu), H_plan, name=spec["system"])
    lib = _library(spec.get("library"), entry.library(), H_plan)
    p = dict(spec.get("planner") or {})
    scheme = IntegratorScheme(method=p.pop("method", "rk4"), step=float(p.pop("step", entry.step)))
    known = {f.name for f in fields(PlannerConfig)}
    unknown = set(p) - known
    if unknown:
        raise ValueError(f"unknown planner keys {sorted(unknown)}")
    p.setdefault("eps", entry.eps)
    p.setdefault("p_n", entry.p_n)
    p.setdefault("max_iter", entry.max_iter)
    config = PlannerConfig(scheme=scheme, **p)
    return LoadedProblem(problem, lib, config, spec)


def gallery_problem(name: str, **planner) -> LoadedProblem:
    """The shipped instance for a gallery id, as if loaded from a minimal file."""
    return load_problem({"system": name, "planner": planner})
