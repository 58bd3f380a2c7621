"""Problem files: one YAML (or JSON) document describing a run.

Schema::

    algebroid:     preset name, or {preset: ..., <preset parameters>}
                   preset "custom": {m, r, rho: [[expr]], c: [[[expr]]], label}
                   preset "lie":    {c: [[[number]]], label}
                   preset "product": {factors: [preset, ...]}
    order:         k
    lagrangian:    expression in x1.., y1_0.. (no t)
    path:          {y: [expr(t)], x0: [number], steps: N}
    interval:      [t0, t1]
    samples:       N sample times for force/momentum tables
    external_force: [expr(t)]
    boundary:      {kind, start: {x, y0, y1, .., free}, end: {...},
                    pairs: [{start: [[number]], end: [[number]]}]}
    solver:        {degree, nodes, steps, initial, <numeric settings>}
    tolerances:    {<numeric settings>}

Only ``algebroid`` is always required; the other sections are required by
the commands that use them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import yaml

from . import presets
from .algebroid import AlgebroidStructure
from .config import DEFAULTS, NumericDefaults
from .errors import SchemaError
from .mechanics import BOUNDARY_KINDS, AdmissiblePath, BoundaryCondition, Lagrangian
from .solver import CollocationProblem, EndpointData, implied_boundary

TOP_LEVEL_KEYS = (
    "algebroid",
    "order",
    "lagrangian",
    "path",
    "interval",
    "samples",
    "external_force",
    "boundary",
    "solver",
    "tolerances",
    "description",
)
SOLVER_KEYS = ("degree", "nodes", "steps", "initial")
DEFAULT_SAMPLES = 11

_Y_KEY = re.compile(r"y(\d+)$")


def _require_keys(section: Mapping[str, Any], allowed, what: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise SchemaError(
            f"unknown key(s) {unknown} in {what}; valid keys: {', '.join(allowed)}"
        )


def _require_mapping(value: Any, what: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise SchemaError(f"{what} must be a mapping; got {type(value).__name__}")
    return value


def _require_int(value: Any, what: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise SchemaError(f"{what} must be an integer >= {minimum}; got {value!r}")
    return value


def _numbers(value: Any, what: str, length: Optional[int] = None) -> List[float]:
    if not isinstance(value, (list, tuple)):
        raise SchemaError(f"{what} must be a list of numbers")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise SchemaError(f"{what} must be a list of numbers; got {value!r}") from None
    if length is not None and len(out) != length:
        raise SchemaError(f"{what} needs {length} entries, got {len(out)}")
    return out


def _sources(value: Any, what: str, length: int) -> List[Any]:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise SchemaError(f"{what} must be a list of {length} expressions")
    return list(value)


# --------------------------------------------------------------------------- #
# Sections
# --------------------------------------------------------------------------- #


def build_algebroid(section: Any) -> AlgebroidStructure:
    """Build a structure from a preset name or an ``algebroid`` mapping."""
    if isinstance(section, str):
        return presets.build(section)
    section = _require_mapping(section, "algebroid")
    if "preset" not in section:
        raise SchemaError("algebroid needs a 'preset' key")
    name = section["preset"]
    params = {k: v for k, v in section.items() if k != "preset"}
    if name == "custom":
        _require_keys(params, ("m", "r", "rho", "c", "label"), "a custom algebroid")
        missing = [k for k in ("m", "r", "rho", "c") if k not in params]
        if missing:
            raise SchemaError(f"a custom algebroid needs {', '.join(missing)}")
        return AlgebroidStructure.from_sources(
            _require_int(params["m"], "algebroid m"),
            _require_int(params["r"], "algebroid r"),
            params["rho"],
            params["c"],
            params.get("label", "custom"),
        )
    if name == "lie":
        _require_keys(params, ("c", "label"), "a lie algebroid")
        if "c" not in params:
            raise SchemaError("a lie algebroid needs structure constants 'c'")
        return presets.lie(params["c"], params.get("label", "lie"))
    return presets.build(name, **params)


def _endpoint(section: Any, what: str, m: int, r: int) -> EndpointData:
    if section is None:
        return EndpointData()
    section = _require_mapping(section, what)
    data = EndpointData()
    for key, value in section.items():
        match = _Y_KEY.match(key)
        if key == "x":
            data.x = _numbers(value, f"{what} x", m)
        elif key == "free":
            data.free = bool(value)
        elif match:
            data.y[int(match.group(1))] = _numbers(value, f"{what} {key}", r)
        else:
            raise SchemaError(
                f"unknown key {key!r} in {what}; valid keys: x, free, y0, y1, ..."
            )
    return data


def _pairs(value: Any, r: int, k: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    if not isinstance(value, (list, tuple)) or not value:
        raise SchemaError("a spanned boundary needs a non-empty 'pairs' list")
    out = []
    for n, pair in enumerate(value):
        pair = _require_mapping(pair, f"boundary pair {n}")
        _require_keys(pair, ("start", "end"), f"boundary pair {n}")
        ends = []
        for side in ("start", "end"):
            v = np.asarray(pair.get(side, np.zeros((r, k))), dtype=float)
            if v.shape != (r, k):
                raise SchemaError(
                    f"boundary pair {n} {side} must have shape ({r}, {k})"
                )
            ends.append(v)
        out.append((ends[0], ends[1]))
    return out


# --------------------------------------------------------------------------- #
# The problem
# --------------------------------------------------------------------------- #


@dataclass
class ProblemFile:
    """A validated problem file."""

    structure: AlgebroidStructure
    order: Optional[int] = None
    lagrangian: Optional[Lagrangian] = None
    path: Optional[AdmissiblePath] = None
    interval: Optional[Tuple[float, float]] = None
    samples: int = DEFAULT_SAMPLES
    external_force: Optional[List[Any]] = None
    boundary_kind: Optional[str] = None
    pairs: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    start: EndpointData = field(default_factory=EndpointData)
    end: EndpointData = field(default_factory=EndpointData)
    solver: Dict[str, Any] = field(default_factory=dict)
    settings: NumericDefaults = DEFAULTS
    source: Optional[str] = None

    # -- required sections --------------------------------------------------

    def require_lagrangian(self) -> Lagrangian:
        if self.lagrangian is None:
            raise SchemaError(f"{self._name()} has no 'order' and 'lagrangian'")
        return self.lagrangian

    def require_path(self) -> AdmissiblePath:
        if self.path is None:
            raise SchemaError(f"{self._name()} has no 'path' and 'interval'")
        return self.path

    def require_interval(self) -> Tuple[float, float]:
        if self.interval is None:
            raise SchemaError(f"{self._name()} has no 'interval'")
        return self.interval

    def _name(self) -> str:
        return self.source or "the problem"

    # -- derived objects ----------------------------------------------------

    def sample_times(self, count: Optional[int] = None) -> np.ndarray:
        t0, t1 = self.require_interval()
        return np.linspace(t0, t1, self.samples if count is None else count)

    def boundary_condition(self) -> BoundaryCondition:
        """The declared boundary class, or the one implied by free endpoints."""
        if self.boundary_kind == "spanned":
            return BoundaryCondition("spanned", list(self.pairs))
        if self.boundary_kind is not None:
            return BoundaryCondition(self.boundary_kind)
        k = self.order or 1
        return implied_boundary(self.structure.r, k, self.start.free, self.end.free)

    def collocation_problem(self) -> CollocationProblem:
        L = self.require_lagrangian()
        x0 = None
        if self.path is not None and self.start.x is None:
            x0 = list(self.path.x0)
        return CollocationProblem(
            A=self.structure,
            L=L,
            interval=self.require_interval(),
            degree=self.solver.get("degree", 5),
            nodes=self.solver.get("nodes"),
            start=self.start,
            end=self.end,
            x0=x0,
            external_force=self.external_force,
            steps=self.solver.get("steps", 200),
            settings=self.settings,
        )

    def initial_coefficients(self) -> Optional[np.ndarray]:
        initial = self.solver.get("initial")
        return None if initial is None else np.asarray(initial, dtype=float)

    def with_settings(self, overrides: Mapping[str, Any]) -> "ProblemFile":
        return replace(self, settings=self.settings.merged(overrides))


def parse_problem(
    data: Any,
    source: Optional[str] = None,
    settings: NumericDefaults = DEFAULTS,
) -> ProblemFile:
    """Validate a decoded document and build its objects.

    Raises:
        SchemaError: on unknown keys, missing sections or bad shapes.
    """
    data = _require_mapping(data, "a problem file")
    _require_keys(data, TOP_LEVEL_KEYS, "the problem file")
    if "algebroid" not in data:
        raise SchemaError("a problem file needs an 'algebroid' section")

    solver_section = dict(_require_mapping(data.get("solver", {}), "solver"))
    tolerance_section = _require_mapping(data.get("tolerances", {}), "tolerances")
    numeric = {k: v for k, v in solver_section.items() if k not in SOLVER_KEYS}
    settings = settings.merged(tolerance_section).merged(numeric)
    solver = {k: v for k, v in solver_section.items() if k in SOLVER_KEYS}
    for key in ("degree", "nodes", "steps"):
        if key in solver:
            solver[key] = _require_int(solver[key], f"solver {key}", minimum=0)

    A = build_algebroid(data["algebroid"])
    problem = ProblemFile(structure=A, settings=settings, source=source, solver=solver)

    if ("order" in data) != ("lagrangian" in data):
        raise SchemaError("'order' and 'lagrangian' must be given together")
    if "order" in data:
        problem.order = _require_int(data["order"], "order", minimum=1)
        problem.lagrangian = Lagrangian.from_source(
            data["lagrangian"], problem.order, A.m, A.r, settings
        )

    if "interval" in data:
        t0, t1 = _numbers(data["interval"], "interval", 2)
        if not t1 > t0:
            raise SchemaError(f"interval must satisfy t0 < t1, got {[t0, t1]}")
        problem.interval = (t0, t1)

    if "samples" in data:
        problem.samples = _require_int(data["samples"], "samples", minimum=2)

    if "external_force" in data:
        problem.external_force = _sources(data["external_force"], "external_force", A.r)

    if "path" in data:
        section = _require_mapping(data["path"], "path")
        _require_keys(section, ("y", "x0", "steps"), "path")
        if problem.interval is None:
            raise SchemaError("a path needs an 'interval'")
        if "y" not in section:
            raise SchemaError("path needs 'y'")
        if "x0" not in section and A.m:
            raise SchemaError(f"path needs 'x0' with {A.m} entries")
        steps = section.get("steps")
        problem.path = AdmissiblePath.from_sources(
            _sources(section["y"], "path y", A.r),
            _numbers(section.get("x0", []), "path x0", A.m),
            problem.interval,
            None if steps is None else _require_int(steps, "path steps", minimum=1),
        )

    if "boundary" in data:
        section = _require_mapping(data["boundary"], "boundary")
        _require_keys(section, ("kind", "start", "end", "pairs"), "boundary")
        kind = section.get("kind")
        if kind is not None and kind not in BOUNDARY_KINDS:
            raise SchemaError(
                f"boundary kind must be one of {', '.join(BOUNDARY_KINDS)}; "
                f"got {kind!r}"
            )
        problem.boundary_kind = kind
        problem.start = _endpoint(section.get("start"), "boundary start", A.m, A.r)
        problem.end = _endpoint(section.get("end"), "boundary end", A.m, A.r)
        if kind == "free":
            problem.start.free = problem.end.free = True
        if kind == "spanned":
            problem.pairs = _pairs(section.get("pairs"), A.r, problem.order or 1)
        elif "pairs" in section:
            raise SchemaError("'pairs' is only valid for a spanned boundary")
    return problem


def load_problem(
    path: Union[str, Path], settings: NumericDefaults = DEFAULTS
) -> ProblemFile:
    """Read a YAML or JSON problem file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError(f"{path} is not valid YAML or JSON: {e}") from e
    return parse_problem(data, source=str(path), settings=settings)
