"""Report objects returned by checks, suites and the solver.

Reports carry pass/fail state instead of raising. They serialize to plain
dictionaries and YAML, and render to text (CLI) or HTML (notebooks) through
the jinja2 templates shipped in ``higherlag/templates``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar, List, Optional

import numpy as np
import yaml

try:
    from jinja2 import Environment, FileSystemLoader, TemplateNotFound

    HAS_JINJA2 = True
except ImportError:
    HAS_JINJA2 = False

TEMPLATES_DIR = Path(__file__).parent / "templates"


def _plain(value: Any) -> Any:
    """Convert numpy values and nested dataclasses to YAML-safe builtins."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)
        }
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _environment() -> "Environment":
    if not HAS_JINJA2:
        raise ImportError(
            "Jinja2 is required for report rendering. Install with: pip install jinja2"
        )
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    env.filters["sci"] = lambda v: f"{float(v):.3e}"
    return env


class Report:
    """Mixin for report dataclasses."""

    kind: ClassVar[str] = "report"

    def to_dict(self) -> dict:
        out = _plain(self)
        out["kind"] = self.kind
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def render_text(self) -> str:
        return render(self, "txt")

    def _repr_html_(self) -> str:
        return render(self, "html")


def render(report: Report, fmt: str = "txt") -> str:
    """Render ``report`` with ``<kind>.<fmt>.j2`` or the generic template."""
    env = _environment()
    try:
        template = env.select_template(
            [f"{report.kind}.{fmt}.j2", f"report.{fmt}.j2"]
        )
    except TemplateNotFound as e:
        raise FileNotFoundError(f"no report template in {TEMPLATES_DIR}: {e}")
    return template.render(report=report, data=report.to_dict())


# --------------------------------------------------------------------------- #
# Concrete reports
# --------------------------------------------------------------------------- #


@dataclass
class AxiomReport(Report):
    """Sampled skew-symmetry and anchor-compatibility residuals.

    The structure is certified only at the sampled points.
    """

    kind: ClassVar[str] = "check"

    label: str
    samples: int
    max_skew: float
    max_compat: float
    tol: float
    scale: float
    passed: bool
    worst_point: List[float] = field(default_factory=list)


@dataclass
class ResidualReport(Report):
    kind: ClassVar[str] = "residual"

    name: str
    residual: float
    tol: float
    passed: bool
    detail: str = ""


@dataclass
class BinomialReport(Report):
    kind: ClassVar[str] = "binomial"

    k: int
    checked: int
    failures: List[List[int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["passed"] = self.passed
        return out


@dataclass
class TransversalityReport(Report):
    kind: ClassVar[str] = "transversality"

    boundary: str
    residuals: List[float]
    tol: float
    passed: bool
    start: List[List[float]] = field(default_factory=list)
    end: List[List[float]] = field(default_factory=list)


@dataclass
class SuiteResult:
    name: str
    cases: int
    max_residual: float
    tol: float
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport(Report):
    kind: ClassVar[str] = "verify"

    seed: int
    suites: List[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["passed"] = self.passed
        return out


@dataclass
class SolveReport(Report):
    kind: ClassVar[str] = "solve"

    converged: bool
    iterations: int
    sup_force: float
    boundary_residual: float
    condition: float
    residual_history: List[float] = field(default_factory=list)
    coefficients: List[List[float]] = field(default_factory=list)
    message: str = ""


@dataclass
class SolutionCheck(Report):
    kind: ClassVar[str] = "solution"

    nodes: int
    sup_force: float
    boundary_residual: float
    force_tol: float
    boundary_tol: float
    transversality: Optional[TransversalityReport] = None

    @property
    def passed(self) -> bool:
        ok = (
            self.sup_force <= self.force_tol
            and self.boundary_residual <= self.boundary_tol
        )
        if self.transversality is not None:
            ok = ok and self.transversality.passed
        return ok

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["passed"] = self.passed
        return out
