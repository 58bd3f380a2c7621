"""Stationary trajectories by least-squares collocation.

The fiber curve ``y(t)`` is a Chebyshev series on the interval. Residuals are
the force at Chebyshev nodes plus penalized boundary residuals; they are
minimized by Gauss-Newton with Levenberg damping. Jacobian columns come from
one forward seed per coefficient pushed through the whole force pipeline,
base integration included.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial.chebyshev import chebpts1

from .algebroid import AlgebroidStructure
from .config import DEFAULTS, NumericDefaults
from .errors import ContractViolation, SchemaError
from .jetcalc import Jet, coefficient, new_tag, shifted
from .mechanics import (
    AdmissiblePath,
    BoundaryCondition,
    ExprCurve,
    Lagrangian,
    force_values,
    integrate_base,
    momentum_values,
    transversality_check,
)
from .reports import SolutionCheck, SolveReport

logger = logging.getLogger(__name__)

#: Integrator steps used inside the solver residual.
SOLVER_STEPS = 200


# --------------------------------------------------------------------------- #
# The ansatz
# --------------------------------------------------------------------------- #


def clenshaw(coeffs: Sequence[Any], s: Any) -> Any:
    """``sum_n coeffs[n] T_n(s)`` for ring-valued coefficients and argument."""
    b1: Any = 0.0
    b2: Any = 0.0
    for c in reversed(coeffs[1:]):
        b1, b2 = c + 2.0 * s * b1 - b2, b1
    return coeffs[0] + s * b1 - b2


@dataclass(frozen=True)
class ChebyshevCurve:
    """A fiber curve given by Chebyshev coefficients ``coefficients[i][n]``."""

    coefficients: Tuple[Tuple[Any, ...], ...]
    interval: Tuple[float, float]

    def __len__(self) -> int:
        return len(self.coefficients)

    def _s(self, t: Any) -> Any:
        t0, t1 = self.interval
        return (2.0 * t - (t0 + t1)) / (t1 - t0)

    def values(self, t: float) -> List[Any]:
        s = self._s(t)
        return [clenshaw(row, s) for row in self.coefficients]

    def jets(self, t: float, order: int, tag: int) -> List[Jet]:
        s = self._s(Jet.variable(t, order, tag))
        return [shifted(clenshaw(row, s), tag, 0, order) for row in self.coefficients]


# --------------------------------------------------------------------------- #
# Problems
# --------------------------------------------------------------------------- #


@dataclass
class EndpointData:
    """Prescribed data at one end: base values, ``y^(alpha)`` values, or free."""

    x: Optional[List[float]] = None
    y: Dict[int, List[float]] = field(default_factory=dict)
    free: bool = False


def implied_boundary(
    r: int, k: int, start_free: bool, end_free: bool
) -> BoundaryCondition:
    """Free at both ends, fixed at both, or spanned by the free end's jets."""
    if start_free and end_free:
        return BoundaryCondition("free")
    if not (start_free or end_free):
        return BoundaryCondition("fixed")
    pairs = []
    for i in range(r):
        for b in range(k):
            v = np.zeros((r, k))
            v[i, b] = 1.0
            zero = np.zeros((r, k))
            pairs.append((v, zero) if start_free else (zero, v))
    return BoundaryCondition("spanned", pairs)


@dataclass
class CollocationProblem:
    A: AlgebroidStructure
    L: Lagrangian
    interval: Tuple[float, float]
    degree: int = 5
    nodes: Optional[int] = None
    start: EndpointData = field(default_factory=EndpointData)
    end: EndpointData = field(default_factory=EndpointData)
    x0: Optional[List[float]] = None
    external_force: Optional[Sequence[Any]] = None
    steps: int = SOLVER_STEPS
    settings: NumericDefaults = DEFAULTS

    def __post_init__(self) -> None:
        A, k = self.A, self.L.k
        t0, t1 = (float(v) for v in self.interval)
        if not t1 > t0:
            raise SchemaError(f"interval must satisfy t0 < t1, got {self.interval}")
        self.interval = (t0, t1)
        if self.degree < 0:
            raise SchemaError("ansatz degree must be non-negative")
        if self.nodes is None:
            self.nodes = 2 * (self.degree + 1)
        if self.nodes < self.degree + 1:
            raise SchemaError(
                f"need at least degree + 1 = {self.degree + 1} nodes, got {self.nodes}"
            )
        for name, end in (("start", self.start), ("end", self.end)):
            if end.free and (end.x is not None or end.y):
                raise SchemaError(f"a free {name} carries no prescribed values")
            if end.x is not None and len(end.x) != A.m:
                raise SchemaError(f"{name} x needs {A.m} entries")
            for alpha, values in end.y.items():
                if not 0 <= alpha < k:
                    raise SchemaError(f"{name} y{alpha} is outside orders 0..{k - 1}")
                if len(values) != A.r:
                    raise SchemaError(f"{name} y{alpha} needs {A.r} entries")
        if self.start.x is not None and self.x0 is not None:
            if not np.allclose(self.start.x, self.x0, rtol=0.0, atol=0.0):
                raise SchemaError("x0 and the start base value disagree")
        if self.base_start is None and A.m:
            raise SchemaError("the base start needs x0 or a start x value")
        if self.external_force is not None and not isinstance(
            self.external_force, ExprCurve
        ):
            self.external_force = ExprCurve.from_sources(self.external_force)
        if self.degree < 2 * k - 1:
            warnings.warn(
                f"degree {self.degree} is below 2k-1 = {2 * k - 1}",
                UserWarning,
                stacklevel=3,
            )
        if self.nodes * A.r < self.unknowns:
            warnings.warn(
                f"{self.nodes * A.r} node residuals for {self.unknowns} unknowns",
                UserWarning,
                stacklevel=3,
            )

    @property
    def base_start(self) -> Optional[List[float]]:
        if self.start.x is not None:
            return list(self.start.x)
        return None if self.x0 is None else list(self.x0)

    @property
    def unknowns(self) -> int:
        return self.A.r * (self.degree + 1)

    def node_times(self, count: Optional[int] = None) -> np.ndarray:
        t0, t1 = self.interval
        s = chebpts1(self.nodes if count is None else count)
        return 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * s

    def path(self, coefficients: Any) -> AdmissiblePath:
        rows = tuple(tuple(row) for row in coefficients)
        return AdmissiblePath(
            ChebyshevCurve(rows, self.interval),
            tuple(self.base_start or []),
            self.interval,
            self.steps,
        )

    def initial_coefficients(self) -> np.ndarray:
        """Linear interpolation of prescribed ``y`` values, zero elsewhere."""
        out = np.zeros((self.A.r, self.degree + 1))
        a = self.start.y.get(0)
        b = self.end.y.get(0)
        for i in range(self.A.r):
            if a is not None and b is not None:
                out[i, 0] = 0.5 * (a[i] + b[i])
                if self.degree >= 1:
                    out[i, 1] = 0.5 * (b[i] - a[i])
            elif a is not None or b is not None:
                out[i, 0] = (a if a is not None else b)[i]
        return out

    def boundary_condition(self) -> BoundaryCondition:
        """The transversality class implied by the free ends."""
        return implied_boundary(self.A.r, self.L.k, self.start.free, self.end.free)

    # -- residuals -----------------------------------------------------------

    def residuals(
        self, coefficients: Any, times: Optional[np.ndarray] = None
    ) -> Tuple[List[Any], List[Any]]:
        """Unscaled node forces and boundary residuals, ring-generic."""
        A, L = self.A, self.L
        path = self.path(coefficients)
        trajectory = integrate_base(A, path)
        times = self.node_times() if times is None else times
        forces: List[Any] = []
        for t in times:
            F = force_values(A, L, path, float(t), trajectory)
            if self.external_force is not None:
                F = [f - g for f, g in zip(F, self.external_force.values(float(t)))]
            forces.extend(F)
        boundary: List[Any] = []
        t0, t1 = self.interval
        if self.end.x is not None:
            # The start base value is the integration start and holds exactly.
            xs = trajectory.value(t1)
            boundary.extend(v - target for v, target in zip(xs, self.end.x))
        for t, end in ((t0, self.start), (t1, self.end)):
            if end.y:
                tag = new_tag()
                top = max(end.y)
                jets = path.curve.jets(t, top, tag)
                for alpha in sorted(end.y):
                    boundary.extend(
                        coefficient(j, tag, alpha) - target
                        for j, target in zip(jets, end.y[alpha])
                    )
            if end.free:
                raw, _ = momentum_values(A, L, path, t, trajectory)
                boundary.extend(v for row in raw for v in row)
        return forces, boundary


# --------------------------------------------------------------------------- #
# Solving
# --------------------------------------------------------------------------- #


@dataclass
class Solution:
    problem: CollocationProblem
    coefficients: np.ndarray
    report: SolveReport

    @property
    def converged(self) -> bool:
        return self.report.converged

    def path(self) -> AdmissiblePath:
        return self.problem.path(self.coefficients)

    def y_polynomials(self) -> List[Polynomial]:
        """Monomial series in ``t`` for each fiber component."""
        domain = list(self.problem.interval)
        return [
            Chebyshev(row, domain=domain).convert(kind=Polynomial)
            for row in self.coefficients
        ]


def _sup(values: Sequence[float]) -> float:
    return float(np.max(np.abs(values), initial=0.0))


class _Objective:
    """Residual vector and Jacobian of a problem over flat coefficients."""

    def __init__(self, problem: CollocationProblem) -> None:
        self.p = problem
        self.shape = (problem.A.r, problem.degree + 1)
        self.weight = math.sqrt(problem.settings.boundary_penalty)

    def split(self, flat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        forces, boundary = self.p.residuals(flat.reshape(self.shape))
        return (
            np.array([float(v) for v in forces]),
            np.array([float(v) for v in boundary]),
        )

    def vector(self, forces: np.ndarray, boundary: np.ndarray) -> np.ndarray:
        return np.concatenate([forces, self.weight * boundary])

    def jacobian(self, flat: np.ndarray) -> np.ndarray:
        columns = []
        for j in range(flat.size):
            tag = new_tag()
            seeded: List[Any] = list(flat)
            seeded[j] = Jet((float(flat[j]), 1.0), tag)
            width = self.shape[1]
            rows = [seeded[i : i + width] for i in range(0, flat.size, width)]
            forces, boundary = self.p.residuals(rows)
            col = [float(coefficient(v, tag, 1)) for v in forces]
            col += [self.weight * float(coefficient(v, tag, 1)) for v in boundary]
            columns.append(col)
        return np.array(columns, dtype=float).T


def solve(
    p: CollocationProblem, initial: Optional[np.ndarray] = None
) -> Solution:
    """Levenberg-damped Gauss-Newton over the Chebyshev coefficients.

    Only non-increasing steps are accepted. A non-converged run returns its
    best iterate with the Jacobian condition number; it does not raise.
    """
    s = p.settings
    obj = _Objective(p)
    c = p.initial_coefficients() if initial is None else np.asarray(initial, float)
    if c.shape != obj.shape:
        raise ContractViolation(f"initial coefficients need shape {obj.shape}")
    c = c.ravel().copy()

    forces, boundary = obj.split(c)
    res = obj.vector(forces, boundary)
    cost = float(res @ res)
    J = obj.jacobian(c)
    lam = s.lm_lambda0
    history = [math.sqrt(cost)]
    iterations = 0

    def done(f: np.ndarray, b: np.ndarray) -> bool:
        return _sup(f) <= s.force_tol and _sup(b) <= s.boundary_tol

    while iterations < s.lm_max_iter and not done(forces, boundary):
        iterations += 1
        n = c.size
        A_aug = np.vstack([J, math.sqrt(lam) * np.eye(n)])
        rhs = np.concatenate([-res, np.zeros(n)])
        step = np.linalg.lstsq(A_aug, rhs, rcond=None)[0]
        trial = c + step
        f_t, b_t = obj.split(trial)
        r_t = obj.vector(f_t, b_t)
        cost_t = float(r_t @ r_t)
        logger.debug(
            "iteration %d: lambda=%.2e cost=%.6e trial=%.6e",
            iterations,
            lam,
            cost,
            cost_t,
        )
        if cost_t <= cost:
            c, forces, boundary, res, cost = trial, f_t, b_t, r_t, cost_t
            history.append(math.sqrt(cost))
            lam *= s.lm_shrink
            if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(c)):
                break
            J = obj.jacobian(c)
        else:
            lam *= s.lm_grow
            if lam > 1e16:
                break

    # Undamped polish.
    step = np.linalg.lstsq(J, -res, rcond=None)[0]
    trial = c + step
    f_t, b_t = obj.split(trial)
    r_t = obj.vector(f_t, b_t)
    if float(r_t @ r_t) <= cost:
        c, forces, boundary, res, cost = trial, f_t, b_t, r_t, float(r_t @ r_t)
        history.append(math.sqrt(cost))

    condition = float(np.linalg.cond(J)) if J.size else 0.0
    converged = done(forces, boundary)
    if converged:
        message = "converged"
    elif not np.isfinite(condition) or condition > 1e12:
        message = "singular Jacobian; returning best iterate"
    else:
        message = "did not converge; returning best iterate"
    report = SolveReport(
        converged=converged,
        iterations=iterations,
        sup_force=_sup(forces),
        boundary_residual=_sup(boundary),
        condition=condition,
        residual_history=history,
        coefficients=c.reshape(obj.shape).tolist(),
        message=message,
    )
    logger.info(
        "solve: %s after %d iterations (sup|F|=%.3e, boundary=%.3e, cond=%.3e)",
        message,
        iterations,
        report.sup_force,
        report.boundary_residual,
        condition,
    )
    return Solution(p, c.reshape(obj.shape), report)


def verify_solution(p: CollocationProblem, coefficients: Any) -> SolutionCheck:
    """Re-check forces on four times as many nodes, boundaries and transversality."""
    s = p.settings
    coeffs = np.asarray(coefficients, dtype=float).reshape(p.A.r, p.degree + 1)
    count = 4 * int(p.nodes)
    forces, boundary = p.residuals(coeffs, p.node_times(count))
    trans = transversality_check(
        p.A,
        p.L,
        p.path(coeffs),
        p.boundary_condition(),
        tol=s.boundary_tol,
    )
    return SolutionCheck(
        nodes=count,
        sup_force=_sup([float(v) for v in forces]),
        boundary_residual=_sup([float(v) for v in boundary]),
        force_tol=s.force_tol,
        boundary_tol=s.boundary_tol,
        transversality=trans,
    )
