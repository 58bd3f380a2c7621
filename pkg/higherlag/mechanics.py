"""Lagrangians, admissible paths and the force/momentum pipeline.

Along an admissible path the Lagrangian's differential is pushed through the
dual map ``eps_k`` to a curve ``Lambda_L(t)`` in T^k E*. The force is the
integration-by-parts map ``upsilon`` applied to its k-jet in time, and the
momentum is ``momenta_map`` applied to the (k-1)-jet of its truncation. Time
derivatives are taken by evaluating the whole chain on jet-valued time; the
finite-difference mode exists only as a diagnostic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from . import expr as ex
from .algebroid import AlgebroidStructure, anchor_flow_jet
from .config import DEFAULTS, NumericDefaults
from .errors import (
    ConsistencyError,
    ContractViolation,
    SchemaError,
    StepRejected,
)
from .jetcalc import (
    Jet,
    coefficient,
    directional_derivative,
    new_tag,
    scalar_part,
    shifted,
    unit,
)
from .prolong import (
    EkCovector,
    EkPoint,
    TkCovector,
    eps_k,
    momenta_map,
    momentum_coordinates,
    pairing_momentum,
    pairing_Tk,
    upsilon,
)
from .reports import ResidualReport, TransversalityReport

logger = logging.getLogger(__name__)

BOUNDARY_KINDS = ("fixed", "free", "spanned")


def _floats(values: Sequence[Any]) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)


# --------------------------------------------------------------------------- #
# Lagrangians
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Lagrangian:
    """A k-th order Lagrangian ``L(x, y_0, ..., y_{k-1})`` on E^k."""

    k: int
    expr: ex.Expr
    m: int
    r: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ContractViolation(f"Lagrangian order must be >= 1, got {self.k}")
        ex.require_names(self.expr, self.names(), "the Lagrangian")

    @classmethod
    def from_source(
        cls,
        source: Any,
        k: int,
        m: int,
        r: int,
        settings: NumericDefaults = DEFAULTS,
    ) -> "Lagrangian":
        """Parse and validate a Lagrangian.

        Raises:
            SchemaError: if it references ``t`` or names outside E^k.
            ContractViolation: if ``k`` exceeds ``max_lagrangian_order``.
        """
        if k > settings.max_lagrangian_order:
            raise ContractViolation(
                f"order {k} exceeds max_lagrangian_order="
                f"{settings.max_lagrangian_order}"
            )
        e = ex.as_expr(source)
        if "t" in ex.free_vars(e):
            raise SchemaError("Lagrangians are autonomous and may not reference t")
        return cls(int(k), e, int(m), int(r))

    def names(self) -> List[str]:
        return ex.base_names(self.m) + ex.fiber_names(self.r, self.k)

    def value(self, e: EkPoint) -> Any:
        return self.expr.evaluate(dict(zip(self.names(), e.coordinates())))

    def _value_at(self, *z: Any) -> Any:
        return self.expr.evaluate(dict(zip(self.names(), z)))

    def differential(self, e: EkPoint) -> EkCovector:
        """``dL`` at ``e`` from one forward seed per coordinate."""
        if e.k != self.k or e.m != self.m or e.r != self.r:
            raise ContractViolation("point does not lie in this Lagrangian's E^k")
        z = e.coordinates()
        n = len(z)
        used = ex.free_vars(self.expr)
        names = self.names()
        grad = [
            directional_derivative(self._value_at, z, unit(n, j))
            if names[j] in used
            else 0.0
            for j in range(n)
        ]
        k, m = self.k, self.m
        dy = [[grad[m + i * k + a] for a in range(k)] for i in range(self.r)]
        return EkCovector(base=e, dx=grad[:m], dy=dy)


# --------------------------------------------------------------------------- #
# Curves and paths
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ExprCurve:
    """A curve in R^n given by expressions in ``t``."""

    exprs: Tuple[ex.Expr, ...]

    @classmethod
    def from_sources(cls, sources: Sequence[Any]) -> "ExprCurve":
        exprs = tuple(ex.as_expr(s) for s in sources)
        for e in exprs:
            ex.require_names(e, ["t"], "a path expression")
        return cls(exprs)

    def __len__(self) -> int:
        return len(self.exprs)

    def values(self, t: float) -> List[Any]:
        env = {"t": t}
        return [e.evaluate(env) for e in self.exprs]

    def jets(self, t: float, order: int, tag: int) -> List[Jet]:
        env = {"t": Jet.variable(t, order, tag)}
        return [shifted(e.evaluate(env), tag, 0, order) for e in self.exprs]


#: A variation generator is a curve b(t) in the fibers of E.
VariationGenerator = ExprCurve


@dataclass(frozen=True)
class AdmissiblePath:
    """A fiber curve ``y(t)`` and base start ``x0``; the base follows the anchor."""

    curve: Any
    x0: Tuple[Any, ...]
    interval: Tuple[float, float]
    steps: int = DEFAULTS.integrator_steps

    def __post_init__(self) -> None:
        t0, t1 = self.interval
        if not t1 > t0:
            raise SchemaError(f"interval must satisfy t0 < t1, got {self.interval}")
        if self.steps < 1:
            raise SchemaError("integrator steps must be positive")
        object.__setattr__(self, "x0", tuple(self.x0))

    @classmethod
    def from_sources(
        cls,
        y: Sequence[Any],
        x0: Sequence[float],
        interval: Sequence[float],
        steps: Optional[int] = None,
    ) -> "AdmissiblePath":
        t0, t1 = (float(v) for v in interval)
        return cls(
            ExprCurve.from_sources(y),
            tuple(float(v) for v in x0),
            (t0, t1),
            DEFAULTS.integrator_steps if steps is None else int(steps),
        )

    @property
    def t0(self) -> float:
        return self.interval[0]

    @property
    def t1(self) -> float:
        return self.interval[1]


@dataclass
class BaseTrajectory:
    """Base curve ``x(t)`` on a fixed grid with dense output.

    Node values may be floats or jets (the solver integrates in the
    parameter ring).
    """

    A: AlgebroidStructure
    path: AdmissiblePath
    times: np.ndarray
    states: List[List[Any]] = field(default_factory=list)
    dense_order: int = DEFAULTS.dense_output_order

    def _node(self, t: float) -> int:
        if self.times.size == 1:
            return 0
        h = self.times[1] - self.times[0]
        n = int(round((t - self.times[0]) / h))
        return min(max(n, 0), self.times.size - 1)

    def value(self, t: float) -> List[Any]:
        """``x(t)`` by Taylor re-expansion at the nearest grid node."""
        if self.A.m == 0:
            return []
        n = self._node(t)
        tn = float(self.times[n])
        dt = t - tn
        if dt == 0.0:
            return list(self.states[n])
        tag = new_tag()
        ys = self.path.curve.jets(tn, self.dense_order, tag)
        xs = anchor_flow_jet(self.A, self.states[n], ys, self.dense_order, tag)
        out = []
        for xj in xs:
            acc = xj.coeffs[0]
            for a in range(1, self.dense_order + 1):
                acc = acc + xj.coeffs[a] * (dt**a / math.factorial(a))
            out.append(acc)
        return out

    def x_jet(self, t: float, order: int, tag: int) -> List[Jet]:
        """Jets of ``x`` at ``t`` in variable ``tag``, exact given ``x(t)``."""
        if self.A.m == 0:
            return []
        ys = self.path.curve.jets(t, max(order - 1, 0), tag)
        return anchor_flow_jet(self.A, self.value(t), ys, order, tag)


def integrate_base(
    A: AlgebroidStructure,
    path: AdmissiblePath,
    steps: Optional[int] = None,
) -> BaseTrajectory:
    """Classical fourth-order Runge-Kutta for ``xdot = rho(x) y(t)``.

    Raises:
        StepRejected: on a non-finite state.
    """
    if len(path.x0) != A.m:
        raise ContractViolation(f"x0 needs {A.m} entries, got {len(path.x0)}")
    if len(path.curve) != A.r:
        raise ContractViolation(f"the path needs {A.r} fiber components")
    n = path.steps if steps is None else steps
    times = np.linspace(path.t0, path.t1, n + 1)
    if A.m == 0:
        return BaseTrajectory(A, path, times, [[] for _ in times])
    h = (path.t1 - path.t0) / n

    def rhs(t: float, x: List[Any]) -> List[Any]:
        return A.anchor(x, path.curve.values(t))

    x = list(path.x0)
    states = [x]
    for s in range(n):
        t = float(times[s])
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, [xa + (h / 2) * ka for xa, ka in zip(x, k1)])
        k3 = rhs(t + h / 2, [xa + (h / 2) * ka for xa, ka in zip(x, k2)])
        k4 = rhs(t + h, [xa + h * ka for xa, ka in zip(x, k3)])
        x = [
            xa + (h / 6) * (a + 2 * b + 2 * c + d)
            for xa, a, b, c, d in zip(x, k1, k2, k3, k4)
        ]
        if not all(math.isfinite(scalar_part(v)) for v in x):
            raise StepRejected(f"non-finite base state at t={times[s + 1]:.6g}")
        states.append(x)
    logger.debug("integrated base over [%g, %g] in %d steps", path.t0, path.t1, n)
    return BaseTrajectory(A, path, times, states)


# --------------------------------------------------------------------------- #
# Samples
# --------------------------------------------------------------------------- #


@dataclass
class ForceSample:
    t: float
    F: np.ndarray


@dataclass
class MomentumSample:
    """Raw momentum components ``m[i][b]`` with their averaged coordinates."""

    t: float
    m: np.ndarray
    coordinates: np.ndarray
    basejet: np.ndarray


@dataclass
class BoundaryCondition:
    """``fixed``, ``free``, or ``spanned`` by pairs of endpoint jets ``(v0, v1)``."""

    kind: str = "fixed"
    pairs: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in BOUNDARY_KINDS:
            raise SchemaError(
                f"boundary kind must be one of {', '.join(BOUNDARY_KINDS)}"
            )


# --------------------------------------------------------------------------- #
# The pipeline
# --------------------------------------------------------------------------- #


def path_point(
    L: Lagrangian,
    path: AdmissiblePath,
    trajectory: BaseTrajectory,
    t: float,
    order: int,
    tag: int,
) -> EkPoint:
    """``a^k(t)`` as jets of the given order in ``tag``."""
    k = L.k
    yj = path.curve.jets(t, order + k - 1, tag)
    ys = [[shifted(v, tag, alpha, order) for alpha in range(k)] for v in yj]
    return EkPoint(k, trajectory.x_jet(t, order, tag), ys)


def lambda_jets(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    order: int,
    trajectory: Optional[BaseTrajectory] = None,
) -> Tuple[int, EkPoint, EkCovector, TkCovector]:
    """``Lambda_L = eps_k(dL)`` along the path as jets of ``order`` in time.

    Returns the time tag with the point, the differential and the image.
    """
    _check_dimensions(A, L, path)
    trajectory = trajectory or integrate_base(A, path)
    tag = new_tag()
    e = path_point(L, path, trajectory, t, order, tag)
    psi = L.differential(e)
    return tag, e, psi, eps_k(A, psi)


def _check_dimensions(
    A: AlgebroidStructure, L: Lagrangian, path: AdmissiblePath
) -> None:
    if (L.m, L.r) != (A.m, A.r):
        raise ContractViolation("Lagrangian and structure dimensions differ")
    if len(path.curve) != A.r or len(path.x0) != A.m:
        raise ContractViolation("path and structure dimensions differ")


def _time_block(zeta: TkCovector, tag: int, a_max: int, b_max: int) -> List:
    return [
        [
            [coefficient(row[b], tag, a) for b in range(b_max + 1)]
            for a in range(a_max + 1)
        ]
        for row in zeta.xi
    ]


def force_values(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    trajectory: Optional[BaseTrajectory] = None,
) -> List[Any]:
    """Ring-generic force components at ``t``."""
    k = L.k
    tag, _, _, zeta = lambda_jets(A, L, path, t, k, trajectory)
    return upsilon(_time_block(zeta, tag, k, k))


def _external(
    external_force: Optional[Sequence[Any]], r: int, t: float
) -> np.ndarray:
    if external_force is None:
        return np.zeros(r)
    curve = (
        external_force
        if isinstance(external_force, ExprCurve)
        else ExprCurve.from_sources(external_force)
    )
    if len(curve) != r:
        raise SchemaError(f"an external force needs {r} components")
    return _floats(curve.values(t))


def force(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    *,
    method: str = "taylor",
    external_force: Optional[Sequence[Any]] = None,
    trajectory: Optional[BaseTrajectory] = None,
    settings: NumericDefaults = DEFAULTS,
) -> ForceSample:
    """The Euler-Lagrange force at ``t``, minus ``external_force(t)`` if given.

    ``method="fd"`` differentiates sampled values of ``Lambda_L`` with a
    centered polynomial stencil instead of jet-valued time.
    """
    trajectory = trajectory or integrate_base(A, path)
    if method == "taylor":
        F = _floats(force_values(A, L, path, t, trajectory))
    elif method == "fd":
        F = _force_fd(A, L, path, t, trajectory, settings.fd_step)
    else:
        raise SchemaError(f"unknown force method {method!r}")
    return ForceSample(t=t, F=F - _external(external_force, A.r, t))


def _force_fd(A, L, path, t, trajectory, step: float) -> np.ndarray:
    k = L.k
    n = k + 1
    offsets = np.arange(-n, n + 1, dtype=float)
    samples = []
    for s in offsets:
        tag, _, _, zeta = lambda_jets(A, L, path, t + s * step, 0, trajectory)
        samples.append(
            [[float(coefficient(v, tag, 0)) for v in row] for row in zeta.xi]
        )
    values = np.array(samples)  # (stencil, r, k+1)
    block = np.zeros((A.r, k + 1, k + 1))
    for i in range(A.r):
        for b in range(k + 1):
            c = np.polynomial.polynomial.polyfit(offsets, values[:, i, b], 2 * n)
            for a in range(k + 1):
                block[i, a, b] = math.factorial(a) * c[a] / step**a
    return _floats(upsilon(block))


def force_samples(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    times: Sequence[float],
    **kwargs: Any,
) -> List[ForceSample]:
    trajectory = kwargs.pop("trajectory", None) or integrate_base(A, path)
    return [force(A, L, path, float(t), trajectory=trajectory, **kwargs) for t in times]


def momentum_values(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    trajectory: Optional[BaseTrajectory] = None,
) -> Tuple[List[List[Any]], List[List[Any]]]:
    """Ring-generic raw momentum components and the base jet at ``t``."""
    K = L.k - 1
    tag, _, _, zeta = lambda_jets(A, L, path, t, K, trajectory)
    raw = momenta_map(_time_block(zeta, tag, K, K))
    base = [[coefficient(v, tag, 0) for v in row[: K + 1]] for row in zeta.xjet]
    return raw, base


def momentum(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    trajectory: Optional[BaseTrajectory] = None,
) -> MomentumSample:
    """Momentum components ``m^(0..k-1)`` at ``t``."""
    K = L.k - 1
    raw, base = momentum_values(A, L, path, t, trajectory)
    m = np.array([[float(v) for v in row] for row in raw]).reshape(A.r, K + 1)
    return MomentumSample(
        t=t,
        m=m,
        coordinates=momentum_coordinates(m),
        basejet=np.array([[float(v) for v in row] for row in base]).reshape(
            A.m, K + 1
        ),
    )


# --------------------------------------------------------------------------- #
# Variations and identities
# --------------------------------------------------------------------------- #


def variation_apply(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    b: VariationGenerator,
    t: float,
    basis: Optional[np.ndarray] = None,
    trajectory: Optional[BaseTrajectory] = None,
) -> np.ndarray:
    """The admissible variation generated by ``b`` at ``t``.

    Solves ``<Psi_e, delta> = <eps_k(Psi_e), j^k b(t)>`` over a covector basis
    (rows of ``basis``, the coordinate coframe by default). The result is in
    flat E^k coordinates ``(x, y1_0, ..., yr_{k-1})``.

    Raises:
        ConsistencyError: if the basis is singular.
    """
    _check_dimensions(A, L, path)
    trajectory = trajectory or integrate_base(A, path)
    k = L.k
    e = path_point(L, path, trajectory, t, 0, new_tag())
    e = EkPoint(
        k,
        [float(scalar_part(v)) for v in e.x],
        [[float(scalar_part(v)) for v in row] for row in e.y],
    )
    n = A.m + A.r * k
    B = np.eye(n) if basis is None else np.asarray(basis, dtype=float)
    if B.shape != (n, n):
        raise ContractViolation(f"a covector basis of E^{k} needs shape ({n}, {n})")
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > 1e12:
        raise ConsistencyError("covector basis is singular")
    jb = generator_jet(b, t, k)
    rhs = np.empty(n)
    for row_index, row in enumerate(B):
        dy = [[row[A.m + i * k + a] for a in range(k)] for i in range(A.r)]
        psi = EkCovector(base=e, dx=list(row[: A.m]), dy=dy)
        rhs[row_index] = float(pairing_Tk(eps_k(A, psi).xi, jb))
    return np.linalg.solve(B, rhs)


def generator_jet(b: VariationGenerator, t: float, order: int) -> np.ndarray:
    """Fiber components ``b^(0..order)(t)``, shape ``(r, order + 1)``."""
    tag = new_tag()
    return np.array(
        [[float(c) for c in j.coeffs] for j in b.jets(t, order, tag)]
    ).reshape(len(b), order + 1)


def variational_identity_residual(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    b: VariationGenerator,
    t: float,
    trajectory: Optional[BaseTrajectory] = None,
) -> float:
    """``|<dL, delta_b> - <F, b> - d/dt <M, j^{k-1} b>|`` at ``t``."""
    trajectory = trajectory or integrate_base(A, path)
    k = L.k
    tag, e, psi, zeta = lambda_jets(A, L, path, t, k, trajectory)
    dL = np.array([float(coefficient(v, tag, 0)) for v in psi.components()])
    delta = variation_apply(A, L, path, b, t, trajectory=trajectory)
    lhs = float(dL @ delta)

    block = _time_block(zeta, tag, k, k)
    F = _floats(upsilon(block))
    jb = generator_jet(b, t, k)
    rhs = float(F @ jb[:, 0])

    dtag = new_tag()
    moving = [
        [
            [Jet((float(blk[a][c]), float(blk[a + 1][c])), dtag) for c in range(k)]
            for a in range(k)
        ]
        for blk in block
    ]
    bj = [[Jet((row[a], row[a + 1]), dtag) for a in range(k)] for row in jb]
    rhs += float(coefficient(pairing_momentum(momenta_map(moving), bj), dtag, 1))
    return abs(lhs - rhs)


def action(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    trajectory: Optional[BaseTrajectory] = None,
) -> float:
    """``S_L`` by composite Simpson quadrature at the path resolution."""
    _check_dimensions(A, L, path)
    trajectory = trajectory or integrate_base(A, path)
    n = path.steps + (path.steps % 2)
    ts = np.linspace(path.t0, path.t1, n + 1)
    values = np.empty(n + 1)
    for s, t in enumerate(ts):
        tag = new_tag()
        e = path_point(L, path, trajectory, float(t), 0, tag)
        values[s] = float(coefficient(L.value(e), tag, 0))
    h = (path.t1 - path.t0) / n
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3 * (weights @ values))


def transversality_check(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    bc: BoundaryCondition,
    tol: float = 1e-8,
    trajectory: Optional[BaseTrajectory] = None,
) -> TransversalityReport:
    """Endpoint conditions on the momentum for the given boundary class."""
    if bc.kind == "fixed":
        return TransversalityReport(
            boundary="fixed", residuals=[], tol=tol, passed=True
        )
    trajectory = trajectory or integrate_base(A, path)
    M0 = momentum(A, L, path, path.t0, trajectory)
    M1 = momentum(A, L, path, path.t1, trajectory)
    if bc.kind == "free":
        residuals = [
            float(np.max(np.abs(M0.m), initial=0.0)),
            float(np.max(np.abs(M1.m), initial=0.0)),
        ]
    else:
        residuals = []
        for v0, v1 in bc.pairs:
            v0 = np.asarray(v0, dtype=float).reshape(A.r, L.k)
            v1 = np.asarray(v1, dtype=float).reshape(A.r, L.k)
            residuals.append(
                abs(
                    float(pairing_momentum(M1.m, v1))
                    - float(pairing_momentum(M0.m, v0))
                )
            )
    return TransversalityReport(
        boundary=bc.kind,
        residuals=residuals,
        tol=tol,
        passed=all(r <= tol for r in residuals),
        start=M0.m.tolist(),
        end=M1.m.tolist(),
    )


def gauge_residual(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    shift: float = 1.0,
) -> ResidualReport:
    """Adding a constant to L must leave force and momentum unchanged."""
    shifted_L = Lagrangian(L.k, ex.BinOp("+", L.expr, ex.Num(shift)), L.m, L.r)
    trajectory = integrate_base(A, path)
    dF = force(A, L, path, t, trajectory=trajectory).F - force(
        A, shifted_L, path, t, trajectory=trajectory
    ).F
    dM = (
        momentum(A, L, path, t, trajectory).m
        - momentum(A, shifted_L, path, t, trajectory).m
    )
    worst = float(max(np.max(np.abs(dF), initial=0.0), np.max(np.abs(dM), initial=0.0)))
    return ResidualReport(name="gauge", residual=worst, tol=0.0, passed=worst == 0.0)
