"""Randomized identity suites behind ``higherlag verify``.

Every suite draws its instances from its own ``numpy.random.Generator``
seeded by ``(seed, suite index)``, so a run is reproducible suite by suite.
Suites return :class:`SuiteResult` rows; they do not raise on failure.
"""

from __future__ import annotations

import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import presets
from .algebroid import (
    AlgebroidStructure,
    TEVector,
    TStarEVector,
    anchor_flip_residual,
    check_axioms,
    epsilon_apply,
    is_second_order,
    kappa_apply,
)
from .config import DEFAULTS, NumericDefaults
from .errors import SchemaError
from .expr import base_names, fiber_names
from .mechanics import (
    AdmissiblePath,
    ExprCurve,
    Lagrangian,
    force,
    gauge_residual,
    generator_jet,
    integrate_base,
    momentum,
    variation_apply,
    variational_identity_residual,
)
from .oracles import lie_eps_k_closed_form, oracle_el, oracle_momentum
from .problem import ProblemFile
from .prolong import (
    EkCovector,
    EkPoint,
    IteratedTangentElement,
    P_k_project,
    SemiHolonomicBlock,
    binom_identity_check,
    eps_k,
    green_identity_check,
    holonomic_inclusion,
    pairing_iterated,
    pairing_Tk,
)
from .reports import SuiteResult, VerifyReport

logger = logging.getLogger(__name__)

SuiteFn = Callable[[np.random.Generator, NumericDefaults, int], SuiteResult]

#: Steps used for base integration inside suites; both sides of every
#: comparison share the trajectory.
SUITE_STEPS = 200

SAMPLE_TIMES = np.linspace(0.0, 1.0, 11)


class SuiteRegistry:
    """Ordered name -> (suite, default case count)."""

    def __init__(self) -> None:
        self._suites: Dict[str, Tuple[SuiteFn, int]] = {}

    def suite(self, name: str, cases: int):
        def deco(f: SuiteFn) -> SuiteFn:
            self._suites[name] = (f, cases)
            return f

        return deco

    def names(self) -> List[str]:
        return list(self._suites)

    def run(
        self,
        seed: int = 0,
        names: Optional[Iterable[str]] = None,
        settings: NumericDefaults = DEFAULTS,
        case_scale: float = 1.0,
    ) -> VerifyReport:
        selected = self.names() if names is None else list(names)
        unknown = [n for n in selected if n not in self._suites]
        if unknown:
            raise SchemaError(f"unknown suites: {', '.join(unknown)}")
        report = VerifyReport(seed=seed)
        for index, name in enumerate(self.names()):
            if name not in selected:
                continue
            fn, cases = self._suites[name]
            rng = np.random.default_rng([seed, index])
            n = max(1, int(round(cases * case_scale)))
            result = fn(rng, settings, n)
            logger.info(
                "suite %s: %d cases, max residual %.3e (tol %.1e) %s",
                name,
                result.cases,
                result.max_residual,
                result.tol,
                "ok" if result.passed else "FAILED",
            )
            report.suites.append(result)
        return report


DEFAULT_SUITES = SuiteRegistry()


def run_suites(
    seed: int = 0,
    names: Optional[Iterable[str]] = None,
    settings: NumericDefaults = DEFAULTS,
    case_scale: float = 1.0,
) -> VerifyReport:
    return DEFAULT_SUITES.run(seed, names, settings, case_scale)


def _result(
    name: str, residuals: Sequence[float], tol: float, detail: str = ""
) -> SuiteResult:
    worst = float(max(residuals, default=0.0))
    return SuiteResult(
        name=name,
        cases=len(residuals),
        max_residual=worst,
        tol=tol,
        passed=bool(np.isfinite(worst) and worst <= tol),
        detail=detail,
    )


def _deviation(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b), initial=0.0))


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    """Deviation scaled by max(1, |a|), for comparisons of unbounded size."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


# --------------------------------------------------------------------------- #
# Random instances
# --------------------------------------------------------------------------- #


def random_polynomial(
    rng: np.random.Generator, degree: int, var: str = "t", scale: float = 1.0
) -> str:
    """A polynomial source string with normally distributed coefficients."""
    terms = []
    for n, c in enumerate(scale * rng.standard_normal(degree + 1)):
        terms.append(f"({float(c)!r})" + "".join(f"*{var}" for _ in range(n)))
    return " + ".join(terms)


def random_lagrangian(
    rng: np.random.Generator, k: int, m: int, r: int, cubic: bool = True
) -> Lagrangian:
    """A quadratic form in all coordinates plus a few cubic terms."""
    names = base_names(m) + fiber_names(r, k)
    terms = []
    for i, a in enumerate(names):
        terms.append(f"{float(0.5 + rng.random())!r}*{a}^2")
        for b in names[i + 1 :]:
            if rng.random() < 0.4:
                terms.append(f"({float(0.3 * rng.standard_normal())!r})*{a}*{b}")
    if cubic:
        for _ in range(2):
            a, b, c = rng.choice(names, size=3)
            terms.append(f"({float(0.2 * rng.standard_normal())!r})*{a}*{b}*{c}")
    return Lagrangian.from_source(" + ".join(terms), k, m, r)


def random_path(
    rng: np.random.Generator, A: AlgebroidStructure, degree: int = 3
) -> AdmissiblePath:
    y = [random_polynomial(rng, degree, scale=0.5) for _ in range(A.r)]
    x0 = list(0.5 * rng.standard_normal(A.m))
    return AdmissiblePath.from_sources(y, x0, (0.0, 1.0), steps=SUITE_STEPS)


def random_point(rng: np.random.Generator, A: AlgebroidStructure, k: int) -> EkPoint:
    x = list(rng.uniform(-1.0, 1.0, A.m))
    y = rng.standard_normal((A.r, k)).tolist()
    return EkPoint(k, x, y)


def random_covector(rng: np.random.Generator, e: EkPoint) -> EkCovector:
    return EkCovector(
        base=e,
        dx=list(rng.standard_normal(e.m)),
        dy=rng.standard_normal((e.r, e.k)).tolist(),
    )


def _lie_structures() -> List[AlgebroidStructure]:
    return [presets.build("so3-like"), presets.build("heis3-like")]


def _general_structures() -> List[AlgebroidStructure]:
    return [presets.build("plane-r3"), presets.build("plane-r2")]


# --------------------------------------------------------------------------- #
# Suites
# --------------------------------------------------------------------------- #


@DEFAULT_SUITES.suite("binomials", cases=12)
def binomials(rng, settings, cases) -> SuiteResult:
    failures = []
    checked = 0
    for k in range(cases + 1):
        report = binom_identity_check(k)
        checked += report.checked
        failures.extend(report.failures)
    return SuiteResult(
        name="binomials",
        cases=checked,
        max_residual=float(len(failures)),
        tol=0.0,
        passed=not failures,
        detail=f"k <= {cases}, exact integers",
    )


@DEFAULT_SUITES.suite("green", cases=200)
def green(rng, settings, cases) -> SuiteResult:
    residuals = []
    for k in range(1, 5):
        for r in (1, 2, 3):
            for _ in range(cases):
                block = SemiHolonomicBlock(
                    k,
                    rng.standard_normal((2, 2 * k + 1)),
                    rng.standard_normal((r, k + 1, k + 1)),
                )
                v = rng.standard_normal((r, k + 1))
                residuals.append(green_identity_check(block, v))
    return _result("green", residuals, settings.identity_tol, "k = 1..4, r = 1..3")


@DEFAULT_SUITES.suite("p_k", cases=200)
def p_k(rng, settings, cases) -> SuiteResult:
    residuals = []
    for n in range(cases):
        k = 1 + n % 4
        r = 1 + n % 3
        base = holonomic_inclusion(rng.standard_normal((2, k + 1)), k)
        X = IteratedTangentElement(k, base, rng.standard_normal((2,) * k + (r,)))
        phi = rng.standard_normal((r, k + 1))
        lhs = float(pairing_Tk(phi, P_k_project(X)))
        rhs = pairing_iterated(holonomic_inclusion(phi, k), X.fiber, k)
        residuals.append(abs(lhs - rhs))
    return _result("p_k", residuals, 1e-12, "k <= 4")


@DEFAULT_SUITES.suite("lie_closed_form", cases=100)
def lie_closed_form(rng, settings, cases) -> SuiteResult:
    residuals = []
    for A in _lie_structures():
        for k in range(1, 5):
            for _ in range(cases):
                psi = random_covector(rng, random_point(rng, A, k))
                pipeline = np.array(eps_k(A, psi).xi, dtype=float)
                residuals.append(
                    _deviation(pipeline, lie_eps_k_closed_form(A, psi))
                )
    return _result("lie_closed_form", residuals, 1e-10, "so3-like, heis3-like")


@DEFAULT_SUITES.suite("extension", cases=20)
def extension(rng, settings, cases) -> SuiteResult:
    residuals = []
    for A in _general_structures():
        for k in (2, 3):
            for _ in range(3):
                psi = random_covector(rng, random_point(rng, A, k))
                ref = np.array(eps_k(A, psi).xi, dtype=float)
                for _ in range(cases):
                    ext = rng.standard_normal((A.m, k - 1)).tolist()
                    out = np.array(eps_k(A, psi, extension=ext).xi, dtype=float)
                    residuals.append(_deviation(ref, out))
    return _result("extension", residuals, 1e-9, "plane-r3, plane-r2; k = 2, 3")


def _oracle_cases() -> List[Tuple[str, AlgebroidStructure, int]]:
    tangent1 = presets.build("tangent", n=1)
    tangent2 = presets.build("tangent", n=2)
    plane = presets.build("plane-r3")
    cases = [("tangent", tangent1, k) for k in (1, 2, 3)]
    cases += [("tangent", tangent2, 2)]
    cases += [("algebroid_k1", plane, 1), ("algebroid_k2", plane, 2)]
    cases += [("euler_poincare", A, k) for A in _lie_structures() for k in (1, 2, 3)]
    hamel = presets.product(tangent1, presets.build("so3-like"))
    cases += [("hamel_k2", hamel, 2)]
    return cases


@DEFAULT_SUITES.suite("oracle", cases=2)
def oracle(rng, settings, cases) -> SuiteResult:
    residuals = []
    for family, A, k in _oracle_cases():
        for _ in range(cases):
            L = random_lagrangian(rng, k, A.m, A.r)
            path = random_path(rng, A)
            traj = integrate_base(A, path)
            worst = 0.0
            for t in SAMPLE_TIMES:
                F = force(A, L, path, float(t), trajectory=traj).F
                G = oracle_el(A, L, path, float(t), family, trajectory=traj)
                worst = max(worst, _deviation(F, G))
            residuals.append(worst)
    return _result("oracle", residuals, 1e-7, "sup over 11 times per instance")


@DEFAULT_SUITES.suite("momentum_oracle", cases=3)
def momentum_oracle(rng, settings, cases) -> SuiteResult:
    residuals = []
    A = presets.build("tangent", n=1)
    for k in (2, 3):
        for _ in range(cases):
            L = random_lagrangian(rng, k, A.m, A.r)
            path = random_path(rng, A)
            traj = integrate_base(A, path)
            for t in SAMPLE_TIMES[::2]:
                M = momentum(A, L, path, float(t), traj).m
                G = oracle_momentum(A, L, path, float(t), "tangent", traj)
                residuals.append(_deviation(M, G))
    return _result("momentum_oracle", residuals, 1e-7, "tangent family, k = 2, 3")


@DEFAULT_SUITES.suite("variational", cases=50)
def variational(rng, settings, cases) -> SuiteResult:
    residuals = []
    instances = [(A, k) for A in _general_structures() for k in (1, 2)]
    instances += [(presets.build("so3-like"), k) for k in (1, 2, 3)]
    for A, k in instances:
        for _ in range(cases):
            L = random_lagrangian(rng, k, A.m, A.r)
            path = random_path(rng, A)
            b = ExprCurve.from_sources(
                [random_polynomial(rng, 3, scale=0.5) for _ in range(A.r)]
            )
            traj = integrate_base(A, path)
            t = float(rng.uniform(0.1, 0.9))
            res = variational_identity_residual(A, L, path, b, t, traj)
            residuals.append(res)
    return _result("variational", residuals, 1e-7, "pointwise identity")


@DEFAULT_SUITES.suite("first_order", cases=100)
def first_order(rng, settings, cases) -> SuiteResult:
    """The k=1 pipeline against the direct relation and its dual.

    The epsilon comparisons are absolute. Force, momentum and variation are
    scaled by max(1, |pipeline value|) and the absolute worst case goes into
    the detail line.
    """
    residuals = []
    absolute = []
    A = presets.build("plane-r3")
    for _ in range(cases):
        e = random_point(rng, A, 1)
        psi = random_covector(rng, e)
        zeta = np.array(eps_k(A, psi).xi, dtype=float)
        w = TStarEVector(
            x=np.array(e.x),
            y=np.array(e.y)[:, 0],
            p=np.array(psi.dx),
            piv=np.array(psi.dy)[:, 0],
        )
        direct = epsilon_apply(A, w)
        residuals.append(_deviation(zeta[:, 0], direct.xi))
        residuals.append(_deviation(zeta[:, 1], direct.xidot))
    for _ in range(cases):
        L = random_lagrangian(rng, 1, A.m, A.r)
        path = random_path(rng, A)
        traj = integrate_base(A, path)
        b = ExprCurve.from_sources(
            [random_polynomial(rng, 2, scale=0.5) for _ in range(A.r)]
        )
        t = float(rng.uniform(0.0, 1.0))
        x = np.array(traj.value(t), dtype=float)
        y = np.array(path.curve.values(t), dtype=float)
        jb = generator_jet(b, t, 1)
        X = TEVector(x=x, y=jb[:, 0], xdot=A.rho_matrix(x) @ y, ydot=jb[:, 1])
        Y = kappa_apply(A, X, y)
        delta = variation_apply(A, L, path, b, t, trajectory=traj)
        pairs = [(delta, np.concatenate([Y.xdot, Y.ydot]))]
        M = momentum(A, L, path, t, traj).m[:, 0]
        e = EkPoint(1, list(x), [[v] for v in y])
        pairs.append((M, np.array(L.differential(e).dy)[:, 0]))
        F = force(A, L, path, t, trajectory=traj).F
        G = oracle_el(A, L, path, t, "algebroid_k1", trajectory=traj)
        pairs.append((F, G))
        for got, want in pairs:
            residuals.append(_relative(got, want))
            absolute.append(_deviation(got, want))
    detail = f"plane-r3, max absolute {max(absolute, default=0.0):.3e}"
    return _result("first_order", residuals, 1e-12, detail)


@DEFAULT_SUITES.suite("fd", cases=3)
def finite_differences(rng, settings, cases) -> SuiteResult:
    residuals = []
    tangent = presets.build("tangent", n=1)
    L = Lagrangian.from_source("0.5*y1_1^2", 2, 1, 1)
    path = AdmissiblePath.from_sources(["4*t^3"], [0.0], (0.0, 1.0))
    traj = integrate_base(tangent, path)
    instances = [(tangent, L, path, traj)]
    A = presets.build("plane-r3")
    for _ in range(cases):
        p = random_path(rng, A)
        instances.append(
            (A, random_lagrangian(rng, 1, A.m, A.r), p, integrate_base(A, p))
        )
    for A, L, p, tr in instances:
        for t in (0.25, 0.5, 0.75):
            F = force(A, L, p, t, trajectory=tr).F
            G = force(A, L, p, t, method="fd", trajectory=tr, settings=settings).F
            residuals.append(_relative(F, G))
    return _result("fd", residuals, settings.fd_tol, "diagnostic stencil")


@DEFAULT_SUITES.suite("gauge", cases=4)
def gauge(rng, settings, cases) -> SuiteResult:
    residuals = []
    for A, k in ((presets.build("plane-r3"), 2), (presets.build("so3-like"), 2)):
        for _ in range(cases):
            L = random_lagrangian(rng, k, A.m, A.r)
            path = random_path(rng, A)
            report = gauge_residual(A, L, path, float(rng.uniform(0.0, 1.0)))
            residuals.append(report.residual)
    return _result("gauge", residuals, 0.0, "constant shift of L")


@DEFAULT_SUITES.suite("anchor_flip", cases=50)
def anchor_flip(rng, settings, cases) -> SuiteResult:
    residuals = []
    structures = _general_structures() + [presets.build("rotation-action")]
    for A in structures:
        for _ in range(cases):
            x = rng.uniform(-1.0, 1.0, A.m)
            u = rng.standard_normal(A.r)
            yt = rng.standard_normal(A.r)
            X = TEVector(
                x=x, y=u, xdot=A.rho_matrix(x) @ yt, ydot=rng.standard_normal(A.r)
            )
            residuals.append(anchor_flip_residual(A, X, yt))
            Z = TEVector(x=x, y=yt, xdot=A.rho_matrix(x) @ yt, ydot=u)
            residuals.append(0.0 if is_second_order(A, Z) else 1.0)
    return _result("anchor_flip", residuals, 1e-9, "compatible structures")


@DEFAULT_SUITES.suite("presets", cases=64)
def shipped_presets(rng, settings, cases) -> SuiteResult:
    residuals = []
    failed = []
    for name in presets.DEFAULT_PRESETS.names():
        if name in ("broken", "product"):
            continue
        report = check_axioms(presets.build(name), n_samples=cases)
        residuals.append(max(report.max_skew, report.max_compat) / report.scale)
        if not report.passed:
            failed.append(name)
    detail = "failed: " + ", ".join(failed) if failed else "all shipped structures"
    return _result("presets", residuals, settings.axiom_tol, detail)


# --------------------------------------------------------------------------- #
# Problem-file verification
# --------------------------------------------------------------------------- #


def verify_problem(
    problem: ProblemFile, seed: int = 0, generators: int = 3
) -> VerifyReport:
    """Axioms of the file's structure and, given a path, the pointwise checks."""
    settings = problem.settings
    A = problem.structure
    report = VerifyReport(seed=seed)
    axioms = check_axioms(A, tol=settings.axiom_tol, n_samples=settings.axiom_samples)
    report.suites.append(
        _result(
            "axioms",
            [max(axioms.max_skew, axioms.max_compat) / axioms.scale],
            settings.axiom_tol,
            A.label or "structure",
        )
    )
    if problem.lagrangian is None or problem.path is None:
        return report

    L, path = problem.lagrangian, problem.path
    rng = np.random.default_rng(seed)
    traj = integrate_base(A, path)
    times = problem.sample_times()
    inner = times[1:-1] if len(times) > 2 else times

    fd = []
    for t in inner:
        F = force(A, L, path, float(t), trajectory=traj).F
        G = force(
            A, L, path, float(t), method="fd", trajectory=traj, settings=settings
        ).F
        fd.append(_relative(F, G))
    report.suites.append(_result("fd", fd, settings.fd_tol, "diagnostic stencil"))

    gauge_report = gauge_residual(A, L, path, float(times[len(times) // 2]))
    report.suites.append(
        _result("gauge", [gauge_report.residual], 0.0, "constant shift of L")
    )

    identity = []
    for _ in range(generators):
        b = ExprCurve.from_sources(
            [random_polynomial(rng, 3, scale=0.5) for _ in range(A.r)]
        )
        for t in inner:
            identity.append(
                variational_identity_residual(A, L, path, b, float(t), traj)
            )
    report.suites.append(
        _result("variational", identity, 1e-7, f"{generators} random generators")
    )
    return report
