"""Almost Lie algebroids in local coordinates.

A structure is given by its anchor coefficients ``rho[a][i]`` (an m x r matrix
of expressions in ``x1..xm``) and bracket coefficients ``c[k][i][j]`` for
``[e_i, e_j] = c^k_{ij} e_k``. Everything here is evaluated through the
expression evaluator, so the same functions accept float points and jet
points.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from . import expr as ex
from .config import DEFAULTS
from .errors import (
    ContractViolation,
    DomainError,
    NotInRelation,
    NumericError,
    SchemaError,
)
from .jetcalc import Jet, coefficient, new_tag, seeded, unit
from .reports import AxiomReport, ResidualReport

logger = logging.getLogger(__name__)

ExprLike = Any


def _total(terms) -> Any:
    acc = None
    for t in terms:
        acc = t if acc is None else acc + t
    return 0.0 if acc is None else acc


def _max_abs(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if np.size(values) else 0.0


# --------------------------------------------------------------------------- #
# Sample points
# --------------------------------------------------------------------------- #

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _radical_inverse(n: int, base: int) -> float:
    inv, f = 0.0, 1.0 / base
    while n:
        n, digit = divmod(n, base)
        inv += digit * f
        f /= base
    return inv


def halton_points(
    m: int, n: int, box: Tuple[float, float] = DEFAULTS.axiom_box
) -> np.ndarray:
    """``n`` quasi-random points of a Halton sequence scaled into ``box^m``."""
    if m > len(_PRIMES):
        raise ContractViolation(f"at most {len(_PRIMES)} base dimensions are sampled")
    lo, hi = box
    pts = np.empty((n, m))
    for s in range(n):
        for a in range(m):
            pts[s, a] = lo + (hi - lo) * _radical_inverse(s + 1, _PRIMES[a])
    return pts


# --------------------------------------------------------------------------- #
# Vector types
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class TEVector:
    """A tangent vector to E in adapted coordinates (x, y, xdot, ydot)."""

    x: np.ndarray
    y: np.ndarray
    xdot: np.ndarray
    ydot: np.ndarray

    def allclose(self, other: "TEVector", tol: float = 1e-12) -> bool:
        return all(
            np.allclose(a, b, rtol=0.0, atol=tol)
            for a, b in zip(
                (self.x, self.y, self.xdot, self.ydot),
                (other.x, other.y, other.xdot, other.ydot),
            )
        )


@dataclass(frozen=True)
class TStarEVector:
    """A covector on E: base (x, y) and components (p, piv)."""

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    piv: np.ndarray


@dataclass(frozen=True)
class TEStarVector:
    """A tangent vector to E*: base (x, xi) and velocity (xdot, xidot).

    Components may be floats or jets.
    """

    x: Sequence[Any]
    xi: Sequence[Any]
    xdot: Sequence[Any]
    xidot: Sequence[Any]


def _vec(values: Sequence[Any], n: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ContractViolation(f"{what} must have {n} entries, got {arr.shape[0]}")
    return arr


# --------------------------------------------------------------------------- #
# The structure
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class AlgebroidStructure:
    m: int
    r: int
    rho: Tuple[Tuple[ex.Expr, ...], ...]
    c: Tuple[Tuple[Tuple[ex.Expr, ...], ...], ...]
    label: str = ""

    _rho_nz: Tuple[Tuple[int, int], ...] = field(init=False, repr=False, compare=False)
    _c_nz: Tuple[Tuple[int, int, int], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.m < 0 or self.r < 0:
            raise SchemaError("dimensions must be non-negative")
        if len(self.rho) != self.m or any(len(row) != self.r for row in self.rho):
            raise SchemaError(f"rho must be a {self.m}x{self.r} matrix")
        if len(self.c) != self.r or any(
            len(mat) != self.r or any(len(row) != self.r for row in mat)
            for mat in self.c
        ):
            raise SchemaError(f"c must be an {self.r}x{self.r}x{self.r} array")
        names = ex.base_names(self.m)
        for a in range(self.m):
            for i in range(self.r):
                ex.require_names(self.rho[a][i], names, f"rho[{a}][{i}]")
        for k in range(self.r):
            for i in range(self.r):
                for j in range(self.r):
                    ex.require_names(self.c[k][i][j], names, f"c[{k}][{i}][{j}]")
        rho_nz = tuple(
            (a, i)
            for a in range(self.m)
            for i in range(self.r)
            if not ex.is_zero(self.rho[a][i])
        )
        c_nz = tuple(
            (k, i, j)
            for k in range(self.r)
            for i in range(self.r)
            for j in range(self.r)
            if not ex.is_zero(self.c[k][i][j])
        )
        object.__setattr__(self, "_rho_nz", rho_nz)
        object.__setattr__(self, "_c_nz", c_nz)

    # -- loading ------------------------------------------------------------

    @classmethod
    def from_sources(
        cls,
        m: int,
        r: int,
        rho: Sequence[Sequence[ExprLike]],
        c: Sequence[Sequence[Sequence[ExprLike]]],
        label: str = "",
        *,
        skew_tol: float = 1e-12,
    ) -> "AlgebroidStructure":
        """Parse expression sources and enforce skew-symmetry of ``c``.

        A bracket that is not skew at the sampled points is replaced by its
        antisymmetric part with a :class:`UserWarning`.
        """
        try:
            rho_e = tuple(tuple(ex.as_expr(v) for v in row) for row in rho)
            c_e = tuple(
                tuple(tuple(ex.as_expr(v) for v in row) for row in mat) for mat in c
            )
        except TypeError as e:
            raise SchemaError(f"malformed structure arrays: {e}") from e
        structure = cls(int(m), int(r), rho_e, c_e, label)
        try:
            defect = structure.skew_defect(halton_points(structure.m, 8))
        except NumericError:
            # Left to check_axioms, which reports where evaluation fails.
            defect = 0.0
        if defect > skew_tol:
            warnings.warn(
                f"bracket coefficients of {label or 'structure'} are not skew; "
                "using their antisymmetric part",
                UserWarning,
                stacklevel=2,
            )
            structure = structure.antisymmetrized()
        return structure

    def antisymmetrized(self) -> "AlgebroidStructure":
        half = ex.Num(0.5)

        def entry(k: int, i: int, j: int) -> ex.Expr:
            if i == j:
                return ex.ZERO
            a, b = self.c[k][i][j], self.c[k][j][i]
            if ex.is_zero(a) and ex.is_zero(b):
                return ex.ZERO
            return ex.BinOp("*", half, ex.BinOp("-", a, b))

        r = self.r
        c = tuple(
            tuple(tuple(entry(k, i, j) for j in range(r)) for i in range(r))
            for k in range(r)
        )
        return AlgebroidStructure(self.m, self.r, self.rho, c, self.label)

    # -- evaluation (ring-generic) -------------------------------------------

    def env(self, x: Sequence[Any]) -> dict:
        if len(x) != self.m:
            raise ContractViolation(f"expected a point in R^{self.m}, got {len(x)}")
        return {f"x{a + 1}": v for a, v in enumerate(x)}

    def rho_at(self, x: Sequence[Any]) -> List[List[Any]]:
        env = self.env(x)
        out: List[List[Any]] = [[0.0] * self.r for _ in range(self.m)]
        for a, i in self._rho_nz:
            out[a][i] = self.rho[a][i].evaluate(env)
        return out

    def c_at(self, x: Sequence[Any]) -> List[List[List[Any]]]:
        env = self.env(x)
        r = self.r
        out = [[[0.0] * r for _ in range(r)] for _ in range(r)]
        for k, i, j in self._c_nz:
            out[k][i][j] = self.c[k][i][j].evaluate(env)
        return out

    def anchor(self, x: Sequence[Any], y: Sequence[Any]) -> List[Any]:
        """``rho(x) y`` as a list of m ring elements."""
        rho = self.rho_at(x)
        terms: List[list] = [[] for _ in range(self.m)]
        for a, i in self._rho_nz:
            terms[a].append(rho[a][i] * y[i])
        return [_total(t) for t in terms]

    def bracket_values(
        self, x: Sequence[Any], u: Sequence[Any], v: Sequence[Any]
    ) -> List[Any]:
        """``c^k_{ij}(x) u^i v^j`` for each k."""
        c = self.c_at(x)
        terms: List[list] = [[] for _ in range(self.r)]
        for k, i, j in self._c_nz:
            terms[k].append(c[k][i][j] * (u[i] * v[j]))
        return [_total(t) for t in terms]

    def coadjoint(
        self, x: Sequence[Any], y: Sequence[Any], xi: Sequence[Any]
    ) -> List[Any]:
        """``c^k_{ij}(x) y^i xi_k`` for each j."""
        c = self.c_at(x)
        terms: List[list] = [[] for _ in range(self.r)]
        for k, i, j in self._c_nz:
            terms[j].append(c[k][i][j] * (y[i] * xi[k]))
        return [_total(t) for t in terms]

    def anchor_transpose(self, x: Sequence[Any], p: Sequence[Any]) -> List[Any]:
        """``rho^a_j(x) p_a`` for each j."""
        rho = self.rho_at(x)
        terms: List[list] = [[] for _ in range(self.r)]
        for a, j in self._rho_nz:
            terms[j].append(rho[a][j] * p[a])
        return [_total(t) for t in terms]

    def rho_matrix(self, x: Sequence[float]) -> np.ndarray:
        return np.array(self.rho_at(x), dtype=float).reshape(self.m, self.r)

    def c_array(self, x: Sequence[float]) -> np.ndarray:
        return np.array(self.c_at(x), dtype=float).reshape(self.r, self.r, self.r)

    def rho_derivatives(self, x: Sequence[float]) -> np.ndarray:
        """``D[a, i, b] = d rho^a_i / d x^b`` from one jet seed per coordinate."""
        D = np.zeros((self.m, self.r, self.m))
        for b in range(self.m):
            tag = new_tag()
            rho = self.rho_at(seeded([float(v) for v in x], unit(self.m, b), tag))
            for a, i in self._rho_nz:
                D[a, i, b] = coefficient(rho[a][i], tag, 1)
        return D

    def skew_defect(self, points: np.ndarray) -> float:
        worst = 0.0
        for x in points if self.m else [np.zeros(0)]:
            c = self.c_array(x)
            worst = max(worst, _max_abs(c + np.transpose(c, (0, 2, 1))))
        return worst

    def compatibility_residual(self, x: Sequence[float]) -> Tuple[np.ndarray, float]:
        """Residual of the anchor-bracket compatibility axiom at ``x``.

        Entry ``[a, j, k]`` is
        ``d_b rho^a_k rho^b_j - d_b rho^a_j rho^b_k - rho^a_i c^i_jk``.

        Returns the residual array indexed ``[a, j, k]`` and the magnitude of
        the largest term entering it.
        """
        R = self.rho_matrix(x)
        C = self.c_array(x)
        D = self.rho_derivatives(x)
        first = np.einsum("akb,bj->ajk", D, R)
        second = np.einsum("ajb,bk->ajk", D, R)
        third = np.einsum("ai,ijk->ajk", R, C)
        scale = max(_max_abs(first), _max_abs(second), _max_abs(third))
        return first - second - third, scale


# --------------------------------------------------------------------------- #
# Axioms
# --------------------------------------------------------------------------- #


def check_axioms(
    A: AlgebroidStructure,
    samples: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    *,
    n_samples: Optional[int] = None,
    box: Optional[Tuple[float, float]] = None,
) -> AxiomReport:
    """Check skew-symmetry and anchor-bracket compatibility at sample points.

    Args:
        A: The structure.
        samples: Base points, shape ``(n, m)``. Defaults to a Halton sequence
            of ``n_samples`` points in ``box``.
        tol: Relative tolerance; a residual passes if it is at most
            ``tol * max(1, scale)`` where ``scale`` is the largest term seen.

    Returns:
        An :class:`AxiomReport`. Structures are certified at the samples only.
    """
    tol = DEFAULTS.axiom_tol if tol is None else tol
    if samples is None:
        n = DEFAULTS.axiom_samples if n_samples is None else n_samples
        samples = halton_points(A.m, n, box or DEFAULTS.axiom_box)
    samples = np.asarray(samples, dtype=float)
    if A.m:
        samples = samples.reshape(-1, A.m)
    if samples.ndim != 2 or samples.shape[0] == 0:
        samples = np.zeros((1, A.m))

    max_skew = 0.0
    max_compat = 0.0
    scale = 1.0
    worst: List[float] = list(samples[0])
    for x in samples:
        c = A.c_array(x)
        max_skew = max(max_skew, _max_abs(c + np.transpose(c, (0, 2, 1))))
        residual, s = A.compatibility_residual(x)
        scale = max(scale, s)
        value = _max_abs(residual)
        if value > max_compat:
            max_compat = value
            worst = list(x)
    passed = max_skew <= tol * scale and max_compat <= tol * scale
    logger.info(
        "axioms %s: skew %.3e compat %.3e over %d samples",
        A.label or "<structure>",
        max_skew,
        max_compat,
        len(samples),
    )
    return AxiomReport(
        label=A.label,
        samples=len(samples),
        max_skew=max_skew,
        max_compat=max_compat,
        tol=tol,
        scale=scale,
        passed=passed,
        worst_point=[float(v) for v in worst],
    )


# --------------------------------------------------------------------------- #
# Brackets, kappa and epsilon
# --------------------------------------------------------------------------- #


def _section_values(A: AlgebroidStructure, exprs: Sequence[ExprLike], x):
    parsed = [ex.as_expr(e) for e in exprs]
    if len(parsed) != A.r:
        raise ContractViolation(f"a section needs {A.r} components")
    names = ex.base_names(A.m)
    for e in parsed:
        ex.require_names(e, names, "section")
    values = np.array([e.evaluate(A.env(x)) for e in parsed], dtype=float)
    grads = np.zeros((A.r, A.m))
    for b in range(A.m):
        tag = new_tag()
        env = A.env(seeded([float(v) for v in x], unit(A.m, b), tag))
        for k, e in enumerate(parsed):
            grads[k, b] = coefficient(e.evaluate(env), tag, 1)
    return values, grads


def bracket_sections(
    A: AlgebroidStructure,
    X: Sequence[ExprLike],
    Y: Sequence[ExprLike],
    x: Sequence[float],
) -> np.ndarray:
    """The bracket of two sections given by expressions, evaluated at ``x``."""
    x = _vec(x, A.m, "x")
    Xv, dX = _section_values(A, X, x)
    Yv, dY = _section_values(A, Y, x)
    R = A.rho_matrix(x)
    C = A.c_array(x)
    return (
        np.einsum("kij,i,j->k", C, Xv, Yv)
        + np.einsum("ai,i,ka->k", R, Xv, dY)
        - np.einsum("ai,i,ka->k", R, Yv, dX)
    )


def kappa_apply(
    A: AlgebroidStructure,
    X: TEVector,
    ytarget: Sequence[float],
    tol: Optional[float] = None,
) -> TEVector:
    """The vector over ``ytarget`` related to ``X`` by the canonical relation.

    Raises:
        NotInRelation: if ``X.xdot`` differs from ``rho(X.x) ytarget``.
    """
    tol = DEFAULTS.relation_tol if tol is None else tol
    yt = _vec(ytarget, A.r, "ytarget")
    R = A.rho_matrix(X.x)
    expected = R @ yt
    residual = _max_abs(np.asarray(X.xdot) - expected)
    if residual > tol * max(1.0, _max_abs(expected)):
        raise NotInRelation(residual)
    ydot = np.asarray(X.ydot, dtype=float) + np.array(
        A.bracket_values(list(X.x), list(yt), list(X.y)), dtype=float
    ).reshape(A.r)
    return TEVector(
        x=np.array(X.x, dtype=float),
        y=yt,
        xdot=R @ np.asarray(X.y, dtype=float),
        ydot=ydot,
    )


def epsilon_components(
    A: AlgebroidStructure,
    x: Sequence[Any],
    y: Sequence[Any],
    p: Sequence[Any],
    piv: Sequence[Any],
) -> TEStarVector:
    """Ring-generic form of :func:`epsilon_apply`."""
    xdot = A.anchor(x, y)
    coad = A.coadjoint(x, y, piv)
    rt = A.anchor_transpose(x, p)
    xidot = [coad[j] + rt[j] for j in range(A.r)]
    return TEStarVector(x=list(x), xi=list(piv), xdot=xdot, xidot=xidot)


def epsilon_apply(A: AlgebroidStructure, w: TStarEVector) -> TEStarVector:
    """Dual of the canonical relation: ``xi = piv``, ``xdot = rho y``,
    ``xidot_j = c^k_ij y^i piv_k + rho^a_j p_a``."""
    out = epsilon_components(
        A,
        list(_vec(w.x, A.m, "x")),
        list(_vec(w.y, A.r, "y")),
        list(_vec(w.p, A.m, "p")),
        list(_vec(w.piv, A.r, "piv")),
    )
    return TEStarVector(
        x=np.array(out.x, dtype=float).reshape(A.m),
        xi=np.array(out.xi, dtype=float).reshape(A.r),
        xdot=np.array(out.xdot, dtype=float).reshape(A.m),
        xidot=np.array(out.xidot, dtype=float).reshape(A.r),
    )


def pairing_tangent(v: TEStarVector, X: TEVector) -> float:
    """Tangent pairing of TE* with TE over a common base velocity."""
    return float(
        np.dot(np.asarray(v.xi, dtype=float), X.ydot)
        + np.dot(np.asarray(v.xidot, dtype=float), X.y)
    )


def pairing_cotangent(w: TStarEVector, Y: TEVector) -> float:
    """Canonical pairing of T*E with TE."""
    return float(np.dot(w.p, Y.xdot) + np.dot(w.piv, Y.ydot))


def is_second_order(
    A: AlgebroidStructure, Z: TEVector, tol: Optional[float] = None
) -> bool:
    """Whether ``Z`` lies in E^2, i.e. ``Z.xdot = rho(Z.x) Z.y``."""
    tol = DEFAULTS.relation_tol if tol is None else tol
    expected = A.rho_matrix(Z.x) @ np.asarray(Z.y, dtype=float)
    return _max_abs(np.asarray(Z.xdot) - expected) <= tol * max(1.0, _max_abs(expected))


def anchor_flip_residual(
    A: AlgebroidStructure, X: TEVector, ytarget: Sequence[float]
) -> float:
    """Distance between the anchor images of ``X`` and its related vector.

    The tangent map of the anchor sends related pairs to pairs exchanged by
    the canonical flip of TTM; the residual is the sup-norm of the mismatch.
    """
    Y = kappa_apply(A, X, ytarget)
    R = A.rho_matrix(X.x)
    D = A.rho_derivatives(X.x)

    def lift(V: TEVector) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            R @ V.y,
            np.asarray(V.xdot, dtype=float),
            np.einsum("aib,b,i->a", D, V.xdot, V.y) + R @ V.ydot,
        )

    fx, vx, ax = lift(X)
    fy, vy, ay = lift(Y)
    return max(_max_abs(fx - vy), _max_abs(vx - fy), _max_abs(ax - ay))


# --------------------------------------------------------------------------- #
# Base-curve jets
# --------------------------------------------------------------------------- #


def anchor_flow_jet(
    A: AlgebroidStructure,
    x0: Sequence[Any],
    y: Sequence[Jet],
    order: int,
    tag: int,
) -> List[Jet]:
    """Jets of the base curve solving ``xdot = rho(x) y`` through ``x0``.

    ``y`` holds the fiber curve as jets in ``tag`` of order at least
    ``order - 1``. Each fixed-point sweep fixes one more coefficient.
    """
    if A.m == 0:
        return []
    ys = [_padded(v, order, tag) for v in y]
    x = [Jet.constant(v, order, tag) for v in x0]
    for _ in range(order):
        v = A.anchor(x, ys)
        x = [
            Jet((x0[a],) + tuple(coefficient(v[a], tag, s) for s in range(order)), tag)
            for a in range(A.m)
        ]
    return x


def _padded(v: Any, order: int, tag: int) -> Jet:
    return Jet(tuple(coefficient(v, tag, s) for s in range(order + 1)), tag)


# --------------------------------------------------------------------------- #
# Frame-induced structures
# --------------------------------------------------------------------------- #


def frame_structure(
    R: Sequence[Sequence[ExprLike]], x: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """Anchor and bracket of the frame ``X_j = (R^{-1})^s_j d_s`` at ``x``.

    Returns ``(rho, c)`` with ``rho = R^{-1}`` and
    ``c^i_jk = (d_u R^i_s - d_s R^i_u) (R^{-1})^s_j (R^{-1})^u_k``.

    Raises:
        DomainError: if ``R(x)`` is singular.
    """
    m = len(R)
    exprs = [[ex.as_expr(v) for v in row] for row in R]
    names = ex.base_names(m)
    for row in exprs:
        if len(row) != m:
            raise ContractViolation("the frame matrix must be square")
        for e in row:
            ex.require_names(e, names, "frame matrix")
    x = _vec(x, m, "x")
    env = {n: v for n, v in zip(names, x)}
    Rx = np.array([[e.evaluate(env) for e in row] for row in exprs], dtype=float)
    Rx = Rx.reshape(m, m)
    if m and np.linalg.cond(Rx) > 1e12:
        raise DomainError("frame matrix is singular")
    Rinv = np.linalg.inv(Rx) if m else np.zeros((0, 0))
    D = np.zeros((m, m, m))  # D[i, s, u] = d_u R^i_s
    for u in range(m):
        tag = new_tag()
        seeds = dict(zip(names, seeded(x, unit(m, u), tag)))
        for i in range(m):
            for s in range(m):
                D[i, s, u] = coefficient(exprs[i][s].evaluate(seeds), tag, 1)
    curl = D - np.transpose(D, (0, 2, 1))
    c = np.einsum("isu,sj,uk->ijk", curl, Rinv, Rinv)
    return Rinv, c


def check_frame(
    A: AlgebroidStructure,
    R: Sequence[Sequence[ExprLike]],
    samples: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> ResidualReport:
    """Compare a structure with the one induced by the frame matrix ``R``."""
    tol = DEFAULTS.axiom_tol if tol is None else tol
    if A.m != A.r or len(R) != A.m:
        raise ContractViolation("frame comparison needs m == r == size of R")
    if samples is None:
        samples = halton_points(A.m, DEFAULTS.axiom_samples)
    worst = 0.0
    for x in np.asarray(samples, dtype=float).reshape(-1, A.m):
        rho, c = frame_structure(R, x)
        worst = max(
            worst,
            _max_abs(A.rho_matrix(x) - rho),
            _max_abs(A.c_array(x) - c),
        )
    return ResidualReport(
        name=f"frame:{A.label}",
        residual=worst,
        tol=tol,
        passed=worst <= tol,
    )
