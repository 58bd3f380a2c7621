"""Closed-form Euler-Lagrange families, independent of the ``eps_k`` pipeline.

Each family differentiates the partial derivatives of L along the path
directly (jets in time) and assembles the classical local form. They serve as
oracles for the pipeline force; a family refuses structures it does not
describe with :class:`InapplicableFamily`.

The first-order algebroid family returns the conventional expression
``(delta d/dt + c y) dL/dy - rho dL/dx`` multiplied by -1, which is the sign
the pipeline force carries at k=1. The second-order families carry no flip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .algebroid import AlgebroidStructure
from .errors import InapplicableFamily, SchemaError
from .jetcalc import binom, coefficient, new_tag
from .mechanics import (
    AdmissiblePath,
    BaseTrajectory,
    Lagrangian,
    integrate_base,
    path_point,
)
from .prolong import EkCovector

STRUCTURE_TOL = 1e-14

OracleFn = Callable[..., np.ndarray]


# --------------------------------------------------------------------------- #
# Derivatives of dL along the path
# --------------------------------------------------------------------------- #


@dataclass
class PathDerivatives:
    """Time jets of ``dL`` and of the path at one sample time."""

    tag: int
    x: List[float]
    y: np.ndarray
    dx: List[Any]
    dy: List[List[Any]]

    def d(self, v: Any, n: int) -> float:
        """``d^n v / dt^n``."""
        return float(coefficient(v, self.tag, n))

    def dL_dx(self, a: int, n: int = 0) -> float:
        return self.d(self.dx[a], n)

    def dL_dy(self, i: int, alpha: int, n: int = 0) -> float:
        return self.d(self.dy[i][alpha], n)


def path_derivatives(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    order: int,
    trajectory: Optional[BaseTrajectory] = None,
) -> PathDerivatives:
    trajectory = trajectory or integrate_base(A, path)
    tag = new_tag()
    e = path_point(L, path, trajectory, t, order, tag)
    psi = L.differential(e)
    x = [float(coefficient(v, tag, 0)) for v in e.x]
    y = np.array(
        [[float(coefficient(v, tag, 0)) for v in row] for row in e.y]
    ).reshape(A.r, L.k)
    return PathDerivatives(tag, x, y, list(psi.dx), [list(r) for r in psi.dy])


# --------------------------------------------------------------------------- #
# Registry
# --------------------------------------------------------------------------- #


class OracleRegistry:
    """Family name -> closed-form force (and optionally momentum)."""

    def __init__(self) -> None:
        self._forces: Dict[str, OracleFn] = {}
        self._momenta: Dict[str, OracleFn] = {}

    def register(
        self, name: str, fn: OracleFn, *, momentum: Optional[OracleFn] = None
    ) -> OracleFn:
        if not name:
            raise ValueError("family name must be non-empty")
        self._forces[name] = fn
        if momentum is not None:
            self._momenta[name] = momentum
        return fn

    def family(self, name: str, *, momentum: Optional[OracleFn] = None):
        """Decorator form of :meth:`register`."""

        def deco(f: OracleFn) -> OracleFn:
            return self.register(name, f, momentum=momentum)

        return deco

    def _lookup(
        self, table: Dict[str, OracleFn], name: str, what: str
    ) -> OracleFn:
        try:
            return table[name]
        except KeyError:
            known = ", ".join(sorted(table))
            raise SchemaError(
                f"unknown {what} family {name!r} (known: {known})"
            ) from None

    def force(self, name: str) -> OracleFn:
        return self._lookup(self._forces, name, "oracle")

    def momentum(self, name: str) -> OracleFn:
        return self._lookup(self._momenta, name, "momentum oracle")

    def names(self) -> List[str]:
        return sorted(self._forces)

    def copy(self) -> "OracleRegistry":
        clone = OracleRegistry()
        clone._forces = dict(self._forces)
        clone._momenta = dict(self._momenta)
        return clone


DEFAULT_ORACLES = OracleRegistry()


def oracle_el(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    family: str,
    trajectory: Optional[BaseTrajectory] = None,
    registry: OracleRegistry = DEFAULT_ORACLES,
) -> np.ndarray:
    """The closed-form Euler-Lagrange residual of ``family`` at ``t``.

    Raises:
        InapplicableFamily: if ``family`` does not describe ``(A, L.k)``.
        SchemaError: for an unknown family.
    """
    fn = registry.force(family)
    trajectory = trajectory or integrate_base(A, path)
    return fn(A, L, path, t, trajectory)


def oracle_momentum(
    A: AlgebroidStructure,
    L: Lagrangian,
    path: AdmissiblePath,
    t: float,
    family: str = "tangent",
    trajectory: Optional[BaseTrajectory] = None,
    registry: OracleRegistry = DEFAULT_ORACLES,
) -> np.ndarray:
    """Closed-form raw momentum components, shape ``(r, k)``."""
    fn = registry.momentum(family)
    trajectory = trajectory or integrate_base(A, path)
    return fn(A, L, path, t, trajectory)


# --------------------------------------------------------------------------- #
# Applicability
# --------------------------------------------------------------------------- #


def _blocks(A: AlgebroidStructure, x: List[float]) -> Tuple[np.ndarray, np.ndarray]:
    return A.rho_matrix(x), A.c_array(x)


def _require_order(family: str, L: Lagrangian, *orders: int) -> None:
    if orders and L.k not in orders:
        raise InapplicableFamily(
            f"{family} describes order {'/'.join(map(str, orders))}, got k={L.k}"
        )


def _require_tangent(A: AlgebroidStructure, x: List[float]) -> None:
    if A.m != A.r:
        raise InapplicableFamily("tangent family needs rank equal to base dimension")
    rho, c = _blocks(A, x)
    if np.max(np.abs(rho - np.eye(A.m)), initial=0.0) > STRUCTURE_TOL:
        raise InapplicableFamily("tangent family needs the identity anchor")
    if np.max(np.abs(c), initial=0.0) > STRUCTURE_TOL:
        raise InapplicableFamily("tangent family needs a zero bracket")


def _require_lie(A: AlgebroidStructure) -> None:
    if A.m != 0:
        raise InapplicableFamily("Euler-Poincare family needs a Lie algebra (m = 0)")


def _require_hamel(A: AlgebroidStructure, x: List[float]) -> None:
    m, r = A.m, A.r
    if r <= m:
        raise InapplicableFamily("Hamel family needs a Lie block after the tangent one")
    rho, c = _blocks(A, x)
    expected = np.zeros((m, r))
    expected[:, :m] = np.eye(m)
    if np.max(np.abs(rho - expected), initial=0.0) > STRUCTURE_TOL:
        raise InapplicableFamily("Hamel family needs the anchor [I | 0]")
    mixed = c.copy()
    mixed[m:, m:, m:] = 0.0
    if np.max(np.abs(mixed), initial=0.0) > STRUCTURE_TOL:
        raise InapplicableFamily("Hamel family needs a bracket closed on the Lie block")


# --------------------------------------------------------------------------- #
# Families
# --------------------------------------------------------------------------- #


def _tangent_momentum(A, L, path, t, trajectory) -> np.ndarray:
    """``m^(g) = sum_{a+b=g} (-1)^a d^a dL/dx^(k-b)``."""
    k = L.k
    D = path_derivatives(A, L, path, t, k - 1, trajectory)
    _require_tangent(A, D.x)
    out = np.zeros((A.r, k))
    for i in range(A.r):
        for g in range(k):
            out[i, g] = sum(
                (-1) ** a * D.dL_dy(i, k - (g - a) - 1, a) for a in range(g + 1)
            )
    return out


@DEFAULT_ORACLES.family("tangent", momentum=_tangent_momentum)
def tangent(A, L, path, t, trajectory) -> np.ndarray:
    """``F_a = sum_alpha (-1)^alpha d^alpha dL/dx^(alpha)``."""
    k = L.k
    D = path_derivatives(A, L, path, t, k, trajectory)
    _require_tangent(A, D.x)
    F = np.array([D.dL_dx(a) for a in range(A.m)])
    for a in range(A.m):
        for alpha in range(1, k + 1):
            F[a] += (-1) ** alpha * D.dL_dy(a, alpha - 1, alpha)
    return F


@DEFAULT_ORACLES.family("algebroid_k1")
def algebroid_k1(A, L, path, t, trajectory) -> np.ndarray:
    """``-[(delta d/dt + c^k_ij y^j) dL/dy_k - rho^a_i dL/dx^a]``."""
    _require_order("algebroid_k1", L, 1)
    D = path_derivatives(A, L, path, t, 1, trajectory)
    rho, c = _blocks(A, D.x)
    y = D.y[:, 0]
    P = np.array([D.dL_dy(i, 0) for i in range(A.r)])
    dP = np.array([D.dL_dy(i, 0, 1) for i in range(A.r)])
    p = np.array([D.dL_dx(a) for a in range(A.m)])
    displayed = dP + np.einsum("kij,j,k->i", c, y, P) - rho.T @ p
    return -displayed


@DEFAULT_ORACLES.family("algebroid_k2")
def algebroid_k2(A, L, path, t, trajectory) -> np.ndarray:
    """``(delta d/dt + c^k_ij y^j)(d/dt dL/dy1_k - dL/dy0_k) + rho^a_i dL/dx^a``."""
    _require_order("algebroid_k2", L, 2)
    D = path_derivatives(A, L, path, t, 2, trajectory)
    rho, c = _blocks(A, D.x)
    y = D.y[:, 0]
    Z = np.array([D.dL_dy(i, 1, 1) - D.dL_dy(i, 0) for i in range(A.r)])
    dZ = np.array([D.dL_dy(i, 1, 2) - D.dL_dy(i, 0, 1) for i in range(A.r)])
    p = np.array([D.dL_dx(a) for a in range(A.m)])
    return dZ + np.einsum("kij,j,k->i", c, y, Z) + rho.T @ p


@DEFAULT_ORACLES.family("euler_poincare")
def euler_poincare(A, L, path, t, trajectory) -> np.ndarray:
    """``(-d/dt + ad*_{a0}) W``.

    ``W = sum_{alpha<k} (-1)^alpha d^alpha dL/dy_alpha``.
    """
    _require_lie(A)
    k = L.k
    D = path_derivatives(A, L, path, t, k, trajectory)
    c = A.c_array([])
    a0 = D.y[:, 0]

    def W(n: int) -> np.ndarray:
        return np.array(
            [
                sum((-1) ** al * D.dL_dy(i, al, al + n) for al in range(k))
                for i in range(A.r)
            ]
        )

    return -W(1) + np.einsum("kij,i,k->j", c, a0, W(0))


@DEFAULT_ORACLES.family("hamel_k2")
def hamel_k2(A, L, path, t, trajectory) -> np.ndarray:
    """Tangent block ``dL/dx - d dL/dy_0 + d^2 dL/dy_1`` and a second-order
    Euler-Poincare block on the remaining fiber directions."""
    _require_order("hamel_k2", L, 2)
    D = path_derivatives(A, L, path, t, 2, trajectory)
    _require_hamel(A, D.x)
    m, r = A.m, A.r
    c = A.c_array(D.x)
    F = np.zeros(r)
    for a in range(m):
        F[a] = D.dL_dx(a) - D.dL_dy(a, 0, 1) + D.dL_dy(a, 1, 2)
    g = range(m, r)
    Z = {i: D.dL_dy(i, 1, 1) - D.dL_dy(i, 0) for i in g}
    for i in g:
        F[i] = D.dL_dy(i, 1, 2) - D.dL_dy(i, 0, 1)
        F[i] += sum(c[kk, i, j] * D.y[j, 0] * Z[kk] for j in g for kk in g)
    return F


# --------------------------------------------------------------------------- #
# The dual map on Lie algebras
# --------------------------------------------------------------------------- #


def lie_eps_k_closed_form(A: AlgebroidStructure, psi: EkCovector) -> np.ndarray:
    """``eps_k`` on a Lie algebra from its closed form, shape ``(r, k+1)``.

    ``zeta^(b) = C(k,b)^-1 [xi_(k-1-b) + sum_{s<b} C(k-b+s, s) ad*_{a^s} xi_(k-b+s)]``
    with ``xi_alpha`` the component along ``y^(alpha)`` and ``a^s = y^(s)``.
    """
    _require_lie(A)
    e = psi.base
    k, r = e.k, e.r
    c = A.c_array([])
    xi = np.array(psi.dy, dtype=float).reshape(r, k)
    a = np.array(e.y, dtype=float).reshape(r, k)
    out = np.zeros((r, k + 1))
    for b in range(k + 1):
        acc = xi[:, k - 1 - b].copy() if b <= k - 1 else np.zeros(r)
        for s in range(b):
            acc += binom(k - b + s, s) * np.einsum(
                "kij,i,k->j", c, a[:, s], xi[:, k - b + s]
            )
        out[:, b] = acc / binom(k, b)
    return out
