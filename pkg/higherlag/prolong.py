"""Prolongations E^k and their linear-geometric kernels.

Coordinates follow the derivative convention throughout. A point of E^k is
``(x, y[i][alpha])`` for ``alpha < k``; it embeds into T^{k-1}E with the base
jet generated by the anchor. The dual map ``eps_k`` sends covectors on E^k to
points of T^k E* and is the engine behind forces and momenta. The
integration-by-parts maps ``upsilon`` and ``momenta_map`` act on
semi-holonomic blocks ``xi[i][a][b]``.

All maps here are ring-generic: components may be floats or jets, which is
how the mechanics layer differentiates them in time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from .algebroid import AlgebroidStructure, anchor_flow_jet, epsilon_components
from .config import DEFAULTS
from .errors import ConsistencyError, ContractViolation
from .jetcalc import (
    Jet,
    binom,
    coefficient,
    directional_derivative,
    new_tag,
    scalar_part,
)
from .reports import BinomialReport


def _wsum(pairs) -> Any:
    """``sum(w * v)`` skipping zero weights; unit weights are not multiplied."""
    acc = None
    for w, v in pairs:
        if w == 0:
            continue
        term = v if w == 1 else w * v
        acc = term if acc is None else acc + term
    return 0.0 if acc is None else acc


def _rows(values: Any) -> Tuple[Tuple[Any, ...], ...]:
    return tuple(tuple(row) for row in values)


# --------------------------------------------------------------------------- #
# Types
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class EkPoint:
    """Graded coordinates ``(x^a, y^{i,(alpha)})``, ``alpha = 0..k-1``."""

    k: int
    x: Tuple[Any, ...]
    y: Tuple[Tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ContractViolation(f"E^k needs k >= 1, got {self.k}")
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "y", _rows(self.y))
        if any(len(row) != self.k for row in self.y):
            raise ContractViolation(f"each fiber row needs {self.k} entries")

    @property
    def m(self) -> int:
        return len(self.x)

    @property
    def r(self) -> int:
        return len(self.y)

    def coordinates(self) -> List[Any]:
        """Flat ``(x, y1_0, y1_1, ..., yr_{k-1})``."""
        return list(self.x) + [v for row in self.y for v in row]

    @classmethod
    def from_coordinates(cls, k: int, m: int, r: int, z: Sequence[Any]) -> "EkPoint":
        x = tuple(z[:m])
        y = [tuple(z[m + i * k: m + (i + 1) * k]) for i in range(r)]
        return cls(k, x, y)


@dataclass(frozen=True)
class EkCovector:
    """A covector on E^k.

    ``dx[a]`` is the component along ``x^a`` and ``dy[i][alpha]`` the one along
    ``y^{i,(alpha)}``.
    """

    base: EkPoint
    dx: Tuple[Any, ...]
    dy: Tuple[Tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dx", tuple(self.dx))
        object.__setattr__(self, "dy", _rows(self.dy))
        if len(self.dx) != self.base.m or len(self.dy) != self.base.r:
            raise ContractViolation("covector and base point dimensions differ")
        if any(len(row) != self.base.k for row in self.dy):
            raise ContractViolation("covector fiber rows must have k entries")

    def components(self) -> List[Any]:
        return list(self.dx) + [v for row in self.dy for v in row]

    def pair(self, vector: Sequence[Any]) -> Any:
        """Pairing with a tangent vector given in flat coordinates."""
        return _wsum((1, a * b) for a, b in zip(self.components(), vector))


@dataclass(frozen=True)
class TkCovector:
    """A point of T^k E*: base jet ``xjet[a][beta]`` and fiber ``xi[i][beta]``."""

    k: int
    xjet: Tuple[Tuple[Any, ...], ...]
    xi: Tuple[Tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "xjet", _rows(self.xjet))
        object.__setattr__(self, "xi", _rows(self.xi))

    def xi_array(self) -> np.ndarray:
        return np.array(self.xi, dtype=float).reshape(len(self.xi), self.k + 1)


@dataclass(frozen=True)
class MixedCovectorJet:
    """An order-K jet of a curve in TE*: ``x, xi, xdot, xidot`` coefficients."""

    order: int
    x: Tuple[Tuple[Any, ...], ...]
    xi: Tuple[Tuple[Any, ...], ...]
    xdot: Tuple[Tuple[Any, ...], ...]
    xidot: Tuple[Tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        for name in ("x", "xi", "xdot", "xidot"):
            rows = _rows(getattr(self, name))
            if any(len(row) != self.order + 1 for row in rows):
                raise ContractViolation(f"mixed jet component {name} has mixed order")
            object.__setattr__(self, name, rows)


@dataclass(frozen=True)
class SemiHolonomicBlock:
    """Coefficients ``xi[i][alpha][beta]`` over a holonomic order-2k base jet."""

    k: int
    basejet: np.ndarray
    xi: np.ndarray

    def __post_init__(self) -> None:
        xi = np.asarray(self.xi, dtype=float)
        if xi.ndim != 3 or xi.shape[1:] != (self.k + 1, self.k + 1):
            raise ContractViolation(
                f"a block of order {self.k} needs shape (r, {self.k + 1}, {self.k + 1})"
            )
        base = np.asarray(self.basejet, dtype=float)
        if base.ndim != 2 or base.shape[1] != 2 * self.k + 1:
            raise ContractViolation(
                f"the base of a block of order {self.k} is an order-{2 * self.k} jet"
            )
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "basejet", base)

    @property
    def r(self) -> int:
        return self.xi.shape[0]


@dataclass(frozen=True)
class IteratedTangentElement:
    """An element of the k-fold iterated tangent bundle, indexed by ``{0,1}^k``.

    ``base`` has shape ``(2,)*k + (m,)`` and ``fiber`` ``(2,)*k + (r,)``.
    """

    k: int
    base: np.ndarray
    fiber: np.ndarray

    def __post_init__(self) -> None:
        base = np.asarray(self.base, dtype=float)
        fiber = np.asarray(self.fiber, dtype=float)
        cube = (2,) * self.k
        if base.shape[: self.k] != cube or fiber.shape[: self.k] != cube:
            raise ContractViolation("iterated components are indexed by {0,1}^k")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fiber", fiber)


# --------------------------------------------------------------------------- #
# Embedding and the dual map
# --------------------------------------------------------------------------- #


def embed_Ek(A: AlgebroidStructure, e: EkPoint) -> List[Jet]:
    """The base jet ``rho_k(e)``: m jets of order k generated by the anchor."""
    if e.m != A.m or e.r != A.r:
        raise ContractViolation("point and structure dimensions differ")
    tag = new_tag()
    y = [Jet(tuple(row), tag) for row in e.y]
    return anchor_flow_jet(A, e.x, y, e.k, tag)


def eps_kM_rescale(P: Sequence[Any], K: int) -> List[Any]:
    """Covector components ``P_(0..K)`` to jet components ``P_(K-a) / C(K, a)``."""
    if len(P) != K + 1:
        raise ContractViolation(f"expected {K + 1} covector components, got {len(P)}")
    out = []
    for alpha in range(K + 1):
        w = binom(K, alpha)
        v = P[K - alpha]
        out.append(v if w == 1 else v / w)
    return out


def tangent_lift_epsilon(
    A: AlgebroidStructure,
    x: Sequence[Sequence[Any]],
    y: Sequence[Sequence[Any]],
    p: Sequence[Sequence[Any]],
    piv: Sequence[Sequence[Any]],
) -> MixedCovectorJet:
    """The order-K jet of ``epsilon`` along an order-K jet of a curve in T*E."""
    if A.r == 0:
        raise ContractViolation("rank-zero bundles have no fiber")
    order = len(y[0]) - 1
    tag = new_tag()

    def jets(rows):
        return [Jet(tuple(row), tag) for row in rows]

    out = epsilon_components(A, jets(x), jets(y), jets(p), jets(piv))

    def coeffs(values):
        return [[coefficient(v, tag, a) for a in range(order + 1)] for v in values]

    return MixedCovectorJet(
        order=order,
        x=[list(row) for row in x],
        xi=coeffs(out.xi),
        xdot=coeffs(out.xdot),
        xidot=coeffs(out.xidot),
    )


def dual_inclusion_project(
    Xi: MixedCovectorJet, tol: Optional[float] = None
) -> TkCovector:
    """Project an order-(k-1) jet in TE* to T^k E*.

    ``zeta^(b) = [C(k-1, b) xi^(b) + C(k-1, b-1) xidot^(b-1)] / C(k, b)`` and
    the base gains ``x^(k) = xdot^(k-1)``.

    Raises:
        ConsistencyError: if the base jet is not semi-holonomic.
    """
    tol = DEFAULTS.identity_tol if tol is None else tol
    K = Xi.order
    k = K + 1
    for a, (xrow, vrow) in enumerate(zip(Xi.x, Xi.xdot)):
        for beta in range(K):
            gap = abs(scalar_part(vrow[beta]) - scalar_part(xrow[beta + 1]))
            if gap > tol * max(1.0, abs(scalar_part(xrow[beta + 1]))):
                raise ConsistencyError(
                    f"base jet is not semi-holonomic at x{a + 1}, order {beta} "
                    f"(gap {gap:.3e})"
                )
    xjet = [tuple(xrow) + (vrow[K],) for xrow, vrow in zip(Xi.x, Xi.xdot)]
    zeta = []
    for xirow, dotrow in zip(Xi.xi, Xi.xidot):
        row = []
        for beta in range(k + 1):
            pairs = []
            if beta <= K:
                pairs.append((binom(K, beta), xirow[beta]))
            if beta >= 1:
                pairs.append((binom(K, beta - 1), dotrow[beta - 1]))
            total = _wsum(pairs)
            w = binom(k, beta)
            row.append(total if w == 1 else total / w)
        zeta.append(row)
    return TkCovector(k=k, xjet=xjet, xi=zeta)


def _extension_corrected(
    A: AlgebroidStructure, psi: EkCovector, extension: Sequence[Sequence[Any]]
) -> Tuple[List[Any], List[List[Any]]]:
    """Components along ``x^(0)`` and ``y`` for a chosen extension.

    ``extension[b][beta - 1]`` is the component along ``x^{b,(beta)}``; the
    pullback constraint fixes the rest through the embedding's chain rule.
    """
    e = psi.base
    k, m, r = e.k, e.m, e.r

    def weighted_embedding(*z: Any) -> Any:
        xj = embed_Ek(A, EkPoint.from_coordinates(k, m, r, z))
        return _wsum(
            (1, extension[b][beta - 1] * xj[b].coeffs[beta])
            for b in range(m)
            for beta in range(1, k)
        )

    z = e.coordinates()
    grad = []
    for n in range(len(z)):
        direction = [0.0] * len(z)
        direction[n] = 1.0
        grad.append(directional_derivative(weighted_embedding, z, direction))
    dx = [psi.dx[a] - grad[a] for a in range(m)]
    dy = [
        [psi.dy[i][alpha] - grad[m + i * k + alpha] for alpha in range(k)]
        for i in range(r)
    ]
    return dx, dy


def eps_k(
    A: AlgebroidStructure,
    psi: EkCovector,
    extension: Optional[Sequence[Sequence[Any]]] = None,
    tol: Optional[float] = None,
) -> TkCovector:
    """The dual map ``T*E^k -> T^k E*``.

    The covector is extended to T^{k-1}E (zero along the higher base
    coordinates unless ``extension`` gives them), rescaled into a jet of T*E,
    pushed through the tangent lift of ``epsilon`` and projected.
    """
    e = psi.base
    k = e.k
    K = k - 1
    base = embed_Ek(A, e)
    if extension is None or k == 1 or A.m == 0:
        dx, dy = list(psi.dx), [list(row) for row in psi.dy]
        higher = [[0.0] * K for _ in range(A.m)]
    else:
        ext = [list(row) for row in extension]
        if len(ext) != A.m or any(len(row) != K for row in ext):
            raise ContractViolation(f"an extension needs shape ({A.m}, {K})")
        dx, dy = _extension_corrected(A, psi, ext)
        higher = ext
    p = [eps_kM_rescale([dx[a]] + list(higher[a]), K) for a in range(A.m)]
    piv = [eps_kM_rescale(dy[i], K) for i in range(A.r)]
    x = [[base[a].coeffs[beta] for beta in range(K + 1)] for a in range(A.m)]
    mixed = tangent_lift_epsilon(A, x, e.y, p, piv)
    return dual_inclusion_project(mixed, tol)


# --------------------------------------------------------------------------- #
# Pairings
# --------------------------------------------------------------------------- #


def _as_rows(v: Any) -> List[Sequence[Any]]:
    if isinstance(v, np.ndarray):
        return list(v) if v.ndim == 2 else [v]
    if len(v) and not isinstance(v[0], (list, tuple, np.ndarray)):
        return [v]
    return list(v)


def pairing_Tk(xi: Any, v: Any) -> Any:
    """``sum_i sum_a C(k, a) xi_i^(a) v^{i,(k-a)}``; 1-D inputs mean rank one."""
    xs, vs = _as_rows(xi), _as_rows(v)
    if len(xs) != len(vs):
        raise ContractViolation("pairing of different ranks")
    terms = []
    for xrow, vrow in zip(xs, vs):
        k = len(xrow) - 1
        if len(vrow) != k + 1:
            raise ContractViolation("pairing of different orders")
        for alpha in range(k + 1):
            terms.append((binom(k, alpha), xrow[alpha] * vrow[k - alpha]))
    return _wsum(terms)


def pairing_iterated(xi: np.ndarray, v: np.ndarray, k: Optional[int] = None) -> float:
    """``sum_eps xi^(eps) v^((1,..,1) - eps)`` on ``{0,1}^k``-indexed arrays."""
    xi = np.asarray(xi, dtype=float)
    v = np.asarray(v, dtype=float)
    if xi.shape != v.shape:
        raise ContractViolation("iterated pairing of different shapes")
    if k is None:
        k = xi.ndim - 1
    axes = tuple(range(k))
    flipped = np.flip(v, axis=axes) if axes else v
    return float(np.sum(xi * flipped))


def pairing_mixed_inclusion(Xi: MixedCovectorJet, v: Any) -> Any:
    """Pair an order-(k-1) jet in TE* with the image of a T^kE fiber element.

    ``sum_a C(k-1, a) [xi^(a) v^(k-a) + xidot^(a) v^(k-1-a)]``.
    """
    K = Xi.order
    vs = _as_rows(v)
    terms = []
    for xirow, dotrow, vrow in zip(Xi.xi, Xi.xidot, vs):
        for alpha in range(K + 1):
            w = binom(K, alpha)
            terms.append((w, xirow[alpha] * vrow[K + 1 - alpha]))
            terms.append((w, dotrow[alpha] * vrow[K - alpha]))
    return _wsum(terms)


def pairing_momentum(m: Any, v: Any) -> Any:
    """``sum_i sum_b m_i^(b) v^{i,(K-b)}`` for raw momentum components."""
    ms, vs = _as_rows(m), _as_rows(v)
    terms = []
    for mrow, vrow in zip(ms, vs):
        K = len(mrow) - 1
        for beta in range(K + 1):
            terms.append((1, mrow[beta] * vrow[K - beta]))
    return _wsum(terms)


# --------------------------------------------------------------------------- #
# Iterated tangent elements
# --------------------------------------------------------------------------- #


def holonomic_inclusion(jet: Any, k: Optional[int] = None) -> np.ndarray:
    """Diagonal inclusion ``T^k -> T^(k)``: entry ``eps`` is ``jet[:, |eps|]``."""
    arr = np.asarray(jet, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    k = arr.shape[1] - 1 if k is None else k
    out = np.empty((2,) * k + (arr.shape[0],))
    for eps in itertools.product((0, 1), repeat=k):
        out[eps] = arr[:, sum(eps)]
    return out


def _is_holonomic(base: np.ndarray, k: int, tol: float) -> bool:
    for eps in itertools.product((0, 1), repeat=k):
        weight = sum(eps)
        ref = (1,) * weight + (0,) * (k - weight)
        if np.max(np.abs(base[eps] - base[ref]), initial=0.0) > tol:
            return False
    return True


def P_k_project(X: IteratedTangentElement, tol: Optional[float] = None) -> np.ndarray:
    """Binomially averaged fiber components, shape ``(r, k+1)``.

    Raises:
        ContractViolation: if the base of ``X`` is not holonomic.
    """
    tol = DEFAULTS.identity_tol if tol is None else tol
    k = X.k
    if not _is_holonomic(X.base, k, tol):
        raise ContractViolation("P_k needs an element over a holonomic base")
    r = X.fiber.shape[-1]
    sums = np.zeros((r, k + 1))
    for eps in itertools.product((0, 1), repeat=k):
        sums[:, sum(eps)] += X.fiber[eps]
    weights = np.array([binom(k, a) for a in range(k + 1)], dtype=float)
    return sums / weights


# --------------------------------------------------------------------------- #
# Integration by parts
# --------------------------------------------------------------------------- #


def _block(Phi: Any) -> Tuple[int, Any]:
    if isinstance(Phi, SemiHolonomicBlock):
        return Phi.k, Phi.xi
    xi = Phi
    return len(xi[0]) - 1, xi


def upsilon(Phi: Any) -> List[Any]:
    """``F_i = sum_a (-1)^a C(k, a) xi_i^(a, k-a)``.

    Accepts a :class:`SemiHolonomicBlock` or a nested ``[i][a][b]`` sequence.
    """
    k, xi = _block(Phi)
    return [
        _wsum(((-1) ** a * binom(k, a), row[a][k - a]) for a in range(k + 1))
        for row in xi
    ]


def momenta_map(Phi: Any) -> List[List[Any]]:
    """``m^(b) = sum_{a+c=b} (-1)^a C(k+1, c) xi^(a, c)`` for ``b = 0..k``."""
    k, xi = _block(Phi)
    out = []
    for row in xi:
        comps = []
        for beta in range(k + 1):
            comps.append(
                _wsum(
                    ((-1) ** a * binom(k + 1, beta - a), row[a][beta - a])
                    for a in range(beta + 1)
                )
            )
        out.append(comps)
    return out


def momentum_coordinates(m: Any) -> np.ndarray:
    """Binomially averaged coordinates ``m^(b) / C(K, b)`` of raw momenta."""
    arr = np.atleast_2d(np.asarray(m, dtype=float))
    K = arr.shape[1] - 1
    return arr / np.array([binom(K, b) for b in range(K + 1)], dtype=float)


def binom_identity_a(k: int, a: int) -> Tuple[int, int]:
    """``(sum_j (-1)^j C(j, a) C(k, j), 0)`` for ``0 <= a <= k-1``."""
    if not 0 <= a <= k - 1:
        raise ContractViolation(
            f"first binomial identity needs 0 <= a <= k-1, got a={a}"
        )
    lhs = sum((-1) ** j * binom(j, a) * binom(k, j) for j in range(a, k + 1))
    return lhs, 0


def binom_identity_b(k: int, a: int, b: int) -> Tuple[int, int]:
    """``(sum_j (-1)^j C(j,a) C(k-j,b) C(k+1,j+1), (-1)^a C(k+1,b))``."""
    if a < 0 or b < 0 or a + b > k:
        raise ContractViolation(
            f"second binomial identity needs a, b >= 0 and a + b <= k, got {a}, {b}"
        )
    lhs = sum(
        (-1) ** j * binom(j, a) * binom(k - j, b) * binom(k + 1, j + 1)
        for j in range(a, k - b + 1)
    )
    return lhs, (-1) ** a * binom(k + 1, b)


def binom_identity_check(k: int) -> BinomialReport:
    """Both binomial identities behind integration by parts, in exact integers."""
    if k < 0:
        raise ContractViolation("k must be non-negative")
    failures: List[List[int]] = []
    checked = 0
    for a in range(k):
        lhs, rhs = binom_identity_a(k, a)
        checked += 1
        if lhs != rhs:
            failures.append([1, a, -1])
    for a in range(k + 1):
        for b in range(k + 1 - a):
            lhs, rhs = binom_identity_b(k, a, b)
            checked += 1
            if lhs != rhs:
                failures.append([2, a, b])
    return BinomialReport(k=k, checked=checked, failures=failures)


def green_identity_check(
    Phi: SemiHolonomicBlock, v: Any, basejet: Optional[np.ndarray] = None
) -> float:
    """Residual of the integration-by-parts formula for one block.

    Left side: the iterated pairing of the top slice ``xi^(0, .)`` with ``v``.
    Right side: ``<upsilon(Phi), v^(0)>`` plus the time derivative of the
    momentum pairing built from ``xi^(a, b)``, ``a, b < k``, realized with
    order-1 jets.
    """
    k = Phi.k
    varr = np.atleast_2d(np.asarray(v, dtype=float))
    if varr.shape != (Phi.r, k + 1):
        raise ContractViolation(f"v must have shape ({Phi.r}, {k + 1})")
    if basejet is not None:
        base = np.asarray(basejet, dtype=float)
        if base.shape[0] != Phi.basejet.shape[0] or not np.allclose(
            base[:, : k + 1], Phi.basejet[:, : k + 1], rtol=0.0, atol=1e-12
        ):
            raise ContractViolation("block and section do not share a foot")
    xi = Phi.xi
    lhs = pairing_iterated(
        holonomic_inclusion(xi[:, 0, :], k), holonomic_inclusion(varr, k), k
    )
    rhs = float(np.dot(upsilon(Phi), varr[:, 0]))
    if k >= 1:
        tag = new_tag()
        block = [
            [
                [Jet((xi[i, a, b], xi[i, a + 1, b]), tag) for b in range(k)]
                for a in range(k)
            ]
            for i in range(Phi.r)
        ]
        vj = [
            [Jet((varr[i, al], varr[i, al + 1]), tag) for al in range(k)]
            for i in range(Phi.r)
        ]
        rhs += float(coefficient(pairing_momentum(momenta_map(block), vj), tag, 1))
    return abs(lhs - rhs)
