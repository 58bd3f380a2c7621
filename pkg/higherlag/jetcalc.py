"""Truncated Taylor arithmetic ("jets") and forward-mode differentiation.

A :class:`Jet` of order ``K`` stores ``coeffs[a] = d^a f / dt^a`` at the
expansion point, *without* the ``1/a!`` factor. Products therefore follow the
Leibniz rule ``out[a] = sum_s C(a, s) x[s] y[a - s]`` and every transcendental
function is computed by its univariate recurrence in the same convention.

Jets nest. Each jet carries an integer ``tag`` naming its variable; a jet with
a larger tag may hold jets with smaller tags as coefficients, which is how the
mechanics pipeline differentiates in time, in the auxiliary jet parameter and
along gradient seeds at once. Fresh tags come from :func:`new_tag` and always
nest outside every jet built before them. Jets built by hand default to tag 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np

from .config import DEFAULTS
from .errors import ContractViolation, DomainError, NonFiniteError

MAX_ORDER = DEFAULTS.max_jet_order

_TAGS = itertools.count(1)


def new_tag() -> int:
    """Return a tag that nests outside every tag issued so far."""
    return next(_TAGS)


@lru_cache(maxsize=None)
def binom(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


def _nil(v: Any) -> bool:
    # Exact zeros only; used to skip Leibniz terms.
    return type(v) in (int, float) and v == 0


def _is_integral(e: Any) -> bool:
    if isinstance(e, bool):
        return False
    if isinstance(e, (int, np.integer)):
        return True
    return isinstance(e, (float, np.floating)) and float(e).is_integer()


def scalar_part(v: Any) -> float:
    """The innermost constant term of a (possibly nested) jet."""
    while isinstance(v, Jet):
        v = v.coeffs[0]
    return float(v)


def is_finite(v: Any) -> bool:
    if isinstance(v, Jet):
        return all(is_finite(c) for c in v.coeffs)
    return math.isfinite(v)


# --------------------------------------------------------------------------- #
# The jet type
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Jet:
    """Order-K truncated Taylor data of a scalar in one variable."""

    coeffs: Tuple[Any, ...]
    tag: int = 0

    # Numpy scalars and arrays must defer to the reflected jet operators.
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ContractViolation("a jet needs at least one coefficient")
        if len(coeffs) - 1 > MAX_ORDER:
            raise ContractViolation(
                f"jet order {len(coeffs) - 1} exceeds the maximum {MAX_ORDER}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, value: Any, order: int, tag: int = 0) -> "Jet":
        return cls((value,) + (0.0,) * order, tag)

    @classmethod
    def variable(cls, value: Any, order: int, tag: int = 0) -> "Jet":
        """The jet of ``t -> value + t`` (a unit seed)."""
        if order == 0:
            return cls((value,), tag)
        return cls((value, 1.0) + (0.0,) * (order - 1), tag)

    # -- inspection ---------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> Any:
        return self.coeffs[0]

    def truncate(self, order: int) -> "Jet":
        if order > self.order or order < 0:
            raise ContractViolation(
                f"cannot truncate an order-{self.order} jet to order {order}"
            )
        return Jet(self.coeffs[: order + 1], self.tag)

    def derivative(self, n: int = 1) -> "Jet":
        """The jet of the n-th derivative, of order ``order - n``."""
        if n > self.order:
            raise ContractViolation(
                f"order-{self.order} jet has no derivative of order {n}"
            )
        return Jet(self.coeffs[n:], self.tag)

    def to_taylor(self) -> Tuple[Any, ...]:
        """Factorial-normalized coefficients ``f^(a) / a!``."""
        return tuple(c / math.factorial(a) for a, c in enumerate(self.coeffs))

    @classmethod
    def from_taylor(cls, coeffs: Sequence[Any], tag: int = 0) -> "Jet":
        return cls(tuple(c * math.factorial(a) for a, c in enumerate(coeffs)), tag)

    # -- ring dispatch ------------------------------------------------------

    def _same(self, other: Any) -> bool:
        if isinstance(other, Jet) and other.tag == self.tag:
            if other.order != self.order:
                raise ContractViolation(
                    f"jet order mismatch: {self.order} vs {other.order}"
                )
            return True
        return False

    def _outer(self, other: Any) -> bool:
        return isinstance(other, Jet) and other.tag > self.tag

    def _with_first(self, first: Any) -> "Jet":
        return Jet((first,) + self.coeffs[1:], self.tag)

    def _scaled(self, fn: Callable[[Any], Any]) -> "Jet":
        return Jet(tuple(fn(c) for c in self.coeffs), self.tag)

    def __neg__(self) -> "Jet":
        return self._scaled(lambda c: -c)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other: Any) -> "Jet":
        if self._outer(other):
            return other.__radd__(self)
        if self._same(other):
            return Jet(
                tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.tag
            )
        return self._with_first(self.coeffs[0] + other)

    def __radd__(self, other: Any) -> "Jet":
        return self._with_first(other + self.coeffs[0])

    def __sub__(self, other: Any) -> "Jet":
        if self._outer(other):
            return other.__rsub__(self)
        if self._same(other):
            return Jet(
                tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.tag
            )
        return self._with_first(self.coeffs[0] - other)

    def __rsub__(self, other: Any) -> "Jet":
        return Jet(
            (other - self.coeffs[0],) + tuple(-c for c in self.coeffs[1:]), self.tag
        )

    def __mul__(self, other: Any) -> "Jet":
        if self._outer(other):
            return other.__rmul__(self)
        if self._same(other):
            return Jet(_leibniz(self.coeffs, other.coeffs), self.tag)
        if _nil(other):
            return Jet.constant(0.0, self.order, self.tag)
        return self._scaled(lambda c: c * other)

    def __rmul__(self, other: Any) -> "Jet":
        if _nil(other):
            return Jet.constant(0.0, self.order, self.tag)
        return self._scaled(lambda c: other * c)

    def __truediv__(self, other: Any) -> "Jet":
        if self._outer(other):
            return other.__rtruediv__(self)
        if self._same(other):
            return Jet(_quotient(self.coeffs, other.coeffs), self.tag)
        if _nil(other) or scalar_part(other) == 0.0:
            raise DomainError("division by a zero constant term")
        return self._scaled(lambda c: c / other)

    def __rtruediv__(self, other: Any) -> "Jet":
        return Jet(
            _quotient((other,) + (0.0,) * self.order, self.coeffs), self.tag
        )

    def __pow__(self, exponent: Any) -> "Jet":
        if isinstance(exponent, Jet) and exponent.tag > self.tag:
            return exponent.__rpow__(self)
        if isinstance(exponent, Jet) and exponent.tag == self.tag:
            return exp(exponent * log(self))
        if _is_integral(exponent):
            return ipow(self, int(exponent))
        return exp(exponent * log(self))

    def __rpow__(self, base: Any) -> "Jet":
        return exp(self * log(base))

    def __repr__(self) -> str:
        inner = ", ".join(repr(c) for c in self.coeffs)
        suffix = f", tag={self.tag}" if self.tag else ""
        return f"Jet(({inner}){suffix})"


def _leibniz(a: Sequence[Any], b: Sequence[Any]) -> Tuple[Any, ...]:
    out = []
    for alpha in range(len(a)):
        acc = None
        for s in range(alpha + 1):
            x, y = a[s], b[alpha - s]
            if _nil(x) or _nil(y):
                continue
            c = binom(alpha, s)
            term = x * y if c == 1 else c * (x * y)
            acc = term if acc is None else acc + term
        out.append(0.0 if acc is None else acc)
    return tuple(out)


def _quotient(a: Sequence[Any], b: Sequence[Any]) -> Tuple[Any, ...]:
    b0 = b[0]
    if _nil(b0) or scalar_part(b0) == 0.0:
        raise DomainError("division by a jet with zero constant term")
    out: list = []
    for n in range(len(a)):
        acc = a[n]
        for s in range(n):
            y = b[n - s]
            if _nil(y) or _nil(out[s]):
                continue
            acc = acc - binom(n, s) * (out[s] * y)
        out.append(acc / b0)
    return tuple(out)


# --------------------------------------------------------------------------- #
# Ring-generic helpers
# --------------------------------------------------------------------------- #


def one_like(v: Any) -> Any:
    if isinstance(v, Jet):
        return Jet.constant(1.0, v.order, v.tag)
    return 1.0


def divide(a: Any, b: Any) -> Any:
    """``a / b`` on scalars or jets, with zero divisors reported as domain errors."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    return a / b


def ipow(base: Any, n: int) -> Any:
    """Integer power by repeated squaring (same operation order for all rings)."""
    if n < 0:
        return divide(1.0, ipow(base, -n))
    result = None
    square = base
    while n:
        if n & 1:
            result = square if result is None else result * square
        n >>= 1
        if n:
            square = square * square
    return one_like(base) if result is None else result


def power(base: Any, exponent: Any) -> Any:
    """``base ^ exponent``: repeated squaring for integral exponents, else exp/log."""
    if isinstance(base, Jet) or isinstance(exponent, Jet):
        return base**exponent
    if _is_integral(exponent):
        return ipow(base, int(exponent))
    return exp(exponent * log(base))


def exp(a: Any) -> Any:
    if not isinstance(a, Jet):
        try:
            return math.exp(a)
        except OverflowError as exc:
            raise NonFiniteError(f"exp overflow at {a!r}") from exc
    x = a.coeffs
    out = [exp(x[0])]
    for n in range(a.order):
        acc = None
        for s in range(n + 1):
            if _nil(x[s + 1]):
                continue
            term = binom(n, s) * (x[s + 1] * out[n - s])
            acc = term if acc is None else acc + term
        out.append(0.0 if acc is None else acc)
    return Jet(tuple(out), a.tag)


def log(a: Any) -> Any:
    if scalar_part(a) <= 0.0:
        raise DomainError(f"log of non-positive value {scalar_part(a)!r}")
    if not isinstance(a, Jet):
        return math.log(a)
    x = a.coeffs
    out = [log(x[0])]
    for n in range(a.order):
        acc = x[n + 1]
        for s in range(n):
            if _nil(x[n - s]):
                continue
            acc = acc - binom(n, s) * (x[n - s] * out[s + 1])
        out.append(acc / x[0])
    return Jet(tuple(out), a.tag)


def _sincos(a: Any) -> Tuple[Any, Any]:
    if not isinstance(a, Jet):
        return math.sin(a), math.cos(a)
    x = a.coeffs
    s0, c0 = _sincos(x[0])
    s, c = [s0], [c0]
    for n in range(a.order):
        sacc = None
        cacc = None
        for j in range(n + 1):
            if _nil(x[j + 1]):
                continue
            w = binom(n, j)
            st = w * (x[j + 1] * c[n - j])
            ct = w * (x[j + 1] * s[n - j])
            sacc = st if sacc is None else sacc + st
            cacc = ct if cacc is None else cacc + ct
        s.append(0.0 if sacc is None else sacc)
        c.append(0.0 if cacc is None else -cacc)
    return Jet(tuple(s), a.tag), Jet(tuple(c), a.tag)


def sin(a: Any) -> Any:
    return _sincos(a)[0]


def cos(a: Any) -> Any:
    return _sincos(a)[1]


def sqrt(a: Any) -> Any:
    lead = scalar_part(a)
    if lead < 0.0:
        raise DomainError(f"sqrt of negative value {lead!r}")
    if not isinstance(a, Jet):
        return math.sqrt(a)
    if lead == 0.0 and a.order > 0:
        raise DomainError("sqrt is not differentiable at a zero constant term")
    x = a.coeffs
    out = [sqrt(x[0])]
    twice = 2.0 * out[0]
    for n in range(1, a.order + 1):
        acc = x[n]
        for s in range(1, n):
            acc = acc - binom(n, s) * (out[s] * out[n - s])
        out.append(acc / twice)
    return Jet(tuple(out), a.tag)


def tanh(a: Any) -> Any:
    if not isinstance(a, Jet):
        return math.tanh(a)
    x = a.coeffs
    out = [tanh(x[0])]
    u = []  # coefficients of 1 - tanh^2
    for n in range(a.order):
        m = n
        acc = 1.0 if m == 0 else 0.0
        for s in range(m + 1):
            acc = acc - binom(m, s) * (out[s] * out[m - s])
        u.append(acc)
        nxt = None
        for j in range(n + 1):
            if _nil(x[j + 1]):
                continue
            term = binom(n, j) * (x[j + 1] * u[n - j])
            nxt = term if nxt is None else nxt + term
        out.append(0.0 if nxt is None else nxt)
    return Jet(tuple(out), a.tag)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "tanh": tanh,
}


def coefficient(v: Any, tag: int, alpha: int) -> Any:
    """The ``alpha``-th coefficient of ``v`` with respect to variable ``tag``.

    Values that do not depend on ``tag`` are constants in it. Jets nested
    outside ``tag`` are mapped coefficient-wise.
    """
    if isinstance(v, Jet):
        if v.tag == tag:
            return v.coeffs[alpha] if alpha <= v.order else 0.0
        if v.tag > tag:
            return Jet(tuple(coefficient(c, tag, alpha) for c in v.coeffs), v.tag)
    return v if alpha == 0 else 0.0


def shifted(v: Any, tag: int, n: int, order: int) -> Jet:
    """The order-``order`` jet of the n-th derivative of ``v`` in ``tag``."""
    return Jet(tuple(coefficient(v, tag, n + a) for a in range(order + 1)), tag)


def as_jet(v: Any, order: int, tag: int = 0) -> Jet:
    """``v`` as a jet of the given order in ``tag`` (constants are lifted)."""
    if isinstance(v, Jet) and v.tag == tag:
        if v.order < order:
            raise ContractViolation(
                f"need an order-{order} jet, got order {v.order}"
            )
        return v if v.order == order else v.truncate(order)
    return shifted(v, tag, 0, order)


# --------------------------------------------------------------------------- #
# Jet points and composition
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class JetPoint:
    """A jet of a curve in R^n: one jet per component, all of one order."""

    components: Tuple[Jet, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        orders = {c.order for c in comps}
        if len(orders) > 1:
            raise ContractViolation(f"mixed jet orders in a point: {sorted(orders)}")
        object.__setattr__(self, "components", comps)

    @property
    def order(self) -> int:
        return self.components[0].order if self.components else 0

    @property
    def tag(self) -> int:
        return self.components[0].tag if self.components else 0

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i: int) -> Jet:
        return self.components[i]


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Leibniz product of two jets of equal order."""
    if a.order != b.order:
        raise ContractViolation(f"jet order mismatch: {a.order} vs {b.order}")
    return Jet(_leibniz(a.coeffs, b.coeffs), a.tag)


def _checked(v: Any, order: int, tag: int) -> Jet:
    out = as_jet(v, order, tag)
    for alpha, c in enumerate(out.coeffs):
        if not is_finite(c):
            raise NonFiniteError("non-finite jet coefficient", index=alpha)
    return out


def jet_compose(f: Callable[..., Any], a: JetPoint) -> Jet:
    """The jet of ``t -> f(curve(t))`` for the curve represented by ``a``."""
    return _checked(f(*a.components), a.order, a.tag)


def jet_compose_point(g: Callable[..., Sequence[Any]], a: JetPoint) -> JetPoint:
    """Vector-valued :func:`jet_compose`."""
    return JetPoint(tuple(_checked(v, a.order, a.tag) for v in g(*a.components)))


def seeded(x: Sequence[Any], v: Sequence[Any], tag: int) -> List[Jet]:
    """Order-1 jets ``x + s v`` in variable ``tag``."""
    return [Jet((xi, vi), tag) for xi, vi in zip(x, v)]


def unit(n: int, b: int) -> List[float]:
    return [1.0 if a == b else 0.0 for a in range(n)]


def directional_derivative(
    f: Callable[..., Any], x: Sequence[Any], v: Sequence[Any]
) -> Any:
    """``d/ds f(x + s v)`` at ``s = 0`` through a single order-1 seed."""
    tag = new_tag()
    out = f(*seeded(x, v, tag))
    d = coefficient(out, tag, 1)
    if not is_finite(d):
        raise NonFiniteError("non-finite directional derivative")
    return d


def gradient(f: Callable[..., Any], x: Sequence[Any]) -> np.ndarray:
    """Gradient of a scalar map from n basis seeds."""
    n = len(x)
    out = [directional_derivative(f, x, unit(n, i)) for i in range(n)]
    return np.array(out, dtype=float) if n else np.zeros(0)
