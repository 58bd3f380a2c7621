"""Named algebroid structures and the registry that builds them.

Mirrors the heuristic registry pattern: a preset is just a builder function;
the built-ins are registered the same way a user would register their own.
Structure constants shipped here are inputs for testing, not claimed ground
truth for any physical system.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from . import expr as ex
from .algebroid import AlgebroidStructure
from .errors import SchemaError

Builder = Callable[..., AlgebroidStructure]


class PresetRegistry:
    """Name -> structure builder."""

    def __init__(self) -> None:
        self._builders: Dict[str, Tuple[Builder, str]] = {}

    def register(self, name: str, fn: Builder, *, description: str = "") -> Builder:
        if not name:
            raise ValueError("preset name must be non-empty")
        self._builders[name] = (fn, description or (fn.__doc__ or "").strip())
        return fn

    def preset(self, name: str, *, description: str = ""):
        """Decorator form of :meth:`register`."""

        def deco(f: Builder) -> Builder:
            return self.register(name, f, description=description)

        return deco

    def build(self, name: str, **params: Any) -> AlgebroidStructure:
        try:
            fn, _ = self._builders[name]
        except KeyError:
            known = ", ".join(sorted(self._builders))
            raise SchemaError(f"unknown preset {name!r} (known: {known})") from None
        try:
            return fn(**params)
        except TypeError as e:
            raise SchemaError(f"bad parameters for preset {name!r}: {e}") from e

    def names(self) -> List[str]:
        return sorted(self._builders)

    def list_presets(self) -> List[Tuple[str, str]]:
        out = []
        for n in self.names():
            doc = self._builders[n][1]
            out.append((n, doc.splitlines()[0] if doc else ""))
        return out

    def copy(self) -> "PresetRegistry":
        clone = PresetRegistry()
        clone._builders = dict(self._builders)
        return clone


#: The registry the built-in structures register into.
DEFAULT_PRESETS = PresetRegistry()


def preset(name: str, *, description: str = ""):
    """Register a builder into the default registry."""
    return DEFAULT_PRESETS.preset(name, description=description)


def build(name: str, **params: Any) -> AlgebroidStructure:
    return DEFAULT_PRESETS.build(name, **params)


# --------------------------------------------------------------------------- #
# Helpers
# --------------------------------------------------------------------------- #


def levi_civita(i: int, j: int, k: int) -> int:
    """Permutation sign of zero-based indices (i, j, k)."""
    return (i - j) * (j - k) * (k - i) // 2


def _zeros(*shape: int) -> Any:
    if len(shape) == 1:
        return ["0"] * shape[0]
    return [_zeros(*shape[1:]) for _ in range(shape[0])]


def lie(
    c: Sequence[Sequence[Sequence[Any]]], label: str = "lie"
) -> AlgebroidStructure:
    """A Lie algebra over a point with constants ``c[k][i][j]``."""
    r = len(c)
    return AlgebroidStructure.from_sources(0, r, [], c, label)


# --------------------------------------------------------------------------- #
# Built-ins
# --------------------------------------------------------------------------- #


@preset("tangent")
def tangent(n: int = 1) -> AlgebroidStructure:
    """The tangent bundle of R^n: identity anchor, zero bracket."""
    rho = [["1" if a == i else "0" for i in range(n)] for a in range(n)]
    return AlgebroidStructure.from_sources(n, n, rho, _zeros(n, n, n), f"tangent({n})")


@preset("so3-like")
def so3_like() -> AlgebroidStructure:
    """Lie algebra over a point with Levi-Civita constants c^k_ij = eps_kij."""
    c = [[[levi_civita(k, i, j) for j in range(3)] for i in range(3)] for k in range(3)]
    return lie(c, "so3-like")


@preset("heis3-like")
def heis3_like() -> AlgebroidStructure:
    """Lie algebra over a point with the single bracket [e1, e2] = e3."""
    c = _zeros(3, 3, 3)
    c[2][0][1] = "1"
    c[2][1][0] = "-1"
    return lie(c, "heis3-like")


@preset("scaling-line")
def scaling_line() -> AlgebroidStructure:
    """R^1 with anchor rho(x) = x and rank one."""
    return AlgebroidStructure.from_sources(1, 1, [["x1"]], [[["0"]]], "scaling-line")


@preset("plane-r2")
def plane_r2() -> AlgebroidStructure:
    """Frame d1, x1 d1 + d2 of the plane; [e1, e2] = e1."""
    c = _zeros(2, 2, 2)
    c[0][0][1] = "1"
    c[0][1][0] = "-1"
    return AlgebroidStructure.from_sources(
        2, 2, [["1", "x1"], ["0", "1"]], c, "plane-r2"
    )


@preset("plane-r3")
def plane_r3() -> AlgebroidStructure:
    """Rank-three bundle over the plane spanned by d1, d2, x1 d2.

    The anchor has a kernel, so the bracket may carry x-dependent terms;
    ``[e1, e3] = (1 - x1 x2) e2 + x2 e3`` is one valid choice.
    """
    c = _zeros(3, 3, 3)
    c[1][0][2] = "1 - x1*x2"
    c[1][2][0] = "x1*x2 - 1"
    c[2][0][2] = "x2"
    c[2][2][0] = "-x2"
    rho = [["1", "0", "0"], ["0", "1", "x1"]]
    return AlgebroidStructure.from_sources(2, 3, rho, c, "plane-r3")


@preset("rotation-action")
def rotation_action() -> AlgebroidStructure:
    """Infinitesimal rotations of R^3: rho_i(x) = e_i x x, c^i_jk = -eps_ijk."""
    names = ex.base_names(3)
    rho = _zeros(3, 3)
    for a in range(3):
        for i in range(3):
            terms = []
            for b in range(3):
                s = levi_civita(a, i, b)
                if s:
                    terms.append(("" if s > 0 else "-") + names[b])
            rho[a][i] = " + ".join(terms).replace("+ -", "- ") if terms else "0"
    c = [
        [[-levi_civita(i, j, k) for k in range(3)] for j in range(3)] for i in range(3)
    ]
    return AlgebroidStructure.from_sources(3, 3, rho, c, "rotation-action")


@preset("broken")
def broken() -> AlgebroidStructure:
    """Identity anchor on R^1 with a bracket the anchor cannot carry."""
    c = _zeros(2, 2, 2)
    c[0][0][1] = "1"
    c[0][1][0] = "-1"
    return AlgebroidStructure.from_sources(1, 2, [["1", "0"]], c, "broken")


def product(
    *structures: AlgebroidStructure, label: Optional[str] = None
) -> AlgebroidStructure:
    """Direct product: block anchor and bracket, base coordinates renumbered."""
    m = sum(s.m for s in structures)
    r = sum(s.r for s in structures)
    rho: List[List[ex.Expr]] = [[ex.ZERO] * r for _ in range(m)]
    c: List[List[List[ex.Expr]]] = [
        [[ex.ZERO] * r for _ in range(r)] for _ in range(r)
    ]
    om = orr = 0
    for s in structures:
        rename = {
            f"x{a + 1}": ex.Var(f"x{a + 1 + om}") for a in range(s.m)
        }
        for a in range(s.m):
            for i in range(s.r):
                rho[om + a][orr + i] = ex.substitute(s.rho[a][i], rename)
        for k in range(s.r):
            for i in range(s.r):
                for j in range(s.r):
                    c[orr + k][orr + i][orr + j] = ex.substitute(s.c[k][i][j], rename)
        om += s.m
        orr += s.r
    name = label or " x ".join(s.label or "?" for s in structures)
    return AlgebroidStructure(
        m, r, tuple(map(tuple, rho)), tuple(tuple(map(tuple, mat)) for mat in c), name
    )


@preset("product")
def _product_preset(factors: Sequence[Any] = ()) -> AlgebroidStructure:
    """Product of named presets, e.g. ``factors=["tangent", "so3-like"]``."""
    built = []
    for f in factors:
        if isinstance(f, AlgebroidStructure):
            built.append(f)
        elif isinstance(f, str):
            built.append(build(f))
        elif isinstance(f, dict) and "preset" in f:
            params = {k: v for k, v in f.items() if k != "preset"}
            built.append(build(f["preset"], **params))
        else:
            raise SchemaError(f"cannot build a product factor from {f!r}")
    if not built:
        raise SchemaError("a product needs at least one factor")
    return product(*built)
