"""Numeric defaults shared by every module.

Problem files and CLI flags override these through
:meth:`NumericDefaults.merged`; nothing reads environment variables.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping, Optional, Tuple

from .errors import SchemaError


@dataclass(frozen=True)
class NumericDefaults:
    # Jets
    max_jet_order: int = 12
    max_lagrangian_order: int = 6

    # Axiom sampling: quasi-random points in a box, relative tolerance.
    axiom_samples: int = 64
    axiom_tol: float = 1e-8
    axiom_box: Tuple[float, float] = (-1.0, 1.0)

    # Structural identities on unit-scaled random inputs.
    identity_tol: float = 1e-9
    relation_tol: float = 1e-9

    # Base integrator
    integrator_steps: int = 1000
    dense_output_order: int = 8

    # Finite-difference diagnostic for time jets
    fd_step: float = 1e-3
    fd_tol: float = 1e-4

    # Levenberg-Marquardt collocation
    lm_lambda0: float = 1e-3
    lm_shrink: float = 0.5
    lm_grow: float = 4.0
    lm_max_iter: int = 200
    force_tol: float = 1e-6
    boundary_tol: float = 1e-8
    boundary_penalty: float = 1e4

    # Output
    csv_digits: int = 17

    def merged(self, overrides: Optional[Mapping[str, Any]]) -> "NumericDefaults":
        """Return a copy with ``overrides`` applied.

        Raises:
            SchemaError: if a key is not a known setting.
        """
        if not overrides:
            return self
        known = {f.name: f for f in fields(self)}
        unknown = sorted(set(overrides) - set(known))
        if unknown:
            raise SchemaError(f"unknown setting(s): {', '.join(unknown)}")
        coerced = {}
        for key, value in overrides.items():
            current = getattr(self, key)
            if isinstance(current, tuple):
                coerced[key] = tuple(float(v) for v in value)
            elif isinstance(current, bool):
                coerced[key] = bool(value)
            elif isinstance(current, int):
                coerced[key] = int(value)
            else:
                coerced[key] = float(value)
        return replace(self, **coerced)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULTS = NumericDefaults()
