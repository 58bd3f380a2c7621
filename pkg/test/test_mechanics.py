"""Lagrangians, paths and the force/momentum pipeline."""

import math

import numpy as np
import pytest

from higherlag import presets
from higherlag.config import DEFAULTS
from higherlag.errors import ConsistencyError, ContractViolation, SchemaError
from higherlag.mechanics import (
    AdmissiblePath,
    BoundaryCondition,
    ExprCurve,
    Lagrangian,
    action,
    force,
    force_samples,
    gauge_residual,
    generator_jet,
    integrate_base,
    momentum,
    transversality_check,
    variation_apply,
    variational_identity_residual,
)
from higherlag.prolong import EkPoint


@pytest.fixture
def quartic():
    """x(t) = t^4 on the tangent line with L = x''^2 / 2."""
    A = presets.build("tangent")
    L = Lagrangian.from_source("0.5 * y1_1^2", 2, 1, 1)
    path = AdmissiblePath.from_sources(["4 * t^3"], [0.0], (0.0, 1.0), steps=50)
    return A, L, path


# ---------------------------------------------------------------------------
# Lagrangians and paths
# ---------------------------------------------------------------------------


def test_lagrangian_names_and_value():
    L = Lagrangian.from_source("x1 * y1_0 + y2_1^2", 2, 1, 2)
    assert L.names() == ["x1", "y1_0", "y1_1", "y2_0", "y2_1"]
    assert L.value(EkPoint(2, [2.0], [[3.0, 0.0], [0.0, 4.0]])) == 22.0


def test_lagrangian_differential():
    L = Lagrangian.from_source("x1 * y1_0 + y2_1^2", 2, 1, 2)
    psi = L.differential(EkPoint(2, [2.0], [[3.0, 0.0], [0.0, 4.0]]))
    assert psi.dx == (3.0,)
    assert psi.dy == ((2.0, 0.0), (0.0, 8.0))


def test_lagrangians_are_autonomous():
    with pytest.raises(SchemaError, match="autonomous"):
        Lagrangian.from_source("t * y1_0", 1, 1, 1)


def test_lagrangian_order_is_capped():
    with pytest.raises(ContractViolation, match="max_lagrangian_order"):
        Lagrangian.from_source("y1_0", DEFAULTS.max_lagrangian_order + 1, 1, 1)


def test_lagrangian_names_outside_the_bundle_are_rejected():
    with pytest.raises(SchemaError):
        Lagrangian.from_source("y1_2", 2, 1, 1)


def test_path_interval_must_be_increasing():
    with pytest.raises(SchemaError):
        AdmissiblePath.from_sources(["t"], [0.0], (1.0, 1.0))


def test_path_expressions_only_see_time():
    with pytest.raises(SchemaError):
        ExprCurve.from_sources(["x1 * t"])


def test_boundary_kind_is_validated():
    with pytest.raises(SchemaError):
        BoundaryCondition("periodic")


# ---------------------------------------------------------------------------
# Base integration
# ---------------------------------------------------------------------------


def test_base_follows_the_anchor_on_the_scaling_line():
    A = presets.build("scaling-line")
    path = AdmissiblePath.from_sources(["1"], [2.0], (0.0, 1.0), steps=200)
    traj = integrate_base(A, path)
    assert traj.value(1.0)[0] == pytest.approx(2.0 * math.e, rel=1e-9)
    assert traj.value(0.503)[0] == pytest.approx(2.0 * math.exp(0.503), rel=1e-9)


def test_base_of_the_quartic_is_exact(quartic):
    A, _, path = quartic
    traj = integrate_base(A, path)
    assert traj.value(0.5)[0] == pytest.approx(0.0625, abs=1e-13)


def test_dimension_mismatch_is_a_contract_violation(quartic):
    A, _, path = quartic
    L = Lagrangian.from_source("y1_0^2 + y2_0^2", 1, 2, 2)
    with pytest.raises(ContractViolation):
        force(A, L, path, 0.5)


# ---------------------------------------------------------------------------
# Force and momentum
# ---------------------------------------------------------------------------


def test_quartic_force_is_constant(quartic):
    A, L, path = quartic
    samples = force_samples(A, L, path, np.linspace(0.0, 1.0, 5))
    for s in samples:
        assert s.F == pytest.approx(np.array([24.0]))


def test_quartic_momentum(quartic):
    A, L, path = quartic
    M = momentum(A, L, path, 0.5)
    assert M.m == pytest.approx(np.array([[3.0, -12.0]]))
    assert M.coordinates == pytest.approx(np.array([[3.0, -12.0]]))
    assert M.basejet.shape == (1, 2)
    assert M.basejet[0, 0] == pytest.approx(0.0625)


def test_external_force_is_subtracted(quartic):
    A, L, path = quartic
    assert force(A, L, path, 0.3, external_force=["24"]).F == pytest.approx(
        np.array([0.0]), abs=1e-10
    )
    with pytest.raises(SchemaError):
        force(A, L, path, 0.3, external_force=["1", "2"])


def test_finite_difference_diagnostic_agrees(quartic):
    A, L, path = quartic
    F = force(A, L, path, 0.5, method="fd").F
    assert F == pytest.approx(np.array([24.0]), rel=DEFAULTS.fd_tol)
    with pytest.raises(SchemaError, match="unknown force method"):
        force(A, L, path, 0.5, method="spline")


def test_finite_differences_on_a_nonlinear_structure():
    A = presets.build("plane-r2")
    L = Lagrangian.from_source("y1_0^2 + x1*y2_0^2 + y2_1^2", 2, 2, 2)
    path = AdmissiblePath.from_sources(
        ["sin(t)", "t^2 + 1"], [0.2, -0.1], (0.0, 1.0), steps=200
    )
    traj = integrate_base(A, path)
    F = force(A, L, path, 0.5, trajectory=traj).F
    G = force(A, L, path, 0.5, method="fd", trajectory=traj).F
    scale = max(1.0, float(np.max(np.abs(F))))
    assert float(np.max(np.abs(F - G))) / scale < DEFAULTS.fd_tol


def test_adding_a_constant_changes_nothing(quartic):
    A, L, path = quartic
    report = gauge_residual(A, L, path, 0.4, shift=3.5)
    assert report.passed
    assert report.residual == 0.0


# ---------------------------------------------------------------------------
# Variations, action and boundaries
# ---------------------------------------------------------------------------


def test_generator_jet():
    b = ExprCurve.from_sources(["t^3", "1"])
    assert generator_jet(b, 1.0, 2).tolist() == [[1.0, 3.0, 6.0], [1.0, 0.0, 0.0]]


def test_variation_on_the_tangent_bundle_is_the_complete_lift():
    A = presets.build("tangent")
    L = Lagrangian.from_source("y1_0^2", 1, 1, 1)
    path = AdmissiblePath.from_sources(["t"], [0.0], (0.0, 1.0), steps=20)
    b = ExprCurve.from_sources(["t^2"])
    delta = variation_apply(A, L, path, b, 0.5)
    assert delta == pytest.approx(np.array([0.25, 1.0]))


def test_variation_rejects_a_singular_basis(quartic):
    A, L, path = quartic
    b = ExprCurve.from_sources(["t"])
    with pytest.raises(ConsistencyError):
        variation_apply(A, L, path, b, 0.5, basis=np.zeros((3, 3)))


@pytest.mark.parametrize("name,k", [("tangent", 2), ("plane-r3", 2), ("so3-like", 3)])
def test_variational_identity(name, k):
    A = presets.build(name)
    names = Lagrangian.from_source("0", k, A.m, A.r).names()
    source = " + ".join(f"{1 + n % 3}*{v}^2" for n, v in enumerate(names))
    L = Lagrangian.from_source(source + f" + {names[-1]}*{names[0]}", k, A.m, A.r)
    y = ["t^2 + 0.1", "sin(t)", "1 - t"][: A.r]
    path = AdmissiblePath.from_sources(y, [0.3] * A.m, (0.0, 1.0), steps=100)
    b = ExprCurve.from_sources(["t^3 - t", "cos(t)", "0.5*t"][: A.r])
    traj = integrate_base(A, path)
    for t in (0.2, 0.7):
        assert variational_identity_residual(A, L, path, b, t, traj) < 1e-7


def test_action_by_simpson_quadrature():
    A = presets.build("tangent")
    L = Lagrangian.from_source("0.5 * y1_0^2", 1, 1, 1)
    path = AdmissiblePath.from_sources(["2 * t"], [0.0], (0.0, 1.0), steps=10)
    assert action(A, L, path) == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_fixed_boundaries_need_no_momentum(quartic):
    A, L, path = quartic
    report = transversality_check(A, L, path, BoundaryCondition("fixed"))
    assert report.passed
    assert report.residuals == []


def test_free_boundaries_need_vanishing_momentum(quartic):
    A, L, path = quartic
    report = transversality_check(A, L, path, BoundaryCondition("free"))
    assert not report.passed
    assert report.residuals == pytest.approx([0.0, 24.0])
    np.testing.assert_allclose(report.end, [[12.0, -24.0]], atol=1e-9)


def test_spanned_boundaries_pair_endpoint_jets(quartic):
    A, L, path = quartic
    bc = BoundaryCondition(
        "spanned", pairs=[(np.zeros((1, 2)), np.array([[1.0, 1.0]]))]
    )
    report = transversality_check(A, L, path, bc)
    assert report.residuals == pytest.approx([12.0])
    assert not report.passed
    assert "spanned" in report.render_text()
