"""Closed-form Euler-Lagrange families against the eps_k pipeline."""

import numpy as np
import pytest

from higherlag import presets
from higherlag.errors import InapplicableFamily, SchemaError
from higherlag.mechanics import (
    AdmissiblePath,
    Lagrangian,
    force,
    integrate_base,
    momentum,
)
from higherlag.oracles import (
    DEFAULT_ORACLES,
    lie_eps_k_closed_form,
    oracle_el,
    oracle_momentum,
    path_derivatives,
)
from higherlag.prolong import EkCovector, EkPoint, eps_k

TIMES = [0.1, 0.45, 0.9]


def quartic():
    A = presets.build("tangent")
    L = Lagrangian.from_source("0.5 * y1_1^2", 2, 1, 1)
    path = AdmissiblePath.from_sources(["4 * t^3"], [0.0], (0.0, 1.0), steps=50)
    return A, L, path


def test_family_names():
    assert DEFAULT_ORACLES.names() == [
        "algebroid_k1",
        "algebroid_k2",
        "euler_poincare",
        "hamel_k2",
        "tangent",
    ]


def test_unknown_family_is_a_schema_error():
    A, L, path = quartic()
    with pytest.raises(SchemaError, match="unknown oracle family"):
        oracle_el(A, L, path, 0.5, "lagrange")
    with pytest.raises(SchemaError, match="unknown momentum oracle"):
        oracle_momentum(A, L, path, 0.5, family="euler_poincare")


def test_path_derivatives_of_the_quartic():
    A, L, path = quartic()
    D = path_derivatives(A, L, path, 0.5, 2)
    assert D.y[0].tolist() == pytest.approx([0.5, 3.0])
    assert D.dL_dy(0, 1) == pytest.approx(3.0)
    assert D.dL_dy(0, 1, 2) == pytest.approx(24.0)


@pytest.mark.parametrize("t", TIMES)
def test_tangent_family_on_the_quartic(t):
    A, L, path = quartic()
    assert oracle_el(A, L, path, t, "tangent") == pytest.approx([24.0])
    assert force(A, L, path, t).F == pytest.approx([24.0])
    expected = [[12 * t**2, -24 * t]]
    np.testing.assert_allclose(oracle_momentum(A, L, path, t), expected, atol=1e-9)
    np.testing.assert_allclose(momentum(A, L, path, t).m, expected, atol=1e-9)


@pytest.mark.parametrize(
    "family,structure,k,source",
    [
        ("tangent", ("tangent", {"n": 2}), 3, "y1_2^2 + x1*y2_0*y1_1 + x2^2*y2_1"),
        ("algebroid_k1", ("plane-r3", {}), 1, "y1_0^2 + x1*y2_0^2 + y3_0*y1_0*x2"),
        ("algebroid_k2", ("plane-r3", {}), 2, "y1_1^2 + x2*y3_0^2 + y2_1*y3_0"),
        ("euler_poincare", ("so3-like", {}), 2, "y1_1^2 + 2*y2_1^2 + y3_0*y1_1"),
        ("euler_poincare", ("heis3-like", {}), 3, "y3_2^2 + y1_0*y2_1"),
    ],
)
def test_families_match_the_pipeline(family, structure, k, source):
    name, params = structure
    A = presets.build(name, **params)
    L = Lagrangian.from_source(source, k, A.m, A.r)
    y = ["sin(t) + 0.2", "t^2 - 0.5*t", "cos(2*t)"][: A.r]
    path = AdmissiblePath.from_sources(y, [0.3] * A.m, (0.0, 1.0), steps=100)
    traj = integrate_base(A, path)
    for t in TIMES:
        F = force(A, L, path, t, trajectory=traj).F
        G = oracle_el(A, L, path, t, family, trajectory=traj)
        assert F == pytest.approx(G, rel=1e-7, abs=1e-6)


def test_hamel_family_on_a_product():
    A = presets.product(presets.build("tangent", n=1), presets.build("so3-like"))
    L = Lagrangian.from_source("y1_1^2 + x1^2*y2_1^2 + y3_0*y4_1 + y4_1^2", 2, 1, 4)
    path = AdmissiblePath.from_sources(
        ["t", "sin(t)", "t^2", "1 - t"], [0.1], (0.0, 1.0), steps=100
    )
    traj = integrate_base(A, path)
    for t in TIMES:
        F = force(A, L, path, t, trajectory=traj).F
        G = oracle_el(A, L, path, t, "hamel_k2", trajectory=traj)
        assert F == pytest.approx(G, rel=1e-7, abs=1e-6)


def test_steady_rotation_of_a_symmetric_body_is_force_free():
    A = presets.build("so3-like")
    L = Lagrangian.from_source("0.5*(y1_0^2 + y2_0^2 + y3_0^2)", 1, 0, 3)
    path = AdmissiblePath.from_sources(["1", "2", "-0.5"], [], (0.0, 1.0))
    assert np.max(np.abs(force(A, L, path, 0.4).F)) < 1e-12
    assert oracle_el(A, L, path, 0.4, "algebroid_k1") == pytest.approx([0.0] * 3)


@pytest.mark.parametrize(
    "family,structure,k",
    [
        ("tangent", "so3-like", 1),
        ("tangent", "plane-r2", 1),
        ("euler_poincare", "tangent", 1),
        ("algebroid_k1", "so3-like", 2),
        ("algebroid_k2", "so3-like", 1),
        ("hamel_k2", "tangent", 2),
        ("hamel_k2", "plane-r3", 2),
    ],
)
def test_families_refuse_structures_they_do_not_describe(family, structure, k):
    A = presets.build(structure)
    L = Lagrangian.from_source("0", k, A.m, A.r)
    path = AdmissiblePath.from_sources(["t"] * A.r, [0.0] * A.m, (0.0, 1.0), steps=10)
    with pytest.raises(InapplicableFamily):
        oracle_el(A, L, path, 0.5, family)


@pytest.mark.parametrize("name", ["so3-like", "heis3-like"])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_lie_closed_form_of_the_dual_map(name, k):
    A = presets.build(name)
    rng = np.random.default_rng(10 * k)
    for _ in range(5):
        e = EkPoint(k, [], rng.standard_normal((3, k)).tolist())
        psi = EkCovector(e, [], rng.standard_normal((3, k)).tolist())
        closed = lie_eps_k_closed_form(A, psi)
        assert closed.shape == (3, k + 1)
        assert closed == pytest.approx(eps_k(A, psi).xi_array(), rel=1e-9, abs=1e-9)


def test_lie_closed_form_needs_a_lie_algebra():
    A = presets.build("plane-r2")
    e = EkPoint(1, [0.0, 0.0], [[1.0], [0.0]])
    with pytest.raises(InapplicableFamily):
        lie_eps_k_closed_form(A, EkCovector(e, [0.0, 0.0], [[1.0], [1.0]]))


def test_registry_copy_is_isolated():
    registry = DEFAULT_ORACLES.copy()

    @registry.family("zero")
    def zero(A, L, path, t, trajectory):
        return np.zeros(A.r)

    A, L, path = quartic()
    assert oracle_el(A, L, path, 0.5, "zero", registry=registry).tolist() == [0.0]
    assert "zero" not in DEFAULT_ORACLES.names()
    with pytest.raises(ValueError):
        registry.register("", zero)
