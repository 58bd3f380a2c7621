"""Structures, axiom checks, the canonical relation and its dual."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from higherlag import presets
from higherlag.algebroid import (
    AlgebroidStructure,
    TEVector,
    TStarEVector,
    anchor_flip_residual,
    anchor_flow_jet,
    bracket_sections,
    check_axioms,
    check_frame,
    epsilon_apply,
    frame_structure,
    halton_points,
    is_second_order,
    kappa_apply,
    pairing_cotangent,
    pairing_tangent,
)
from higherlag.errors import ContractViolation, DomainError, NotInRelation, SchemaError
from higherlag.jetcalc import Jet, new_tag

PLANE_FRAME = [["1", "0"], ["0", "exp(-x1)"]]


@pytest.fixture
def custom_plane():
    return AlgebroidStructure.from_sources(
        2,
        2,
        [["1", "0"], ["0", "exp(x1)"]],
        [[["0", "0"], ["0", "0"]], [["0", "1"], ["-1", "0"]]],
        "custom-plane",
    )


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def test_shapes_are_validated():
    with pytest.raises(SchemaError):
        AlgebroidStructure.from_sources(1, 1, [["1", "0"]], [[["0"]]])
    with pytest.raises(SchemaError):
        AlgebroidStructure.from_sources(1, 1, [["1"]], [[["0", "0"]]])


def test_structure_functions_may_only_use_base_coordinates():
    with pytest.raises(SchemaError, match="t"):
        AlgebroidStructure.from_sources(1, 1, [["t"]], [[["0"]]])


def test_non_skew_bracket_is_antisymmetrized_with_a_warning():
    with pytest.warns(UserWarning, match="not skew"):
        A = AlgebroidStructure.from_sources(
            0, 2, [], [[["0", "1"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
        )
    c = A.c_array([])
    assert c[0, 0, 1] == pytest.approx(0.5)
    assert c[0, 1, 0] == pytest.approx(-0.5)


def test_halton_points_fill_the_box():
    pts = halton_points(3, 16, (-2.0, 2.0))
    assert pts.shape == (16, 3)
    assert np.all(pts > -2.0) and np.all(pts < 2.0)
    assert len({tuple(p) for p in pts}) == 16


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name", ["tangent", "so3-like", "heis3-like", "plane-r2", "plane-r3"]
)
def test_shipped_structures_pass(name):
    report = check_axioms(presets.build(name))
    assert report.passed
    assert report.max_skew == 0.0


def test_rotation_action_passes():
    report = check_axioms(presets.build("rotation-action"), n_samples=16)
    assert report.passed, report


def test_broken_structure_fails_with_unit_residual():
    report = check_axioms(presets.build("broken"))
    assert not report.passed
    assert report.max_compat == pytest.approx(1.0, abs=1e-12)


def test_custom_plane_passes(custom_plane):
    assert check_axioms(custom_plane).passed


def test_axiom_report_renders():
    report = check_axioms(presets.build("broken"))
    text = report.render_text()
    assert "FAIL" in text
    assert "samples" in text
    assert report.to_dict()["kind"] == "check"


# ---------------------------------------------------------------------------
# Brackets and frames
# ---------------------------------------------------------------------------


def test_bracket_of_coordinate_sections():
    A = presets.build("tangent", n=2)
    out = bracket_sections(A, ["1", "0"], ["0", "x1"], [0.3, -0.2])
    assert list(out) == pytest.approx([0.0, 1.0])


def test_frame_structure_reproduces_the_custom_plane(custom_plane):
    rho, c = frame_structure(PLANE_FRAME, [0.4, -0.1])
    assert rho == pytest.approx(custom_plane.rho_matrix([0.4, -0.1]))
    assert c == pytest.approx(custom_plane.c_array([0.4, -0.1]))
    assert check_frame(custom_plane, PLANE_FRAME).passed


def test_singular_frame_is_a_domain_error():
    with pytest.raises(DomainError):
        frame_structure([["x1", "0"], ["0", "1"]], [0.0, 0.0])


def test_frame_comparison_needs_square_structures():
    with pytest.raises(ContractViolation):
        check_frame(presets.build("plane-r3"), PLANE_FRAME)


# ---------------------------------------------------------------------------
# The canonical relation and its dual
# ---------------------------------------------------------------------------


def test_kappa_on_a_lie_algebra_adds_the_bracket():
    A = presets.build("so3-like")
    X = TEVector(
        x=np.zeros(0), y=np.array([0.0, 1.0, 0.0]), xdot=np.zeros(0), ydot=np.zeros(3)
    )
    Y = kappa_apply(A, X, [1.0, 0.0, 0.0])
    assert list(Y.ydot) == pytest.approx([0.0, 0.0, 1.0])
    assert list(Y.y) == [1.0, 0.0, 0.0]


def test_kappa_rejects_unrelated_vectors():
    A = presets.build("tangent")
    X = TEVector(
        x=np.zeros(1), y=np.ones(1), xdot=np.array([1.0]), ydot=np.zeros(1)
    )
    with pytest.raises(NotInRelation) as info:
        kappa_apply(A, X, [2.0])
    assert info.value.residual == pytest.approx(1.0)


vectors = st.lists(
    st.floats(min_value=-2.0, max_value=2.0, allow_nan=False), min_size=13, max_size=13
)


@settings(max_examples=50, deadline=None)
@given(vectors)
def test_epsilon_is_dual_to_kappa(values):
    A = presets.build("plane-r3")
    v = np.array(values)
    x, yt, u, ydot, p = v[0:2], v[2:5], v[5:8], v[8:11], v[11:13]
    piv = np.roll(ydot, 1)
    X = TEVector(x=x, y=u, xdot=A.rho_matrix(x) @ yt, ydot=ydot)
    w = TStarEVector(x=x, y=yt, p=p, piv=piv)
    lhs = pairing_tangent(epsilon_apply(A, w), X)
    rhs = pairing_cotangent(w, kappa_apply(A, X, yt))
    assert lhs == pytest.approx(rhs, abs=1e-10)


@pytest.mark.parametrize("name", ["plane-r2", "plane-r3", "rotation-action"])
def test_anchor_flip_on_compatible_structures(name):
    A = presets.build(name)
    rng = np.random.default_rng(7)
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, A.m)
        yt = rng.standard_normal(A.r)
        X = TEVector(
            x=x,
            y=rng.standard_normal(A.r),
            xdot=A.rho_matrix(x) @ yt,
            ydot=rng.standard_normal(A.r),
        )
        assert anchor_flip_residual(A, X, yt) < 1e-9


def test_second_order_vectors():
    A = presets.build("plane-r2")
    x, y = np.array([0.5, 0.0]), np.array([1.0, 2.0])
    Z = TEVector(x=x, y=y, xdot=A.rho_matrix(x) @ y, ydot=np.zeros(2))
    assert is_second_order(A, Z)
    W = TEVector(x=x, y=y, xdot=np.zeros(2), ydot=np.zeros(2))
    assert not is_second_order(A, W)


def test_anchor_flow_jet_integrates_the_scaling_line():
    A = presets.build("scaling-line")
    tag = new_tag()
    xs = anchor_flow_jet(A, [2.0], [Jet.constant(1.0, 4, tag)], 5, tag)
    assert list(xs[0].coeffs) == pytest.approx([2.0] * 6)
