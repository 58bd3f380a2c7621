"""Prolongations: embedding, the dual map, pairings and integration by parts."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from higherlag import presets
from higherlag.algebroid import TStarEVector, epsilon_apply
from higherlag.errors import ConsistencyError, ContractViolation
from higherlag.prolong import (
    EkCovector,
    EkPoint,
    IteratedTangentElement,
    MixedCovectorJet,
    P_k_project,
    SemiHolonomicBlock,
    binom_identity_a,
    binom_identity_check,
    dual_inclusion_project,
    embed_Ek,
    eps_k,
    eps_kM_rescale,
    green_identity_check,
    holonomic_inclusion,
    momenta_map,
    momentum_coordinates,
    pairing_iterated,
    pairing_momentum,
    pairing_Tk,
    upsilon,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# ---------------------------------------------------------------------------
# Points and embedding
# ---------------------------------------------------------------------------


def test_point_rows_must_have_k_entries():
    with pytest.raises(ContractViolation):
        EkPoint(2, [0.0], [[1.0]])
    with pytest.raises(ContractViolation):
        EkPoint(0, [], [])


def test_coordinates_round_trip_through_flat_layout():
    e = EkPoint(2, [0.5, 1.0], [[1.0, 2.0], [3.0, 4.0]])
    assert e.coordinates() == [0.5, 1.0, 1.0, 2.0, 3.0, 4.0]
    assert EkPoint.from_coordinates(2, 2, 2, e.coordinates()) == e


def test_tangent_embedding_is_the_fiber_jet():
    A = presets.build("tangent")
    xs = embed_Ek(A, EkPoint(3, [1.0], [[2.0, 3.0, 4.0]]))
    assert list(xs[0].coeffs) == [1.0, 2.0, 3.0, 4.0]


# ---------------------------------------------------------------------------
# Binomial identities and the block maps
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("k", range(13))
def test_binomial_identities_hold_exactly(k):
    report = binom_identity_check(k)
    assert report.passed
    assert report.checked == k + (k + 1) * (k + 2) // 2


def test_binomial_identity_range_is_enforced():
    with pytest.raises(ContractViolation):
        binom_identity_a(3, 3)


def test_upsilon_and_momenta_at_low_order():
    xi = [[[1.0, 2.0], [3.0, 4.0]]]
    assert upsilon(xi) == [2.0 - 3.0]
    assert momenta_map(xi) == [[1.0, 2 * 2.0 - 3.0]]
    assert momenta_map([[[5.0]]]) == [[5.0]]


def test_momentum_coordinates_are_binomially_averaged():
    assert momentum_coordinates([[1.0, 4.0, 3.0]]).tolist() == [[1.0, 2.0, 3.0]]


def test_rescale_reverses_and_divides():
    assert eps_kM_rescale([1.0, 4.0, 9.0], 2) == [9.0, 2.0, 1.0]
    with pytest.raises(ContractViolation):
        eps_kM_rescale([1.0], 2)


# ---------------------------------------------------------------------------
# Pairings
# ---------------------------------------------------------------------------


def test_pairing_tk_rank_one():
    assert pairing_Tk([1.0, 2.0], [3.0, 4.0]) == 1.0 * 4.0 + 2.0 * 3.0
    with pytest.raises(ContractViolation):
        pairing_Tk([1.0, 2.0], [3.0, 4.0, 5.0])


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=0, max_value=4), st.integers(1, 3))
def test_momentum_pairing_equals_tk_pairing_of_averaged_coordinates(seed, K, r):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((r, K + 1))
    v = rng.standard_normal((r, K + 1))
    lhs = pairing_momentum(m, v)
    rhs = pairing_Tk(momentum_coordinates(m), v)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4), st.integers(1, 3))
def test_green_identity(seed, k, r):
    rng = np.random.default_rng(seed)
    block = SemiHolonomicBlock(
        k, rng.standard_normal((2, 2 * k + 1)), rng.standard_normal((r, k + 1, k + 1))
    )
    v = rng.standard_normal((r, k + 1))
    assert green_identity_check(block, v) < 1e-9


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4), st.integers(1, 3))
def test_averaging_projection_is_dual_to_the_diagonal(seed, k, r):
    rng = np.random.default_rng(seed)
    base = holonomic_inclusion(rng.standard_normal((2, k + 1)), k)
    X = IteratedTangentElement(k, base, rng.standard_normal((2,) * k + (r,)))
    phi = rng.standard_normal((r, k + 1))
    lhs = pairing_Tk(phi, P_k_project(X))
    rhs = pairing_iterated(holonomic_inclusion(phi, k), X.fiber, k)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_projection_needs_a_holonomic_base():
    base = np.zeros((2, 2, 1))
    base[1, 0] = 1.0
    X = IteratedTangentElement(2, base, np.zeros((2, 2, 1)))
    with pytest.raises(ContractViolation):
        P_k_project(X)


def test_block_shapes_are_checked():
    with pytest.raises(ContractViolation):
        SemiHolonomicBlock(2, np.zeros((1, 5)), np.zeros((1, 2, 3)))
    with pytest.raises(ContractViolation):
        SemiHolonomicBlock(2, np.zeros((1, 4)), np.zeros((1, 3, 3)))


# ---------------------------------------------------------------------------
# The dual map
# ---------------------------------------------------------------------------


def test_first_order_dual_map_matches_epsilon():
    A = presets.build("plane-r3")
    e = EkPoint(1, [0.3, -0.4], [[1.0], [0.5], [-2.0]])
    psi = EkCovector(e, [0.7, 0.2], [[1.5], [-1.0], [0.25]])
    zeta = eps_k(A, psi).xi_array()
    direct = epsilon_apply(
        A,
        TStarEVector(
            x=np.array(e.x),
            y=np.array([1.0, 0.5, -2.0]),
            p=np.array([0.7, 0.2]),
            piv=np.array([1.5, -1.0, 0.25]),
        ),
    )
    assert zeta[:, 0] == pytest.approx(direct.xi)
    assert zeta[:, 1] == pytest.approx(direct.xidot)


@pytest.mark.parametrize("k", [2, 3])
def test_dual_map_ignores_the_extension(k):
    A = presets.build("plane-r2")
    rng = np.random.default_rng(k)
    e = EkPoint(k, list(rng.uniform(-1, 1, 2)), rng.standard_normal((2, k)).tolist())
    psi = EkCovector(e, list(rng.standard_normal(2)), rng.standard_normal((2, k)))
    plain = eps_k(A, psi).xi_array()
    for _ in range(5):
        ext = rng.standard_normal((2, k - 1))
        assert eps_k(A, psi, extension=ext).xi_array() == pytest.approx(
            plain, rel=1e-9, abs=1e-9
        )


def test_projection_rejects_a_non_semi_holonomic_base():
    Xi = MixedCovectorJet(
        order=1,
        x=[[0.0, 1.0]],
        xi=[[0.0, 0.0]],
        xdot=[[5.0, 0.0]],
        xidot=[[0.0, 0.0]],
    )
    with pytest.raises(ConsistencyError):
        dual_inclusion_project(Xi)
