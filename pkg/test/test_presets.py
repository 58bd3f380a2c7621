import pytest

from higherlag import presets
from higherlag.algebroid import AlgebroidStructure, check_axioms
from higherlag.errors import SchemaError


def test_builtin_names():
    names = presets.DEFAULT_PRESETS.names()
    for expected in (
        "tangent",
        "so3-like",
        "heis3-like",
        "scaling-line",
        "plane-r2",
        "plane-r3",
        "rotation-action",
        "broken",
        "product",
    ):
        assert expected in names


def test_descriptions_come_from_docstrings():
    described = dict(presets.DEFAULT_PRESETS.list_presets())
    assert described["tangent"].startswith("The tangent bundle")


def test_unknown_preset_and_bad_parameters():
    with pytest.raises(SchemaError, match="unknown preset"):
        presets.build("nope")
    with pytest.raises(SchemaError, match="bad parameters"):
        presets.build("so3-like", n=2)


def test_tangent_dimensions():
    A = presets.build("tangent", n=3)
    assert (A.m, A.r) == (3, 3)
    assert A.rho_matrix([0.0, 0.0, 0.0]).tolist() == [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ]


def test_levi_civita():
    assert presets.levi_civita(0, 1, 2) == 1
    assert presets.levi_civita(1, 0, 2) == -1
    assert presets.levi_civita(0, 0, 2) == 0


def test_product_is_block_diagonal():
    A = presets.build("product", factors=[{"preset": "tangent", "n": 1}, "so3-like"])
    assert (A.m, A.r) == (1, 4)
    assert A.label == "tangent(1) x so3-like"
    c = A.c_array([0.3])
    assert c[3, 1, 2] == 1.0
    assert c[0].tolist() == [[0.0] * 4] * 4
    assert A.rho_matrix([0.3]).tolist() == [[1.0, 0.0, 0.0, 0.0]]
    assert check_axioms(A).passed


def test_product_renames_base_coordinates():
    A = presets.product(presets.build("scaling-line"), presets.build("scaling-line"))
    assert A.rho_matrix([2.0, 3.0]).tolist() == [[2.0, 0.0], [0.0, 3.0]]


def test_empty_product_is_rejected():
    with pytest.raises(SchemaError):
        presets.build("product", factors=[])


def test_registry_copy_is_isolated():
    registry = presets.DEFAULT_PRESETS.copy()

    @registry.preset("line")
    def line() -> AlgebroidStructure:
        """A point with a one-dimensional abelian algebra."""
        return presets.lie([[[0]]], "line")

    assert registry.build("line").r == 1
    assert "line" not in presets.DEFAULT_PRESETS.names()
