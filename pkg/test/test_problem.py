from pathlib import Path

import numpy as np
import pytest

import higherlag
from higherlag.errors import ContractViolation, SchemaError
from higherlag.problem import build_algebroid, load_problem, parse_problem

FIXTURES = Path(higherlag.__file__).parent / "fixtures"

QUARTIC = {
    "algebroid": {"preset": "tangent", "n": 1},
    "order": 2,
    "lagrangian": "0.5*y1_1^2",
    "path": {"y": ["4*t^3"], "x0": [0.0]},
    "interval": [0.0, 1.0],
}


def with_(**changes):
    data = dict(QUARTIC)
    data.update(changes)
    return data


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_fixtures_load(path):
    problem = load_problem(path)
    assert problem.source == str(path)
    assert problem.structure.r >= 1


def test_quartic_fixture():
    problem = load_problem(FIXTURES / "tangent_quartic.yaml")
    assert problem.order == 2
    assert problem.samples == 11
    assert problem.sample_times().tolist() == pytest.approx(np.linspace(0, 1, 11))
    assert problem.require_path().x0 == (0.0,)
    assert problem.boundary_condition().kind == "fixed"


def test_structure_only_files_lack_the_other_sections():
    problem = load_problem(FIXTURES / "broken.yaml")
    with pytest.raises(SchemaError, match="order"):
        problem.require_lagrangian()
    with pytest.raises(SchemaError, match="path"):
        problem.require_path()
    with pytest.raises(SchemaError, match="interval"):
        problem.sample_times()


def test_json_is_accepted(tmp_path):
    target = tmp_path / "line.json"
    target.write_text('{"algebroid": "so3-like"}', encoding="utf-8")
    assert load_problem(target).structure.label == "so3-like"


def test_unreadable_files_are_schema_errors(tmp_path):
    with pytest.raises(SchemaError, match="cannot read"):
        load_problem(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("algebroid: [unclosed", encoding="utf-8")
    with pytest.raises(SchemaError, match="not valid YAML"):
        load_problem(bad)


@pytest.mark.parametrize(
    "data,match",
    [
        ([1, 2], "mapping"),
        ({"order": 1}, "algebroid"),
        (with_(colour="red"), "unknown key"),
        ({"algebroid": "tangent", "lagrangian": "y1_0"}, "together"),
        ({"algebroid": "tangent", "order": 1}, "together"),
        (with_(order=0), "order"),
        (with_(order=True), "order"),
        (with_(interval=[1.0, 0.0]), "t0 < t1"),
        (with_(interval=[0.0]), "2 entries"),
        (with_(samples=1), "samples"),
        (with_(path={"y": ["t"], "x0": [0.0], "dt": 0.1}), "unknown key"),
        (with_(path={"x0": [0.0]}), "needs 'y'"),
        (with_(path={"y": ["t"]}), "x0"),
        (with_(path={"y": ["t", "t"], "x0": [0.0]}), "list of 1"),
        (with_(external_force=["1", "2"]), "external_force"),
        (with_(boundary={"kind": "periodic"}), "boundary kind"),
        (with_(boundary={"kind": "spanned"}), "pairs"),
        (with_(boundary={"kind": "fixed", "pairs": []}), "only valid"),
        (with_(boundary={"start": {"z": [0.0]}}), "unknown key"),
        (with_(boundary={"start": {"x": [0.0, 1.0]}}), "1 entries"),
        (with_(solver={"degree": -1}), "solver degree"),
        (with_(solver={"colour": 1}), "unknown setting"),
        (with_(tolerances={"force_tol": 1e-3, "mystery": 1}), "unknown setting"),
        ({"algebroid": {"n": 1}}, "preset"),
        ({"algebroid": {"preset": "custom", "m": 1}}, "needs"),
        ({"algebroid": {"preset": "lie"}}, "structure constants"),
    ],
)
def test_schema_errors(data, match):
    with pytest.raises(SchemaError, match=match):
        parse_problem(data)


def test_lagrangian_order_limit_is_a_contract_violation():
    with pytest.raises(ContractViolation):
        parse_problem(with_(order=7, lagrangian="y1_0"))


def test_spanned_pairs():
    data = with_(
        boundary={
            "kind": "spanned",
            "pairs": [{"end": [[1.0, 1.0]]}, {"start": [[0.0, 1.0]]}],
        }
    )
    bc = parse_problem(data).boundary_condition()
    assert bc.kind == "spanned"
    assert [v1.tolist() for _, v1 in bc.pairs] == [[[1.0, 1.0]], [[0.0, 0.0]]]
    bad = with_(boundary={"kind": "spanned", "pairs": [{"end": [1.0, 1.0]}]})
    with pytest.raises(SchemaError, match="shape"):
        parse_problem(bad)


def test_free_kind_frees_both_ends():
    problem = parse_problem(with_(boundary={"kind": "free"}))
    assert problem.start.free and problem.end.free
    assert problem.boundary_condition().kind == "free"


def test_one_free_end_implies_a_spanned_boundary():
    problem = parse_problem(
        with_(boundary={"start": {"x": [0.0], "y0": [0.0]}, "end": {"free": True}})
    )
    bc = problem.boundary_condition()
    assert bc.kind == "spanned"
    assert len(bc.pairs) == 2


def test_endpoint_derivative_orders():
    problem = parse_problem(
        with_(boundary={"start": {"x": [0.0], "y0": [1.0], "y1": [2.0]}})
    )
    assert problem.start.y == {0: [1.0], 1: [2.0]}


def test_tolerances_and_solver_settings_merge():
    problem = parse_problem(
        with_(tolerances={"force_tol": 1e-4}, solver={"degree": 7, "lm_max_iter": 5})
    )
    assert problem.settings.force_tol == 1e-4
    assert problem.settings.lm_max_iter == 5
    assert problem.solver == {"degree": 7}
    assert problem.with_settings({"boundary_tol": 1e-3}).settings.boundary_tol == 1e-3
    assert problem.settings.boundary_tol == 1e-8


def test_collocation_problem_from_a_file():
    problem = load_problem(FIXTURES / "cubic_spline.yaml")
    p = problem.collocation_problem()
    assert p.degree == 3
    assert p.start.x == [0.0] and p.end.y == {0: [0.0]}
    assert p.base_start == [0.0]


def test_custom_and_lie_algebroids():
    A = build_algebroid(
        {
            "preset": "custom",
            "m": 1,
            "r": 1,
            "rho": [["x1"]],
            "c": [[["0"]]],
            "label": "line",
        }
    )
    assert A.label == "line"
    B = build_algebroid({"preset": "lie", "c": [[[0, 0], [0, 0]], [[0, 1], [-1, 0]]]})
    assert (B.m, B.r) == (0, 2)
    with pytest.raises(SchemaError, match="unknown key"):
        build_algebroid({"preset": "custom", "m": 1, "r": 1, "x": 1})
