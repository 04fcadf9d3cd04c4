import json
import random

import pytest

from qrelax import model as qp
from qrelax.rational import rat


def test_minimal_instance():
    prob = qp.parse_instance(
        '{"variables":[{"name":"x","lb":0,"ub":1}],'
        ' "objective":{"quad":[["x","x",1]]}}')
    assert len(prob.vars) == 1
    assert prob.objective.quad == [(0, 0, rat(1))]
    assert prob.objective.lin == {}


def test_symmetry_canonicalization():
    prob = qp.parse_instance({
        "variables": [{"name": "x", "lb": 0, "ub": 1}, {"name": "y", "lb": 0, "ub": 1}],
        "objective": {"quad": [["x", "y", 2], ["y", "x", 1]]},
    })
    assert prob.objective.quad == [(0, 1, rat(3))]


def test_quadratic_on_binary_rejected():
    with pytest.raises(qp.InstanceError, match="non-continuous"):
        qp.parse_instance({
            "variables": [{"name": "b", "kind": "binary"}],
            "objective": {"quad": [["b", "b", 1]]},
        })


def test_infinite_bound_on_quadratic_var_rejected():
    with pytest.raises(qp.InstanceError, match="finite bounds"):
        qp.parse_instance({
            "variables": [{"name": "x", "lb": 0}],
            "objective": {"quad": [["x", "x", 1]]},
        })


def test_lb_above_ub_rejected():
    with pytest.raises(qp.InstanceError, match="lb > ub"):
        qp.parse_instance({"variables": [{"name": "x", "lb": 1, "ub": 0}]})


def test_unknown_variable_path_in_error():
    with pytest.raises(qp.InstanceError) as err:
        qp.parse_instance({
            "variables": [{"name": "x", "lb": 0, "ub": 1}],
            "objective": {"quad": [["x", "w", 1]]},
        })
    assert "/objective/quad/0" in str(err.value)


def test_malformed_json():
    with pytest.raises(qp.InstanceError, match="malformed JSON"):
        qp.parse_instance("{not json")


def test_defaults():
    prob = qp.parse_instance({"variables": [{"name": "x", "lb": 0, "ub": 1}]})
    assert prob.objective.quad == [] and prob.objective.lin == {}
    assert prob.constraints == []
    assert prob.vars[0].kind == "continuous"


def test_binary_linear_part_allowed():
    prob = qp.parse_instance({
        "variables": [{"name": "x", "lb": 0, "ub": 1},
                      {"name": "b", "kind": "binary"}],
        "objective": {"quad": [["x", "x", 1]], "lin": {"b": 3}},
    })
    assert prob.objective.lin == {1: rat(3)}


def test_density_examples():
    x_sq = qp.QuadraticForm([(0, 0, rat(1))])
    assert qp.density(x_sq, 2) == 0.25
    full = qp.QuadraticForm([(0, 0, rat(1)), (1, 1, rat(1)), (0, 1, rat(1))])
    assert qp.density(full, 2) == 1.0
    assert qp.density(qp.QuadraticForm(), 3) == 0.0


def test_parse_serialize_roundtrip():
    doc = {
        "name": "rt",
        "variables": [{"name": "x", "lb": -1, "ub": 2},
                      {"name": "y", "lb": 0, "ub": 1},
                      {"name": "b", "kind": "binary"}],
        "objective": {"quad": [["x", "x", 0.5], ["x", "y", -1.25]],
                      "lin": {"b": 1}, "constant": 3},
        "constraints": [{"form": {"quad": [["y", "y", 1]], "lin": {"x": 1}},
                         "sense": "<=", "rhs": 2.5}],
    }
    prob = qp.parse_instance(doc)
    text = qp.instance_to_json(prob)
    again = qp.parse_instance(text)
    assert qp.instance_to_json(again) == text
    assert again.objective.quad == prob.objective.quad
    assert again.constraints[0][1:] == prob.constraints[0][1:]


def test_canonicalization_preserves_values():
    rng = random.Random(5)
    entries = []
    for _ in range(12):
        i, j = rng.randrange(3), rng.randrange(3)
        entries.append([f"x{i}", f"x{j}", rng.randint(-3, 3)])
    doc = {
        "variables": [{"name": f"x{i}", "lb": -2, "ub": 2} for i in range(3)],
        "objective": {"quad": entries},
    }
    prob = qp.parse_instance(doc)
    # canonicalizing again changes nothing
    again = qp.parse_instance(json.loads(qp.instance_to_json(prob)))
    assert again.objective.quad == prob.objective.quad
    for _ in range(100):
        point = [rat(rng.randint(-64, 64), 32) for _ in range(3)]
        raw = sum(rat(c) * point[int(a[1])] * point[int(b[1])]
                  for a, b, c in entries)
        assert prob.objective.value(point) == raw


def test_degenerate_fixed_bound_kept():
    prob = qp.parse_instance({
        "variables": [{"name": "x", "lb": 0.5, "ub": 0.5}],
        "objective": {"quad": [["x", "x", 1]]},
    })
    assert prob.vars[0].lb == prob.vars[0].ub == rat(1, 2)
