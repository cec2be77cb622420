import json

import numpy as np
import pytest

from volopt.io import (
    VpSyntaxError,
    VpUnknownIdentifier,
    build_problem,
    format_problem_file,
    parse_problem_file,
    parse_problem_text,
    write_csv,
    write_json,
)
from volopt.poly import parse_polynomial

SHIPPED = ["illustrative", "roa", "invariant", "gsos", "probctrl", "probctrl_n2"]


@pytest.mark.parametrize("name", SHIPPED)
def test_round_trip_shipped_examples(examples_dir, name):
    pf = parse_problem_file(examples_dir / f"{name}.vp")
    text = format_problem_file(pf)
    again = parse_problem_text(text)
    assert again == pf
    assert format_problem_file(again) == text


@pytest.mark.parametrize("name", SHIPPED)
def test_round_trip_builds_same_problem(examples_dir, name):
    pf = parse_problem_file(examples_dir / f"{name}.vp")
    p1 = build_problem(pf)
    p2 = build_problem(parse_problem_text(format_problem_file(pf)))
    assert p1.s1.polys == p2.s1.polys and p1.s2.polys == p2.s2.polys
    assert p1.hierarchy == p2.hierarchy


def test_illustrative_contents(examples_dir):
    prob = build_problem(parse_problem_file(examples_dir / "illustrative.vp"))
    names = ["x", "a"]
    assert prob.n == 1 and prob.m == 1
    assert prob.s1.polys == (parse_polynomial("0.25 - a^2 - x^2", names),)
    assert prob.s2.polys == (parse_polynomial("0.09 - a^2 - 0.8 a - x^2", names),)
    assert prob.hierarchy.d == 7 and prob.hierarchy.r == 6


def test_empty_file_error_position():
    with pytest.raises(VpSyntaxError) as exc:
        parse_problem_text("")
    assert (exc.value.line, exc.value.col) == (1, 1)
    with pytest.raises(VpSyntaxError) as exc:
        parse_problem_text("   # only a comment\n")
    assert (exc.value.line, exc.value.col) == (1, 1)


def test_unknown_identifier_is_named():
    text = "vars x1 in [-1, 1];\nparams a in [-1, 1];\nset S1 { 1 - x1^2 - x2^2 >= 0; }\n"
    with pytest.raises(VpUnknownIdentifier) as exc:
        parse_problem_text(text)
    assert exc.value.name == "x2"
    assert exc.value.line == 3


def test_missing_box():
    with pytest.raises(VpSyntaxError):
        parse_problem_text("vars x;\nset S1 { 1 - x^2 >= 0; }\n")


def test_error_column_points_at_token():
    text = "vars x in [-1, 1];\nparams a in [-1, 1];\nset S3 { x >= 0; }\n"
    with pytest.raises(VpSyntaxError) as exc:
        parse_problem_text(text)
    assert exc.value.line == 3 and exc.value.col == 1


def test_inequality_directions_normalise():
    text = "vars x in [-1, 1];\nparams a in [0, 2];\nset S1 { x^2 <= a; }\nset S2 { a >= 0.5 x; }\n"
    pf = parse_problem_text(text)
    names = ["x", "a"]
    assert pf.s1 == (parse_polynomial("a - x^2", names),)
    assert pf.s2 == (parse_polynomial("a - 0.5 x", names),)


def test_unknown_option_rejected():
    with pytest.raises(VpSyntaxError):
        parse_problem_text("vars x in [-1, 1];\nset S1 { 1 - x^2 >= 0; }\noptions { q = 3; }\n")


def test_box_product_and_power_forms():
    pf = parse_problem_text("vars x[2] in [-1, 1]*[0, 2];\nparams a in [-1, 1];\nset S1 { 1 - x1 >= 0; }\n")
    assert pf.x.names == ("x1", "x2")
    assert pf.x.lower == (-1.0, 0.0) and pf.x.upper == (1.0, 2.0)


def test_write_json_and_csv(tmp_path):
    write_json(tmp_path / "r.json", {"b": np.float64(1.5), "a": np.array([1, 2])})
    assert json.loads((tmp_path / "r.json").read_text()) == {"a": [1, 2], "b": 1.5}
    write_csv(tmp_path / "r.csv", ["a", "v"], [[0.1, 2.0]])
    assert (tmp_path / "r.csv").read_text().splitlines() == ["a,v", "0.1,2.0"]
