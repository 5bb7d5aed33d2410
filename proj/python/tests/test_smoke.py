import pathlib

import pytest

import ihj

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_expression_roundtrip():
    e = ihj.parse("(q1 + p1)^2 + q1")
    assert str(e.expand()) == "p1^2 + 2*p1*q1 + q1^2 + q1"
    assert e({"q1": 1.0, "p1": 2.0}) == pytest.approx(10.0)
    assert str(e.diff("p1").expand()) == "2*p1 + 2*q1"
    assert e.free_vars == ["p1", "q1"]
    g = e.gradient({"q1": 1.0, "p1": 2.0}, ["q1", "p1"])
    assert g == pytest.approx([7.0, 6.0])


def test_parse_error_is_value_error():
    with pytest.raises(ValueError):
        ihj.parse("q1 + * 2")


def test_gotay_nester_example():
    r = ihj.gotay_nester(2, "qd1^2/2 + q2*q1^2")
    assert r.affine and not r.regular
    assert r.primary == ["p2"]
    assert r.secondary == ["q1", "p1"]
    assert r.stabilized_at == 3
    assert r.solvability[-1] < 1e-9


def test_search_finds_constant_family():
    res = ihj.search_oneform(3, "(qd1+qd2)^2/2", degree=0)
    assert len(res.candidates) == 1
    c = res.candidates[0]
    assert c.gamma[0] == c.gamma[1] and c.gamma[2] == "0"
    assert c.directions == [["1", "1", "0"]]
    assert c.verify_residual < 1e-9


def test_verify_reports_locus():
    v = ihj.verify_oneform(2, "qd1^2/2 + q2*q1^2", ["q1", "0"])
    assert not v.passes_globally
    assert v.locus == ["q1"]
    assert v.passes_on_locus


def test_run_command_matches_cli_contract():
    r = ihj.run_command("gotay-nester", str(FIXTURES / "vanishing-momentum.ihj"))
    assert r.exit_code == 0
    text = r.serialize()
    assert text.startswith("report-version 1\n")
    assert "secondary q1; p1\n" in text
    assert r.serialize() == ihj.run_command("gotay-nester", str(FIXTURES / "vanishing-momentum.ihj")).serialize()
    bad = ihj.run_command("check", str(FIXTURES / "missing.ihj"))
    assert bad.exit_code == 2
