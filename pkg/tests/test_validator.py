import numpy as np
import pytest

from compsearch import dsl, validator
from compsearch.generators import random_program
from compsearch.validator import CHECK_NAMES, ValidationReport, validate, validator_pass_rate


def act(body):
    return f'component activation "t"\n{body}\n'


def test_relu_passes():
    report = validate(act("expr max(x, 0)"), "activation")
    assert report.passed
    assert [c.name for c in report.checks] == list(CHECK_NAMES)
    assert report.first_failure is None


def test_illegal_variable_fails_check_4():
    report = validate(act("expr x - mu"), "activation")
    assert not report.passed
    assert report.first_failure.name == "legal_variables"
    assert "IllegalVariable" in report.first_failure.detail
    assert [c.passed for c in report.checks[:3]] == [True, True, True]


def test_overflow_fails_check_5():
    report = validate(act("expr exp(exp(exp(x)))"), "activation")
    assert report.first_failure.name == "finite_values"
    program = dsl.parse(act("expr exp(exp(exp(x)))"))
    assert not np.isfinite(dsl.evaluate(program, {"x": 5.0}))


@pytest.mark.parametrize("text,kind,check", [
    ("expr (x", "activation", "parses"),
    ('component regularizer "r"\nexpr w * w', "activation", "kind_matches"),
    (act("param a = 1e999\nexpr a * x"), "activation", "finite_defaults"),
    (act("expr sqrt(x)"), "activation", "finite_values"),
    (act("expr sqrt(max(x, 0))"), "activation", "finite_derivatives"),
    (act("expr 0 * x + 3"), "activation", "non_constant"),
    ('component regularizer "r"\nexpr 1 / w', "regularizer", "finite_values"),
])
def test_each_check_can_fail(text, kind, check):
    report = validate(text, kind)
    assert report.first_failure.name == check
    # later checks are recorded as skipped failures; order is fixed
    names = [c.name for c in report.checks]
    assert names == list(CHECK_NAMES)
    later = names[names.index(check) + 1:]
    assert all(not c.passed and "skipped" in c.detail for c in report.checks if c.name in later)


def test_constant_regularizer_is_legal():
    assert validate('component regularizer "none"\nexpr 0 * w', "regularizer").passed


def test_report_json_round_trip():
    report = validate(act("expr x - mu"), "activation")
    data = report.to_json()
    assert data["passed"] is False
    assert ValidationReport.from_json(data) == report


def test_pass_rate():
    good = validate(act("expr tanh(x)"), "activation")
    bad = validate(act("expr foo(x)"), "activation")
    assert validator_pass_rate([good, good, bad, good]) == 0.75
    assert validator_pass_rate([good]) == 1.0
    with pytest.raises(validator.EmptyInput):
        validator_pass_rate([])


def test_pass_rate_recount_on_random_samples():
    reports = []
    for i in range(300):
        p = random_program(np.random.default_rng([7, i]), "preprocessor")
        reports.append(validate(dsl.serialize(p), "preprocessor"))
    assert validator_pass_rate(reports) == sum(r.passed for r in reports) / len(reports)
    assert 0 < validator_pass_rate(reports) < 1


@pytest.mark.parametrize("kind", ["activation", "preprocessor", "regularizer"])
def test_soundness_on_random_programs(kind):
    for i in range(200):
        text = dsl.serialize(random_program(np.random.default_rng([11, i]), kind))
        report = validate(text, kind)
        assert report == validate(text, kind)
        assert report.passed == all(c.passed for c in report.checks)
        if report.passed:
            program = dsl.parse(text)
            values, grads = dsl.evaluate_array_with_grad(program, dsl.probe_env(dsl.ComponentKind(kind)))
            assert np.all(np.isfinite(values)) and np.all(np.isfinite(grads))
            assert program.variables() <= dsl.ComponentKind(kind).variables
