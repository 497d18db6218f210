import math

import numpy as np
import pytest

from compsearch import dsl
from compsearch.datasets import TASKS, load_task
from compsearch.evaluator import (
    STATUS_NON_FINITE,
    STATUS_OK,
    STATUS_REJECTED,
    EvalRecord,
    KindMismatch,
    ProtocolConfig,
    assemble,
    data_loss,
    evaluate_hypothesis,
    forward,
    init_params,
    regularizer_penalty,
    run_seed,
    sgd_step,
    train_eval,
    validation_loss,
)

from conftest import program

RELU = program("expr max(x, 0)", name="relu")
ZERO = program("expr min(max(x, 0), 0)", name="zero")


def test_parameter_count_and_dims():
    a = assemble(RELU, "activation", TASKS["iris-cls"])
    assert a.layer_dims == (4, 64, 16, 3)
    assert a.parameter_count == (4 * 64 + 64) + (64 * 16 + 16) + (16 * 3 + 3) == 1411
    assert assemble(RELU, "activation", TASKS["diabetes-reg"]).layer_dims[-1] == 1


def test_slot_rule():
    pre = program("expr tanh((x - mu) / sigma)", kind="preprocessor")
    a = assemble(pre, "preprocessor", TASKS["iris-cls"])
    assert a.preprocessor is pre
    assert dsl.serialize_expr(a.activation.expr) == "max(x, 0)"
    assert dsl.serialize_expr(a.regularizer.expr) == "0 * w"
    with pytest.raises(KindMismatch):
        assemble(pre, "activation", TASKS["iris-cls"])


def test_protocol_invariants():
    with pytest.raises(ValueError):
        ProtocolConfig(runs=0)
    with pytest.raises(ValueError):
        ProtocolConfig(validation_fraction=1.0)
    with pytest.raises(ValueError):
        ProtocolConfig(mode="two-epoch")


def test_run_seed_is_sha256_prefix():
    import hashlib
    expected = int.from_bytes(hashlib.sha256(b"abc|iris-cls|2").digest()[:8], "big")
    assert run_seed("abc", "iris-cls", 2) == expected


def test_zero_logits_give_ln3():
    split = load_task("iris-cls")
    a = assemble(RELU, "activation", split.task)
    params = init_params(a, np.random.default_rng(0), zero_output=True)
    loss = validation_loss(a, params, (split.x_val - split.stats.mu) / split.stats.sigma, split.y_val)
    assert abs(loss - math.log(3)) < 1e-9


def test_output_shapes():
    split = load_task("wine-cls")
    a = assemble(RELU, "activation", split.task)
    out, _, _ = forward(a, init_params(a, np.random.default_rng(1)), split.x_val)
    assert out.shape == (len(split.x_val), 3)
    reg = load_task("wine-reg")
    a = assemble(RELU, "activation", reg.task)
    out, _, _ = forward(a, init_params(a, np.random.default_rng(1)), reg.x_val)
    assert out.shape == (len(reg.x_val), 1)


@pytest.mark.parametrize("task_id,act,reg", [
    ("iris-cls", "expr tanh(x) + 0.1 * x", "expr 0.01 * w * w"),
    ("diabetes-reg", "expr where(x >= 0, x, 0.3 * x)", "expr 0.001 * abs(w)"),
])
def test_backprop_matches_finite_differences(task_id, act, reg):
    split = load_task(task_id)
    a = assemble(program(act), "activation", split.task)
    a = type(a)(a.activation, a.preprocessor, program(reg, kind="regularizer"), a.slot, a.task)
    rng = np.random.default_rng(3)
    params = init_params(a, rng)
    x, y = split.x_train[:16] / 10.0, split.y_train[:16]

    def total(p):
        out, _, _ = forward(a, p, x)
        return data_loss(a, out, y)[0] + regularizer_penalty(a, p)[0]

    lr = 1.0
    copy = type(params)([w.copy() for w in params.weights], [b.copy() for b in params.biases])
    sgd_step(a, copy, x, y, lr)
    for layer in range(3):
        grad = (params.weights[layer] - copy.weights[layer]) / lr
        shape = grad.shape
        for idx in [(0, 0), (1 % shape[0], 2 % shape[1]), (3 % shape[0], 1 % shape[1])]:
            h = 1e-6
            plus = type(params)([w.copy() for w in params.weights], params.biases)
            minus = type(params)([w.copy() for w in params.weights], params.biases)
            plus.weights[layer][idx] += h
            minus.weights[layer][idx] -= h
            fd = (total(plus) - total(minus)) / (2 * h)
            assert grad[idx] == pytest.approx(fd, rel=1e-4, abs=1e-7)
        bgrad = (params.biases[layer] - copy.biases[layer]) / lr
        plus = type(params)(params.weights, [b.copy() for b in params.biases])
        minus = type(params)(params.weights, [b.copy() for b in params.biases])
        plus.biases[layer][0] += 1e-6
        minus.biases[layer][0] -= 1e-6
        assert bgrad[0] == pytest.approx((total(plus) - total(minus)) / 2e-6, rel=1e-4, abs=1e-7)


def test_train_eval_deterministic():
    split = load_task("iris-cls")
    a = assemble(RELU, "activation", split.task)
    r1 = train_eval(a, split, 42)
    r2 = train_eval(a, split, 42)
    assert r1 == r2 and r1.status == STATUS_OK and math.isfinite(r1.loss)
    assert train_eval(a, split, 43).loss != r1.loss


def test_single_step_mode_differs_from_epoch():
    split = load_task("iris-cls")
    a = assemble(RELU, "activation", split.task)
    one = train_eval(a, split, 5, ProtocolConfig(mode="single-step"))
    full = train_eval(a, split, 5)
    assert one.status == full.status == STATUS_OK
    assert one.loss != full.loss


def test_overflowing_activation_is_non_finite():
    split = load_task("iris-cls")
    a = assemble(program("expr exp(x) * 1e6"), "activation", split.task)
    rec = train_eval(a, split, 1)
    assert rec.status == STATUS_NON_FINITE and rec.loss is None
    assert "loss" not in rec.to_json()


def test_reported_loss_excludes_regularizer():
    split = load_task("iris-cls")
    heavy = program("expr 1000 + 0 * w", kind="regularizer")
    base = assemble(RELU, "activation", split.task)
    a = type(base)(base.activation, base.preprocessor, heavy, base.slot, base.task)
    # a constant penalty has zero gradient, so training and the reported loss are unchanged
    assert train_eval(a, split, 9).loss == train_eval(base, split, 9).loss


def test_relu_beats_zero_activation():
    split = load_task("iris-cls")
    wins = 0
    for i in range(1, 6):
        seed = run_seed("relu-vs-zero", "iris-cls", i)
        relu = train_eval(assemble(RELU, "activation", split.task), split, seed)
        zero = train_eval(assemble(ZERO, "activation", split.task), split, seed)
        assert relu.status == zero.status == STATUS_OK
        wins += relu.loss < zero.loss
    assert wins >= 4


def test_evaluate_hypothesis_counts_and_order():
    tasks = ["wine-cls", "iris-cls", "diabetes-reg", "wine-reg", "breast-cancer-cls"]
    recs = evaluate_hypothesis(RELU, "activation", tasks, ProtocolConfig(runs=5), hypothesis_id="h")
    assert len(recs) == 25
    assert [(r.task, r.run_index) for r in recs] == sorted((r.task, r.run_index) for r in recs)
    again = evaluate_hypothesis(RELU, "activation", list(reversed(tasks)), ProtocolConfig(runs=5), hypothesis_id="h")
    assert again == recs


def test_evaluate_r1_matches_direct_call():
    recs = evaluate_hypothesis(RELU, "activation", ["iris-cls"], ProtocolConfig(runs=1), hypothesis_id="h")
    split = load_task("iris-cls")
    direct = train_eval(assemble(RELU, "activation", split.task), split, run_seed("h", "iris-cls", 1),
                        hypothesis_id="h", run_index=1)
    assert recs == [direct]


def test_parallel_evaluation_identical():
    serial = evaluate_hypothesis(RELU, "activation", ["iris-cls", "wine-cls"], hypothesis_id="h")
    parallel = evaluate_hypothesis(RELU, "activation", ["iris-cls", "wine-cls"], hypothesis_id="h", jobs=2)
    assert serial == parallel


def test_rejected_hypothesis_records():
    recs = evaluate_hypothesis(ZERO, "activation", ["iris-cls"], hypothesis_id="z")
    assert [r.status for r in recs] == [STATUS_REJECTED] * 3


def test_record_json_round_trip():
    rec = EvalRecord("h", "iris-cls", 2, 123, STATUS_OK, 0.5)
    assert EvalRecord.from_json(rec.to_json()) == rec
