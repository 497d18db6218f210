"""One-pass evaluation of a component inside a fixed 2-layer MLP.

Weights are drawn from numpy's PCG64 generator (``numpy.random.default_rng``)
seeded with the run seed; run seeds are the first 8 bytes of
SHA-256(``"<hypothesis id>|<task id>|<run index>"``) read big-endian.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from . import dsl
from .datasets import SplitData, TaskSpec, load_task
from .dsl import ComponentKind, HypothesisProgram

HIDDEN_SIZES = (64, 16)

DEFAULT_SOURCES = {
    ComponentKind.ACTIVATION: 'component activation "relu"\nexpr max(x, 0)\n',
    ComponentKind.PREPROCESSOR: 'component preprocessor "standardize"\nexpr (x - mu) / sigma\n',
    ComponentKind.REGULARIZER: 'component regularizer "none"\nexpr 0 * w\n',
}
DEFAULT_COMPONENTS = {kind: dsl.parse(text) for kind, text in DEFAULT_SOURCES.items()}

STATUS_OK = "ok"
STATUS_NON_FINITE = "non-finite"
STATUS_REJECTED = "validator-rejected"


class KindMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolConfig:
    mode: str = "one-epoch"  # or "single-step"
    learning_rate: float = 0.01
    batch_size: int = 16
    runs: int = 3
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.mode not in ("one-epoch", "single-step"):
            raise ValueError(f"unknown protocol mode {self.mode!r}")
        if self.runs < 1:
            raise ValueError("runs per task must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation fraction must be in (0, 1)")
        if self.batch_size < 1 or not self.learning_rate > 0:
            raise ValueError("batch size and learning rate must be positive")


@dataclass(frozen=True)
class ModelAssembly:
    activation: HypothesisProgram
    preprocessor: HypothesisProgram
    regularizer: HypothesisProgram
    slot: ComponentKind
    task: TaskSpec
    hidden_sizes: tuple[int, ...] = HIDDEN_SIZES

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.task.n_features, *self.hidden_sizes, self.task.output_dim)

    @property
    def parameter_count(self) -> int:
        dims = self.layer_dims
        return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


@dataclass(frozen=True)
class EvalRecord:
    hypothesis_id: str
    task: str
    run_index: int
    seed: int
    status: str
    loss: float | None = None

    def to_json(self) -> dict:
        data = asdict(self)
        if data["loss"] is None:
            del data["loss"]
        return data

    @classmethod
    def from_json(cls, data: dict) -> "EvalRecord":
        return cls(data["hypothesis_id"], data["task"], int(data["run_index"]), int(data["seed"]),
                   data["status"], data.get("loss"))


def assemble(hypothesis: HypothesisProgram, kind: ComponentKind | str, task: TaskSpec) -> ModelAssembly:
    kind = ComponentKind(kind)
    if hypothesis.kind is not kind:
        raise KindMismatch(f"{hypothesis.kind.value} program cannot fill the {kind.value} slot")
    slots = dict(DEFAULT_COMPONENTS)
    slots[kind] = hypothesis
    return ModelAssembly(
        activation=slots[ComponentKind.ACTIVATION],
        preprocessor=slots[ComponentKind.PREPROCESSOR],
        regularizer=slots[ComponentKind.REGULARIZER],
        slot=kind,
        task=task,
    )


def run_seed(hypothesis_id: str, task_id: str, run_index: int) -> int:
    digest = hashlib.sha256(f"{hypothesis_id}|{task_id}|{run_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# model


@dataclass
class Params:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.weights + self.biases)


def init_params(assembly: ModelAssembly, rng: np.random.Generator, zero_output: bool = False) -> Params:
    """Glorot-uniform weights, zero biases. ``zero_output`` zeroes the last layer (test hook)."""
    dims = assembly.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    if zero_output:
        weights[-1] = np.zeros_like(weights[-1])
    return Params(weights, biases)


def preprocess(program: HypothesisProgram, split: SplitData) -> tuple[np.ndarray, np.ndarray]:
    s = split.stats
    stats = {"mu": s.mu[None, :], "sigma": s.sigma[None, :], "lo": s.lo[None, :], "hi": s.hi[None, :]}
    out = []
    for x in (split.x_train, split.x_val):
        v = dsl.evaluate_array(program, {"x": x, **stats})
        out.append(np.broadcast_to(v, x.shape).astype(float))
    return out[0], out[1]


def _activate(program: HypothesisProgram, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v, d = dsl.evaluate_array_with_grad(program, {"x": z})
    return np.broadcast_to(v, z.shape), np.broadcast_to(d, z.shape)


def forward(assembly: ModelAssembly, params: Params, x: np.ndarray):
    """Return the network output, the input to every layer, and hidden activation slopes."""
    inputs, slopes = [], []
    h = x
    with np.errstate(all="ignore"):
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            inputs.append(h)
            z = h @ w + b
            if i == len(params.weights) - 1:
                return z, inputs, slopes
            h, slope = _activate(assembly.activation, z)
            slopes.append(slope)
    raise AssertionError("network has no layers")


def data_loss(assembly: ModelAssembly, out: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean loss over rows and its gradient with respect to ``out``."""
    n = out.shape[0]
    with np.errstate(all="ignore"):
        if assembly.task.objective == "classification":
            logp = log_softmax(out, axis=1)
            loss = -float(np.mean(logp[np.arange(n), y]))
            grad = softmax(out, axis=1)
            grad[np.arange(n), y] -= 1.0
            return loss, grad / n
        err = out[:, 0] - y
        return float(np.mean(err * err)), (2.0 * err / n)[:, None]


def validation_loss(assembly: ModelAssembly, params: Params, x_val: np.ndarray, y_val: np.ndarray) -> float:
    out, _, _ = forward(assembly, params, x_val)
    return data_loss(assembly, out, y_val)[0]


def regularizer_penalty(assembly: ModelAssembly, params: Params) -> tuple[float, list[np.ndarray]]:
    """Sum of the regularizer over every weight scalar (biases excluded) and its gradients."""
    total, grads = 0.0, []
    with np.errstate(all="ignore"):
        for w in params.weights:
            v, d = dsl.evaluate_array_with_grad(assembly.regularizer, {"w": w})
            total += float(np.sum(np.broadcast_to(v, w.shape)))
            grads.append(np.broadcast_to(d, w.shape))
    return total, grads


def sgd_step(assembly: ModelAssembly, params: Params, x: np.ndarray, y: np.ndarray, lr: float) -> float:
    """One forward/backward/update on a batch; returns the total (data + penalty) loss."""
    out, inputs, slopes = forward(assembly, params, x)
    loss, g = data_loss(assembly, out, y)
    penalty, reg_grads = regularizer_penalty(assembly, params)
    n_layers = len(params.weights)
    grads_w: list = [None] * n_layers
    grads_b: list = [None] * n_layers
    with np.errstate(all="ignore"):
        for i in range(n_layers - 1, -1, -1):
            grads_w[i] = inputs[i].T @ g + reg_grads[i]
            grads_b[i] = g.sum(axis=0)
            if i > 0:
                g = (g @ params.weights[i].T) * slopes[i - 1]
        for i in range(n_layers):
            params.weights[i] = params.weights[i] - lr * grads_w[i]
            params.biases[i] = params.biases[i] - lr * grads_b[i]
    return loss + penalty


def train_eval(
    assembly: ModelAssembly,
    split: SplitData,
    seed: int,
    protocol: ProtocolConfig = ProtocolConfig(),
    hypothesis_id: str = "",
    run_index: int = 0,
) -> EvalRecord:
    def record(status, loss=None):
        return EvalRecord(hypothesis_id, split.task.task_id, run_index, seed, status, loss)

    x_train, x_val = preprocess(assembly.preprocessor, split)
    if not (np.all(np.isfinite(x_train)) and np.all(np.isfinite(x_val))):
        return record(STATUS_NON_FINITE)
    rng = np.random.default_rng(seed)
    params = init_params(assembly, rng)
    order = rng.permutation(len(x_train))
    bs = protocol.batch_size
    starts = range(0, len(order), bs) if protocol.mode == "one-epoch" else range(0, 1)
    for start in starts:
        batch = order[start:start + bs]
        total = sgd_step(assembly, params, x_train[batch], split.y_train[batch], protocol.learning_rate)
        if not math.isfinite(total) or not params.all_finite():
            return record(STATUS_NON_FINITE)
    loss = validation_loss(assembly, params, x_val, split.y_val)
    if not math.isfinite(loss):
        return record(STATUS_NON_FINITE)
    return record(STATUS_OK, loss)


def _run_one(args) -> EvalRecord:
    hypothesis, kind, task_id, run_index, hypothesis_id, protocol = args
    split = load_task(task_id, protocol.validation_fraction)
    assembly = assemble(hypothesis, kind, split.task)
    seed = run_seed(hypothesis_id, task_id, run_index)
    return train_eval(assembly, split, seed, protocol, hypothesis_id, run_index)


def evaluate_hypothesis(
    hypothesis: HypothesisProgram,
    kind: ComponentKind | str,
    tasks: Sequence[str],
    protocol: ProtocolConfig = ProtocolConfig(),
    hypothesis_id: str | None = None,
    jobs: int = 1,
) -> list[EvalRecord]:
    """Evaluate on every task for run indices 1..R, ordered by (task, run index)."""
    from .store import content_id
    from .validator import validate

    kind = ComponentKind(kind)
    text = dsl.serialize(hypothesis)
    hypothesis_id = hypothesis_id or content_id(text)
    jobs_list = [(hypothesis, kind, t, i, hypothesis_id, protocol)
                 for t in sorted(set(tasks)) for i in range(1, protocol.runs + 1)]
    if not validate(text, kind).passed:
        return [EvalRecord(hypothesis_id, t, i, run_seed(hypothesis_id, t, i), STATUS_REJECTED)
                for _, _, t, i, _, _ in jobs_list]
    return list(map_jobs(_run_one, jobs_list, jobs))


def map_jobs(fn, items: Iterable, jobs: int = 1) -> list:
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
