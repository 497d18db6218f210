"""Linear pairwise-logistic reward model over program features."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .metrics import LengthMismatch, RankingMetrics, ranking_metrics
from .store import content_id

STATE_VERSION = 1


class DegenerateTraining(ValueError):
    pass


@dataclass(frozen=True)
class RankerConfig:
    max_pairs: int = 5000
    epochs: int = 200
    step: float = 0.05
    batch_pairs: int = 64  # pairs per gradient step; an epoch is one shuffled pass over all pairs

    def __post_init__(self):
        if self.max_pairs < 1 or self.epochs < 0 or self.batch_pairs < 1 or not self.step > 0:
            raise ValueError("ranker needs max_pairs >= 1, epochs >= 0, batch_pairs >= 1, step > 0")


@dataclass(frozen=True, eq=False)
class RankerState:
    mean: np.ndarray
    std: np.ndarray
    weights: np.ndarray
    bias: float
    config: RankerConfig
    seed: int
    train_scores: np.ndarray | None = None

    @property
    def feature_length(self) -> int:
        return int(self.weights.size)

    def __eq__(self, other):
        if not isinstance(other, RankerState):
            return NotImplemented
        return self.to_json() == other.to_json()

    def to_json(self) -> dict:
        return {
            "version": STATE_VERSION,
            "feature_length": self.feature_length,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "config": asdict(self.config),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RankerState":
        if data.get("version") != STATE_VERSION:
            raise ValueError(f"unsupported ranker state version {data.get('version')!r}")
        state = cls(
            mean=np.asarray(data["mean"], dtype=float),
            std=np.asarray(data["std"], dtype=float),
            weights=np.asarray(data["weights"], dtype=float),
            bias=float(data["bias"]),
            config=RankerConfig(**data["config"]),
            seed=int(data["seed"]),
        )
        if not (state.mean.size == state.std.size == state.weights.size == data["feature_length"]):
            raise LengthMismatch("ranker state vectors disagree on feature length")
        return state

    @property
    def ranker_id(self) -> str:
        return content_id(json.dumps(self.to_json(), sort_keys=True))


def sample_pairs(rewards: np.ndarray, max_pairs: int, rng: np.random.Generator) -> np.ndarray:
    """Ordered pairs (i, j) with rewards[i] > rewards[j].

    All informative pairs are used when there are at most ``max_pairs``
    unordered pairs; otherwise ``max_pairs`` are drawn with replacement.
    """
    n = rewards.size
    total = n * (n - 1) // 2
    if total <= max_pairs:
        i, j = np.triu_indices(n, k=1)
    else:
        i = rng.integers(0, n, size=4 * max_pairs)
        j = rng.integers(0, n, size=4 * max_pairs)
    keep = rewards[i] != rewards[j]
    i, j = i[keep], j[keep]
    if total > max_pairs:
        while i.size < max_pairs:
            extra_i = rng.integers(0, n, size=4 * max_pairs)
            extra_j = rng.integers(0, n, size=4 * max_pairs)
            keep = rewards[extra_i] != rewards[extra_j]
            i = np.concatenate([i, extra_i[keep]])
            j = np.concatenate([j, extra_j[keep]])
        i, j = i[:max_pairs], j[:max_pairs]
    swap = rewards[i] < rewards[j]
    hi = np.where(swap, j, i)
    lo = np.where(swap, i, j)
    return np.stack([hi, lo], axis=1)


def fit(features: Sequence[Sequence[float]], rewards: Sequence[float], config: RankerConfig = RankerConfig(),
        seed: int = 0) -> RankerState:
    """Minimise the mean pairwise logistic loss log(1 + exp(-(s_i - s_j))) by minibatch gradient descent."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(rewards, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise LengthMismatch("features and rewards disagree in length")
    if y.size < 2 or np.unique(y).size < 2:
        raise DegenerateTraining("need at least two distinct rewards")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("features and rewards must be finite")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    z = (x - mean) / std
    rng = np.random.default_rng(seed)
    pairs = sample_pairs(y, config.max_pairs, rng)
    diff = z[pairs[:, 0]] - z[pairs[:, 1]]
    w = np.zeros(x.shape[1])
    for _ in range(config.epochs):
        order = rng.permutation(len(diff))
        for start in range(0, len(diff), config.batch_pairs):
            batch = diff[order[start:start + config.batch_pairs]]
            w = w + config.step * (expit(-(batch @ w)) @ batch) / len(batch)
    # the bias cancels in every pair difference, so it never moves from zero
    state = RankerState(mean, std, w, 0.0, config, seed)
    return RankerState(mean, std, w, 0.0, config, seed, train_scores=score_many(state, x))


def score_many(state: RankerState, features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != state.feature_length:
        raise LengthMismatch(f"expected {state.feature_length} features, got shape {x.shape}")
    return ((x - state.mean) / state.std) @ state.weights + state.bias


def score(state: RankerState, features: Sequence[float]) -> float:
    f = np.asarray(features, dtype=float)
    if f.ndim != 1 or f.size != state.feature_length:
        raise LengthMismatch(f"expected {state.feature_length} features, got {f.size}")
    return float(score_many(state, f[None, :])[0])


def rank_by_score(scored: Sequence[tuple[str, float]]) -> list[str]:
    """Ids by descending score, ties by ascending id."""
    return [cid for cid, _ in sorted(scored, key=lambda item: (-item[1], item[0]))]


def top_k(state: RankerState, candidates: Sequence[tuple[str, Sequence[float]]], k: int) -> list[str]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not candidates:
        return []
    ids = [cid for cid, _ in candidates]
    scores = score_many(state, [f for _, f in candidates])
    return rank_by_score(list(zip(ids, scores.tolist())))[:k]


def cross_eval(
    states: Mapping[str, RankerState],
    datasets: Mapping[str, tuple[Sequence[Sequence[float]], Sequence[float]]],
) -> dict[tuple[str, str], RankingMetrics]:
    """Metrics of each state's scores against the true rewards of every dataset."""
    out = {}
    for train_source, state in states.items():
        for test_source, (features, rewards) in datasets.items():
            predicted = score_many(state, features)
            out[(train_source, test_source)] = ranking_metrics(predicted, rewards)
    return out


def format_cross_eval(table: Mapping[tuple[str, str], RankingMetrics]) -> str:
    rows = sorted({r for r, _ in table})
    cols = sorted({c for _, c in table})
    lines = ["train \\ test\t" + "\t".join(cols)]
    for r in rows:
        cells = [table[(r, c)].format_cell().replace("\n", "; ") if (r, c) in table else "-" for c in cols]
        lines.append(r + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"
