"""Efficiency curves for candidate orderings and diversity-aware selection."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class UnknownId(KeyError):
    pass


class EmptyCandidates(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EfficiencyCurve:
    ordering_id: str
    y: np.ndarray
    auc: float

    def rows(self):
        return [(t, float(v)) for t, v in enumerate(self.y, start=1)]


def top_window_sums(values: Sequence[float], window: int, aggregate: str = "sum") -> np.ndarray:
    """y_t = aggregate of the largest min(window, t) values among the first t.

    Sums are exactly rounded (``math.fsum``) so y_t depends only on the set of
    values in the window, never on the order they arrived in.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if aggregate not in ("sum", "mean"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    heap: list[float] = []
    out = np.empty(len(values))
    current = 0.0
    for t, v in enumerate(map(float, values)):
        if len(heap) < window:
            heapq.heappush(heap, v)
        elif v > heap[0]:
            heapq.heapreplace(heap, v)
        else:
            out[t] = current
            continue
        total = math.fsum(heap)
        current = total if aggregate == "sum" else total / len(heap)
        out[t] = current
    return out


def _lookup(ordering: Sequence[str], rewards: Mapping[str, float]) -> list[float]:
    missing = [i for i in ordering if i not in rewards]
    if missing:
        raise UnknownId(f"no reward for {missing[0]!r}")
    return [rewards[i] for i in ordering]


def oracle_curve(rewards: Mapping[str, float], n: int, window: int, aggregate: str = "sum") -> np.ndarray:
    best = sorted(rewards.values(), reverse=True)[:n]
    return top_window_sums(best, window, aggregate)


def _auc(y: np.ndarray, oracle: np.ndarray) -> float:
    denom = float(np.mean(oracle))
    if denom == 0.0:
        return 1.0
    return float(np.mean(y)) / denom


def efficiency_curve(ordering: Sequence[str], rewards: Mapping[str, float], window: int = 50,
                     ordering_id: str = "ordering", aggregate: str = "sum") -> EfficiencyCurve:
    """Top-``window`` reward after each evaluation step, with AUC relative to the best possible order."""
    return efficiency_curves({ordering_id: ordering}, rewards, window, aggregate)[ordering_id]


def efficiency_curves(orderings: Mapping[str, Sequence[str]], rewards: Mapping[str, float], window: int = 50,
                      aggregate: str = "sum") -> dict[str, EfficiencyCurve]:
    """Several orderings of the same candidates, sharing one oracle curve."""
    out = {}
    oracle = None
    for name, ordering in orderings.items():
        values = _lookup(ordering, rewards)
        if oracle is None or len(oracle) != len(values):
            oracle = top_window_sums(sorted(values, reverse=True), window, aggregate)
        y = top_window_sums(values, window, aggregate)
        out[name] = EfficiencyCurve(name, y, _auc(y, oracle))
    return out


def oracle_ordering(rewards: Mapping[str, float]) -> list[str]:
    return sorted(rewards, key=lambda i: (-rewards[i], i))


def random_baseline_curve(rewards: Mapping[str, float], window: int = 50, shuffles: int = 100, seed: int = 0,
                          aggregate: str = "sum") -> EfficiencyCurve:
    """Pointwise mean curve over seeded random orderings."""
    if shuffles < 1:
        raise ValueError("need at least one shuffle")
    ids = sorted(rewards)
    rng = np.random.default_rng(seed)
    curves = []
    for _ in range(shuffles):
        order = [ids[i] for i in rng.permutation(len(ids))]
        curves.append(top_window_sums(_lookup(order, rewards), window, aggregate))
    y = np.mean(curves, axis=0)
    oracle = oracle_curve(rewards, len(ids), window, aggregate)
    return EfficiencyCurve("random", y, _auc(y, oracle))


# ---------------------------------------------------------------------------
# diversity


@dataclass(frozen=True, eq=False)
class DiversitySelection:
    selected: list[str]
    n_score: dict[str, float]
    similarity: np.ndarray


def cosine_similarity_matrix(features: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity; a zero vector has similarity 0 to everything but itself."""
    f = np.asarray(features, dtype=float)
    norms = np.linalg.norm(f, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = f / safe[:, None]
    sim = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(sim, 1.0)
    return sim


def greedy_diverse_select(candidates: Sequence[tuple[str, float, Sequence[float]]], k: int, alpha: float = 0.5,
                          n_score: str = "mean") -> DiversitySelection:
    """Greedy trade-off between normalised reward and distance to the items already chosen.

    Each step picks the candidate maximising
    ``alpha * reward01 + (1 - alpha) * min_selected(cosine_distance) / 2``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if not candidates:
        raise EmptyCandidates("no candidates to select from")
    items = sorted(candidates, key=lambda c: c[0])
    ids = [c[0] for c in items]
    if len(set(ids)) != len(ids):
        raise ValueError("candidate ids must be unique")
    rewards = np.asarray([c[1] for c in items], dtype=float)
    if not np.all(np.isfinite(rewards)):
        raise ValueError("rewards must be finite")
    spread = rewards.max() - rewards.min()
    norm = (rewards - rewards.min()) / spread if spread > 0 else np.full(rewards.size, 0.5)
    sim = cosine_similarity_matrix(np.asarray([c[2] for c in items], dtype=float))
    dist = 1.0 - sim

    chosen = [int(np.argmax(norm))]  # argmax returns the first, i.e. smallest id
    min_dist = dist[chosen[0]].copy()
    remaining = np.ones(len(items), dtype=bool)
    remaining[chosen[0]] = False
    while len(chosen) < min(k, len(items)):
        gain = alpha * norm + (1.0 - alpha) * min_dist / 2.0
        gain = np.where(remaining, gain, -np.inf)
        pick = int(np.argmax(gain))
        chosen.append(pick)
        remaining[pick] = False
        min_dist = np.minimum(min_dist, dist[pick])

    sub = sim[np.ix_(chosen, chosen)]
    sub_dist = 1.0 - sub
    scores = {}
    for row, idx in enumerate(chosen):
        others = np.delete(sub_dist[row], row)
        if others.size == 0:
            scores[ids[idx]] = 0.0
        elif n_score == "min":
            scores[ids[idx]] = float(others.min())
        else:
            scores[ids[idx]] = float(others.mean())
    return DiversitySelection([ids[i] for i in chosen], scores, sub)
