"""Probabilistic win-rate rewards against a baseline set.

All win rates are computed from integer pair counts combined with exact
rational arithmetic and converted to float only at the end, so results do not
depend on record order.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .evaluator import STATUS_OK, EvalRecord

LossTable = Mapping[tuple[str, str], Sequence[float]]


class EmptyInput(ValueError):
    pass


class MissingCell(KeyError):
    def __init__(self, task: str, baseline: str):
        super().__init__(f"no losses for baseline {baseline!r} on task {task!r}")
        self.task = task
        self.baseline = baseline


class NoSuccessfulRuns(ValueError):
    pass


@dataclass(frozen=True)
class RewardSummary:
    hypothesis_id: str
    b_wr: float
    bsota_wr: float
    reward: float
    coverage: float

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RewardSummary":
        return cls(data["hypothesis_id"], data["b_wr"], data["bsota_wr"], data["reward"], data["coverage"])


def win_count(h_losses: Sequence[float], b_losses: Sequence[float]) -> tuple[int, int]:
    """Number of pairs (a, c) with a < c, and the total number of pairs."""
    if not h_losses or not b_losses:
        raise EmptyInput("both loss sequences must be non-empty")
    ordered = sorted(b_losses)
    wins = sum(len(ordered) - bisect.bisect_right(ordered, a) for a in h_losses)
    return wins, len(h_losses) * len(ordered)


def pairwise_win_fraction(h_losses: Sequence[float], b_losses: Sequence[float]) -> Fraction:
    wins, total = win_count(h_losses, b_losses)
    return Fraction(wins, total)


def pairwise_win(h_losses: Sequence[float], b_losses: Sequence[float]) -> float:
    """P(l(h) < l(b)) over all run pairs; ties are not wins."""
    return float(pairwise_win_fraction(h_losses, b_losses))


def tie_fraction(a: Sequence[float], b: Sequence[float]) -> Fraction:
    ordered = sorted(b)
    ties = sum(bisect.bisect_right(ordered, x) - bisect.bisect_left(ordered, x) for x in a)
    return Fraction(ties, len(a) * len(b))


def _cell(table: LossTable, subject: str, task: str) -> Sequence[float]:
    losses = table.get((subject, task))
    if not losses:
        raise MissingCell(task, subject)
    return losses


def mean_loss(losses: Sequence[float]) -> Fraction:
    return sum(map(Fraction, losses), Fraction(0)) / len(losses)


def best_baseline(baselines: LossTable, task: str, baseline_ids: Iterable[str]) -> str:
    """Baseline with minimal mean loss on ``task``; ties go to the smallest id."""
    ids = sorted(baseline_ids)
    if not ids:
        raise EmptyInput("no baselines")
    return min(ids, key=lambda b: (mean_loss(_cell(baselines, b, task)), b))


def b_wr_fraction(h: Mapping[str, Sequence[float]], baselines: LossTable, tasks: Iterable[str],
                  baseline_ids: Iterable[str], pooling: str = "cells") -> Fraction:
    tasks, baseline_ids = sorted(tasks), sorted(baseline_ids)
    if not tasks or not baseline_ids:
        raise EmptyInput("need at least one task and one baseline")
    wins = total = 0
    acc = Fraction(0)
    for task in tasks:
        for b in baseline_ids:
            b_losses = _cell(baselines, b, task)
            h_losses = h.get(task)
            if not h_losses:
                raise MissingCell(task, "<hypothesis>")
            w, t = win_count(h_losses, b_losses)
            acc += Fraction(w, t)
            wins, total = wins + w, total + t
    if pooling == "pairs":
        return Fraction(wins, total)
    if pooling != "cells":
        raise ValueError(f"unknown pooling {pooling!r}")
    return acc / (len(tasks) * len(baseline_ids))


def b_wr(h: Mapping[str, Sequence[float]], baselines: LossTable, tasks: Iterable[str],
         baseline_ids: Iterable[str], pooling: str = "cells") -> float:
    """Mean of the pairwise win rate over every (task, baseline) cell.

    ``h`` maps task id to the hypothesis' losses on that task.
    """
    return float(b_wr_fraction(h, baselines, tasks, baseline_ids, pooling))


def bsota_wr_fraction(h: Mapping[str, Sequence[float]], baselines: LossTable, tasks: Iterable[str],
                      baseline_ids: Iterable[str]) -> Fraction:
    tasks, baseline_ids = sorted(tasks), sorted(baseline_ids)
    if not tasks:
        raise EmptyInput("need at least one task")
    acc = Fraction(0)
    for task in tasks:
        best = best_baseline(baselines, task, baseline_ids)
        h_losses = h.get(task)
        if not h_losses:
            raise MissingCell(task, "<hypothesis>")
        acc += pairwise_win_fraction(h_losses, baselines[(best, task)])
    return acc / len(tasks)


def bsota_wr(h: Mapping[str, Sequence[float]], baselines: LossTable, tasks: Iterable[str],
             baseline_ids: Iterable[str]) -> float:
    """Win rate against the per-task best baseline (by mean loss), averaged over tasks."""
    return float(bsota_wr_fraction(h, baselines, tasks, baseline_ids))


def loss_table(records: Iterable[EvalRecord]) -> dict[tuple[str, str], list[float]]:
    """Group the losses of successful runs by (subject, task), ordered by run index."""
    grouped: dict[tuple[str, str], list[tuple[int, float]]] = defaultdict(list)
    for r in records:
        if r.status == STATUS_OK and r.loss is not None:
            grouped[(r.hypothesis_id, r.task)].append((r.run_index, r.loss))
    return {k: [loss for _, loss in sorted(v)] for k, v in grouped.items()}


def summarize(h_id: str, records: Iterable[EvalRecord], baseline_records: Iterable[EvalRecord],
              pooling: str = "cells") -> RewardSummary:
    """Reward summary from raw evaluation records.

    Non-finite runs are dropped. Cells where either side has no successful run
    are left out of the averages and show up as reduced coverage.
    """
    h_table = loss_table(r for r in records if r.hypothesis_id == h_id)
    base_records = list(baseline_records)
    base_table = loss_table(base_records)
    baseline_ids = sorted({r.hypothesis_id for r in base_records})
    tasks = sorted({r.task for r in base_records})
    if not tasks or not baseline_ids:
        raise EmptyInput("no baseline records")
    h_losses = {task: losses for (_, task), losses in h_table.items()}
    if not h_losses:
        raise NoSuccessfulRuns(f"hypothesis {h_id} has no successful runs")

    covered = [(t, b) for t in tasks for b in baseline_ids if t in h_losses and (b, t) in base_table]
    if not covered:
        raise NoSuccessfulRuns(f"hypothesis {h_id} shares no task with a successful baseline run")
    coverage = Fraction(len(covered), len(tasks) * len(baseline_ids))

    cell_wins = [win_count(h_losses[t], base_table[(b, t)]) for t, b in covered]
    if pooling == "pairs":
        bwr = Fraction(sum(w for w, _ in cell_wins), sum(n for _, n in cell_wins))
    else:
        bwr = sum((Fraction(w, n) for w, n in cell_wins), Fraction(0)) / len(cell_wins)

    sota_tasks = sorted({t for t, _ in covered})
    sota = Fraction(0)
    for t in sota_tasks:
        available = [b for b in baseline_ids if (b, t) in base_table]
        best = best_baseline(base_table, t, available)
        sota += pairwise_win_fraction(h_losses[t], base_table[(best, t)])
    sota /= len(sota_tasks)
    return make_summary(h_id, float(bwr), float(sota), float(coverage))


def make_summary(h_id: str, b_wr_value: float, bsota_wr_value: float, coverage: float = 1.0) -> RewardSummary:
    return RewardSummary(h_id, b_wr_value, bsota_wr_value, b_wr_value + bsota_wr_value, coverage)
