"""Rank and linear correlation coefficients with asymptotic p-values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import stdtr
from scipy.stats import rankdata


class LengthMismatch(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class RankingMetrics:
    kendall_tau: tuple[float, float]
    spearman: tuple[float, float]
    pearson: tuple[float, float]

    def to_json(self) -> dict:
        return {"kendall_tau": list(self.kendall_tau), "spearman": list(self.spearman), "pearson": list(self.pearson)}

    def format_cell(self) -> str:
        return "\n".join(
            f"{label}: ({coef:.3f}, {p:.3f})"
            for label, (coef, p) in (("k-tau", self.kendall_tau), ("SCC", self.spearman), ("PCC", self.pearson))
        )


def _pair(a: Sequence[float], b: Sequence[float], min_len: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape:
        raise LengthMismatch(f"sequences have lengths {a.size} and {b.size}")
    if a.size < min_len:
        raise LengthMismatch(f"need at least {min_len} items, got {a.size}")
    return a, b


def _tie_sums(x: np.ndarray) -> tuple[int, int, int, int]:
    _, counts = np.unique(x, return_counts=True)
    t = counts[counts > 1].astype(np.int64)
    return (
        int(np.sum(t * (t - 1) // 2)),
        int(np.sum(t * (t - 1) * (2 * t + 5))),
        int(np.sum(t * (t - 1))),
        int(np.sum(t * (t - 1) * (t - 2))),
    )


def _t_pvalue(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    t = r * math.sqrt(df / ((1.0 - r) * (1.0 + r)))
    return float(min(1.0, 2.0 * stdtr(df, -abs(t))))


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Tau-b with tie correction; two-sided p-value from the normal approximation."""
    a, b = _pair(a, b, 2)
    n = a.size
    iu = np.triu_indices(n, k=1)
    sa = np.sign(a[:, None] - a[None, :])[iu]
    sb = np.sign(b[:, None] - b[None, :])[iu]
    prod = sa * sb
    concordant = int(np.count_nonzero(prod > 0))
    discordant = int(np.count_nonzero(prod < 0))
    n0 = n * (n - 1) // 2
    n1, vt, t1, t2 = _tie_sums(a)
    n2, vu, u1, u2 = _tie_sums(b)
    if n0 == n1 or n0 == n2:
        raise ZeroVariance("a sequence is constant")
    s = concordant - discordant
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))
    var = (n * (n - 1) * (2 * n + 5) - vt - vu) / 18.0
    var += t1 * u1 / (2.0 * n * (n - 1))
    if n > 2:
        var += t2 * u2 / (9.0 * n * (n - 1) * (n - 2))
    p = math.erfc(abs(s) / math.sqrt(var) / math.sqrt(2.0)) if var > 0 else 0.0
    return float(min(1.0, max(-1.0, tau))), float(min(1.0, p))


def pearson(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    a, b = _pair(a, b, 3)
    da = a - a.mean()
    db = b - b.mean()
    saa, sbb = float(np.dot(da, da)), float(np.dot(db, db))
    if saa == 0.0 or sbb == 0.0:
        raise ZeroVariance("a sequence has zero variance")
    r = float(np.dot(da, db)) / math.sqrt(saa * sbb)
    r = min(1.0, max(-1.0, r))
    return r, _t_pvalue(r, a.size)


def spearman(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation of mid-ranks."""
    a, b = _pair(a, b, 3)
    return pearson(rankdata(a), rankdata(b))


def ranking_metrics(predicted: Sequence[float], actual: Sequence[float]) -> RankingMetrics:
    return RankingMetrics(kendall_tau(predicted, actual), spearman(predicted, actual), pearson(predicted, actual))
