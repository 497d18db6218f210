"""Summary tables over one or more run directories."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .store import RunDir, read_csv_rows, write_csv

KIND_ORDER = ("activation", "preprocessor", "regularizer")
STYLE_COLUMNS = {"IEP": "Inc", "NEP": "Nov"}


class NoEvaluations(ValueError):
    pass


@dataclass(frozen=True)
class ReportRow:
    kind: str
    prompt_style: str
    n_generated: int
    n_valid: int
    n_rewarded: int
    validator_pr: float  # over every generated candidate, before deduplication
    mean_b_wr: float
    mean_bsota_wr: float

    def cell(self) -> list[str]:
        return [f"Validator-PR: {self.validator_pr:.4f}", f"B-WR: {self.mean_b_wr:.4f}",
                f"BSOTA-WR: {self.mean_bsota_wr:.4f}"]


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[ReportRow, ...]
    scatter: tuple[tuple[str, str, str, float, float], ...]  # (id, kind, style, b_wr, bsota_wr)

    def row(self, kind: str, style: str) -> ReportRow | None:
        for r in self.rows:
            if (r.kind, r.prompt_style) == (kind, style):
                return r
        return None

    def render(self) -> str:
        """Kinds down, prompt styles across; each cell holds three stacked metrics."""
        styles = [s for s in STYLE_COLUMNS if any(r.prompt_style == s for r in self.rows)]
        kinds = [k for k in KIND_ORDER if any(r.kind == k for r in self.rows)]
        grid = []
        for kind in kinds:
            cells = []
            for style in styles:
                row = self.row(kind, style)
                cells.append(row.cell() if row else ["-", "", ""])
            grid.append((kind.capitalize(), cells))
        label_w = max([len(label) for label, _ in grid] + [len("Component")])
        col_w = [max([len(STYLE_COLUMNS[s])] + [len(line) for _, cells in grid for line in cells[j]])
                 for j, s in enumerate(styles)]
        lines = ["  ".join(["Component".ljust(label_w)] + [STYLE_COLUMNS[s].ljust(w) for s, w in zip(styles, col_w)])
                 .rstrip()]
        lines.append("-" * len(lines[0].ljust(label_w + sum(col_w) + 2 * len(col_w))))
        for label, cells in grid:
            for i in range(3):
                head = label if i == 0 else ""
                parts = [head.ljust(label_w)] + [c[i].ljust(w) for c, w in zip(cells, col_w)]
                lines.append("  ".join(parts).rstrip())
        return "\n".join(lines) + "\n"


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else float("nan")


def build_report(run_dirs: Path | str | Iterable[Path | str]) -> ReportTable:
    if isinstance(run_dirs, (str, Path)):
        run_dirs = [run_dirs]
    hypotheses: list[dict] = []
    rewards: dict[str, dict] = {}
    for root in run_dirs:
        run = RunDir(root)
        hypotheses.extend(run.load("hypotheses").records)
        for r in run.load("rewards").records:
            rewards.setdefault(r["hypothesis_id"], r)
    if not rewards:
        raise NoEvaluations("no evaluations: the rewards store is empty")

    groups: dict[tuple[str, str], list[dict]] = {}
    for h in hypotheses:
        groups.setdefault((h["kind"], h["prompt_style"]), []).append(h)

    rows, scatter = [], []
    for (kind, style), items in sorted(groups.items(), key=lambda kv: (KIND_ORDER.index(kv[0][0]), kv[0][1])):
        valid = [h for h in items if h["validator_report"]["passed"]]
        ids = sorted({h["id"] for h in valid if h["id"] in rewards})
        rows.append(ReportRow(
            kind, style, len(items), len(valid), len(ids),
            len(valid) / len(items),
            _mean([rewards[i]["b_wr"] for i in ids]),
            _mean([rewards[i]["bsota_wr"] for i in ids]),
        ))
        scatter.extend((i, kind, style, rewards[i]["b_wr"], rewards[i]["bsota_wr"]) for i in ids)
    return ReportTable(tuple(rows), tuple(scatter))


REPORT_COLUMNS = ["kind", "prompt_style", "n_generated", "n_valid", "n_rewarded", "validator_pr", "mean_b_wr",
                  "mean_bsota_wr"]


def write_report(out_dir: Path | str, table: ReportTable) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(table.render())
    write_csv(out_dir / "report.csv", REPORT_COLUMNS,
              [[getattr(r, c) for c in REPORT_COLUMNS] for r in table.rows])
    write_csv(out_dir / "scatter.csv", ["hypothesis_id", "kind", "prompt_style", "b_wr", "bsota_wr"],
              table.scatter)


def read_report_csv(path: Path | str) -> list[ReportRow]:
    out = []
    for row in read_csv_rows(Path(path)):
        out.append(ReportRow(row["kind"], row["prompt_style"], int(row["n_generated"]), int(row["n_valid"]),
                             int(row["n_rewarded"]), float(row["validator_pr"]), float(row["mean_b_wr"]),
                             float(row["mean_bsota_wr"])))
    return out
