"""Binary validity decision for candidate component programs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dsl
from .dsl import ComponentKind

CHECK_NAMES = (
    "parses",
    "kind_matches",
    "finite_defaults",
    "legal_variables",
    "finite_values",
    "finite_derivatives",
    "non_constant",
    "finite_penalty_at_zero",
)
CONSTANT_TOLERANCE = 1e-9


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ValidationReport":
        report = cls(tuple(Check(c["name"], c["passed"], c["detail"]) for c in data["checks"]))
        if report.passed != data["passed"]:
            raise ValueError("inconsistent validation report")
        return report


def _first_bad(values: np.ndarray) -> str:
    idx = int(np.flatnonzero(~np.isfinite(values))[0])
    return f"x={dsl.PROBE_GRID[idx]:g} gives {float(values[idx])!r}"


def validate(text: str, kind: ComponentKind | str) -> ValidationReport:
    """Run every check in a fixed order; later checks are skipped once one fails."""
    kind = ComponentKind(kind)
    results: list[Check] = []

    def add(name, ok, detail=""):
        results.append(Check(name, bool(ok), detail))
        return ok

    def finish() -> ValidationReport:
        done = {c.name for c in results}
        skipped = [Check(n, False, "skipped after an earlier failure") for n in CHECK_NAMES if n not in done]
        return ValidationReport(tuple(results + skipped))

    try:
        program = dsl.parse(text, check_kind=False)
    except dsl.DSLError as exc:
        add("parses", False, f"{type(exc).__name__}: {exc}")
        return finish()
    add("parses", True)

    if not add("kind_matches", program.kind is kind, f"declared {program.kind.value}, requested {kind.value}"
               if program.kind is not kind else ""):
        return finish()

    bad = [p.name for p in program.params if not math.isfinite(p.default)]
    if not add("finite_defaults", not bad, f"non-finite default for {', '.join(bad)}" if bad else ""):
        return finish()

    illegal = sorted(program.variables() - kind.variables)
    if not add("legal_variables", not illegal,
               f"IllegalVariable({kind.value}, {illegal[0]})" if illegal else ""):
        return finish()

    env = dsl.probe_env(kind)
    values, grads = dsl.evaluate_array_with_grad(program, env)
    values = np.broadcast_to(values, dsl.PROBE_GRID.shape)
    grads = np.broadcast_to(grads, dsl.PROBE_GRID.shape)
    if not add("finite_values", np.all(np.isfinite(values)),
               "" if np.all(np.isfinite(values)) else _first_bad(values)):
        return finish()
    if not add("finite_derivatives", np.all(np.isfinite(grads)),
               "" if np.all(np.isfinite(grads)) else _first_bad(grads)):
        return finish()

    if kind is ComponentKind.REGULARIZER:
        add("non_constant", True, "not required for regularizers")
    else:
        spread = float(values.max() - values.min())
        if not add("non_constant", spread > CONSTANT_TOLERANCE,
                   f"value range {spread:g} over the probe grid"):
            return finish()

    if kind is ComponentKind.REGULARIZER:
        at_zero = dsl.evaluate(program, {"w": 0.0})
        add("finite_penalty_at_zero", math.isfinite(at_zero), f"penalty at w=0 is {at_zero!r}")
    else:
        add("finite_penalty_at_zero", True, "not a regularizer")
    return finish()


def validator_pass_rate(reports: Sequence[ValidationReport]) -> float:
    if not reports:
        raise EmptyInput("no validation reports")
    return sum(r.passed for r in reports) / len(reports)
