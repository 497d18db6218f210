"""Known components that hypotheses are scored against."""

from __future__ import annotations

from .dsl import ComponentKind, HypothesisProgram, parse, serialize
from .store import content_id

BASELINE_SETS: dict[str, dict[str, str]] = {
    "activation-default": {
        "relu": "expr max(x, 0)",
        "sigmoid": "expr sigmoid(x)",
        "tanh": "expr tanh(x)",
        "elu": "param alpha = 1.0\nexpr where(x >= 0, x, alpha * (exp(x) - 1))",
    },
    "preprocessor-default": {
        "standardize": "expr (x - mu) / sigma",
        "minmax": "expr (x - lo) / (hi - lo)",
        "centered-minmax": "expr 2 * (x - lo) / (hi - lo) - 1",
        "tanh-standardize": "expr tanh((x - mu) / sigma)",
    },
    "regularizer-default": {
        "none": "expr 0 * w",
        "l2": "param strength = 0.001\nexpr strength * w * w",
        "l1": "param strength = 0.001\nexpr strength * abs(w)",
        "elastic-net": "param strength = 0.0005\nexpr strength * (abs(w) + w * w)",
    },
}


def baseline_programs(set_id: str) -> dict[str, HypothesisProgram]:
    """Programs of a baseline set keyed by their content id."""
    if set_id not in BASELINE_SETS:
        raise KeyError(f"unknown baseline set {set_id!r}")
    kind = ComponentKind(set_id.split("-", 1)[0])
    out = {}
    for name, body in BASELINE_SETS[set_id].items():
        program = parse(f'component {kind.value} "{name}"\n{body}\n')
        out[content_id(serialize(program))] = program
    return dict(sorted(out.items()))
