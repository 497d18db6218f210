"""Sources of raw candidate programs: a corpus file, a grammar sampler, or a chat-completion endpoint."""

from __future__ import annotations

import json
import logging
import os
import re
import string
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import dsl
from .dsl import Binary, ComponentKind, Cond, Const, HypothesisProgram, ParamSpec, Param, Unary, Var
from .store import content_id

log = logging.getLogger(__name__)

PROMPT_DIR = Path(__file__).parent / "prompts"
PROMPT_STYLES = ("IEP", "NEP")
API_KEY_ENV = "COMPSEARCH_API_KEY"
SEPARATOR = "---"


class GeneratorError(RuntimeError):
    pass


class MissingFile(GeneratorError):
    pass


class NotEnoughEntries(GeneratorError):
    pass


class GeneratorExhausted(GeneratorError):
    pass


class TransportError(GeneratorError):
    pass


class AuthError(GeneratorError):
    pass


class RateLimited(GeneratorError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


@dataclass(frozen=True)
class GeneratorRequest:
    kind: ComponentKind
    style: str = "IEP"
    count: int = 0
    seed: int = 0
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ComponentKind(self.kind))
        if self.count < 0 or self.start < 0:
            raise ValueError("count and start must be >= 0")
        if self.style not in PROMPT_STYLES:
            raise ValueError(f"unknown prompt style {self.style!r}")


@dataclass(frozen=True)
class RawCandidate:
    text: str
    source: str
    prompt_style: str
    index: int
    model: str | None = None
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# corpus


def read_corpus(path: Path | str) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"corpus file {path} does not exist")
    entries, current = [], []
    for line in path.read_text(encoding="utf-8").splitlines(keepends=True):
        if line.strip() == SEPARATOR and line.rstrip("\r\n") == SEPARATOR:
            entries.append("".join(current))
            current = []
        else:
            current.append(line)
    entries.append("".join(current))
    return [e for e in entries if e.strip()]


def corpus_next(path: Path | str, request: GeneratorRequest) -> list[RawCandidate]:
    """Entries ``start .. start + count`` of a ``---``-separated corpus, in file order."""
    entries = read_corpus(path)
    end = request.start + request.count
    if end > len(entries):
        raise NotEnoughEntries(f"{path} has {len(entries)} entries, {end} requested")
    source = f"corpus:{Path(path).name}"
    return [
        RawCandidate(entries[i], source, request.style, i)
        for i in range(request.start, end)
    ]


# ---------------------------------------------------------------------------
# grammar sampler

RANDOM_MAX_DEPTH = 6
_LEAF_WEIGHTS = {"var": 0.55, "param": 0.15, "const": 0.30}
_INNER_WEIGHTS = {"unary": 0.45, "binary": 0.45, "where": 0.10}


class _Sampler:
    def __init__(self, rng: np.random.Generator, kind: ComponentKind, params: Sequence[str], max_depth: int):
        self.rng = rng
        self.kind = kind
        self.params = list(params)
        self.max_depth = max_depth
        extra = sorted(kind.variables - {kind.primary_variable})
        self.variables = [kind.primary_variable] * max(1, len(extra)) + extra

    def choice(self, weights: dict):
        keys = list(weights)
        p = np.array([weights[k] for k in keys], dtype=float)
        return keys[int(self.rng.choice(len(keys), p=p / p.sum()))]

    def const(self) -> Const:
        return Const(round(float(self.rng.uniform(-2.0, 2.0)), 2))

    def leaf(self):
        weights = dict(_LEAF_WEIGHTS)
        if not self.params:
            weights.pop("param")
        kind = self.choice(weights)
        if kind == "var":
            return Var(self.variables[int(self.rng.integers(len(self.variables)))])
        if kind == "param":
            return Param(self.params[int(self.rng.integers(len(self.params)))])
        return self.const()

    def node(self, depth: int):
        # leaf probability grows with depth; depth counts from 1 at the root
        if depth >= self.max_depth or (depth > 1 and self.rng.random() < depth / (self.max_depth + 1)):
            return self.leaf()
        kind = self.choice(_INNER_WEIGHTS)
        if kind == "unary":
            op = dsl.UNARY_OPS[int(self.rng.integers(len(dsl.UNARY_OPS)))]
            return Unary(op, self.node(depth + 1))
        if kind == "binary":
            op = dsl.BINARY_OPS[int(self.rng.integers(len(dsl.BINARY_OPS)))]
            return Binary(op, self.node(depth + 1), self.node(depth + 1))
        cmp = dsl.COMPARISONS[int(self.rng.integers(len(dsl.COMPARISONS)))]
        return Cond(cmp, Var(self.kind.primary_variable), self.const(),
                    self.node(depth + 1), self.node(depth + 1))


def random_program(rng: np.random.Generator, kind: ComponentKind | str, max_depth: int = RANDOM_MAX_DEPTH,
                   name: str = "random") -> HypothesisProgram:
    kind = ComponentKind(kind)
    n_params = int(rng.integers(0, 3))
    params = [ParamSpec(f"p{i}", round(float(rng.uniform(0.1, 2.0)), 2)) for i in range(n_params)]
    expr = _Sampler(rng, kind, [p.name for p in params], max_depth).node(1)
    # round-trip through text so params come out in canonical order
    return dsl.parse(dsl.serialize(HypothesisProgram(kind, name, tuple(params), expr)))


def random_next(request: GeneratorRequest, max_depth: int = RANDOM_MAX_DEPTH) -> list[RawCandidate]:
    """Seeded grammar samples; candidate i depends only on (seed, i)."""
    out = []
    for i in range(request.start, request.start + request.count):
        rng = np.random.default_rng([request.seed, i])
        program = random_program(rng, request.kind, max_depth, name=f"random-{request.seed}-{i}")
        out.append(RawCandidate(dsl.serialize(program), f"random:{request.seed}", request.style, i))
    return out


# ---------------------------------------------------------------------------
# remote chat-completion source

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    model: str
    api_key_env: str = API_KEY_ENV
    temperature: float = 0.7
    max_retries: int = 3
    max_connections: int = 4
    timeout: float = 60.0
    backoff: float = 1.0


def _load_styles() -> dict:
    return json.loads((PROMPT_DIR / "styles.json").read_text(encoding="utf-8"))


def render_prompt(kind: ComponentKind | str, style: str) -> str:
    kind = ComponentKind(kind)
    if style not in PROMPT_STYLES:
        raise ValueError(f"unknown prompt style {style!r}")
    styles = _load_styles()
    template = string.Template((PROMPT_DIR / "base.txt").read_text(encoding="utf-8"))
    return template.substitute(
        kind=kind.value,
        kind_label={"activation": "activation function", "preprocessor": "input preprocessing function",
                    "regularizer": "weight regularization penalty"}[kind.value],
        variables=", ".join(sorted(kind.variables, key=lambda v: (v != kind.primary_variable, v))),
        variable_notes=styles["variable_notes"][kind.value],
        example=styles["examples"][kind.value],
        instruction=styles[style][kind.value],
    )


def extract_fenced(reply: str) -> str | None:
    m = _FENCE_RE.search(reply)
    return m.group(1) if m else None


def _retry_after(response) -> float | None:
    value = response.headers.get("retry-after")
    try:
        return float(value) if value is not None else None
    except ValueError:
        return None


def _fetch_one(client, endpoint: EndpointConfig, api_key: str, prompt: str, index: int,
               request: GeneratorRequest, sleep: Callable[[float], None]) -> RawCandidate:
    import httpx

    body = {
        "model": endpoint.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": endpoint.temperature,
    }
    headers = {"Authorization": f"Bearer {api_key}"}
    malformed = 0
    attempt = 0
    while True:
        attempt += 1
        try:
            response = client.post(endpoint.url, json=body, headers=headers, timeout=endpoint.timeout)
        except httpx.TransportError as exc:
            if attempt > endpoint.max_retries:
                raise TransportError(f"request {index} failed: {exc}") from exc
            sleep(endpoint.backoff * 2 ** (attempt - 1))
            continue
        if response.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {response.status_code})")
        if response.status_code == 429:
            wait = _retry_after(response)
            if attempt > endpoint.max_retries:
                raise RateLimited("rate limited by endpoint", wait)
            sleep(wait if wait is not None else endpoint.backoff * 2 ** (attempt - 1))
            continue
        if response.status_code >= 500:
            if attempt > endpoint.max_retries:
                raise TransportError(f"endpoint returned HTTP {response.status_code}")
            sleep(endpoint.backoff * 2 ** (attempt - 1))
            continue
        if response.status_code >= 400:
            raise TransportError(f"endpoint returned HTTP {response.status_code}: {response.text[:200]}")
        text = None
        try:
            reply = response.json()["choices"][0]["message"]["content"]
            text = extract_fenced(reply)
        except (ValueError, KeyError, IndexError, TypeError):
            pass
        if text is not None:
            return RawCandidate(text, f"llm:{endpoint.model}", request.style, index, endpoint.model,
                                {"attempts": attempt})
        malformed += 1
        if malformed > endpoint.max_retries:
            log.warning("no code block in reply %d after %d attempts", index, attempt)
            return RawCandidate("", f"llm:{endpoint.model}", request.style, index, endpoint.model,
                                {"attempts": attempt, "malformed": True})


def llm_next(endpoint: EndpointConfig, request: GeneratorRequest, *, transport=None,
             sleep: Callable[[float], None] = time.sleep) -> list[RawCandidate]:
    """Ask a chat-completion endpoint for ``count`` programs; output order follows request index."""
    import httpx

    api_key = os.environ.get(endpoint.api_key_env)
    if not api_key:
        raise AuthError(f"set the {endpoint.api_key_env} environment variable to the endpoint credential")
    prompt = render_prompt(request.kind, request.style)
    indices = list(range(request.start, request.start + request.count))
    if not indices:
        return []
    limits = httpx.Limits(max_connections=endpoint.max_connections)
    with httpx.Client(transport=transport, limits=limits) as client:
        with ThreadPoolExecutor(max_workers=max(1, endpoint.max_connections)) as pool:
            futures = [pool.submit(_fetch_one, client, endpoint, api_key, prompt, i, request, sleep)
                       for i in indices]
            return [f.result() for f in futures]


# ---------------------------------------------------------------------------


def canonical_text(text: str) -> str | None:
    """Canonical rendering of a program, or None if it does not parse."""
    try:
        return dsl.serialize(dsl.parse(text, check_kind=False))
    except dsl.DSLError:
        return None


def hypothesis_id(text: str) -> str:
    canonical = canonical_text(text)
    return content_id(canonical if canonical is not None else text)


def dedupe(candidates: Sequence[RawCandidate]) -> tuple[list[RawCandidate], int]:
    """Drop later copies of an already-seen canonical program. Unparsable texts are always kept."""
    seen: set[str] = set()
    unique = []
    for cand in candidates:
        canonical = canonical_text(cand.text)
        if canonical is not None:
            if canonical in seen:
                continue
            seen.add(canonical)
        unique.append(cand)
    return unique, len(candidates) - len(unique)
