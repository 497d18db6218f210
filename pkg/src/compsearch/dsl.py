"""Component expression language.

A component program is a three-section text document::

    component activation "SigELU"
    param alpha = 1.0
    expr where(x >= 0, sigmoid(x), alpha * (exp(x) - 1))

Programs parse into immutable expression trees that can be evaluated on
scalars or numpy arrays, differentiated in forward mode, rendered back to a
canonical text form, and turned into fixed-length feature vectors.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
from scipy.special import expit

__all__ = [
    "ComponentKind",
    "Const",
    "Var",
    "Param",
    "Unary",
    "Binary",
    "Cond",
    "ParamSpec",
    "HypothesisProgram",
    "DSLError",
    "DSLSyntaxError",
    "UnknownFunction",
    "IllegalVariable",
    "DuplicateParam",
    "MissingDefault",
    "UnboundVariable",
    "UNARY_OPS",
    "BINARY_OPS",
    "COMPARISONS",
    "PROBE_GRID",
    "PREPROCESSOR_PROBE_STATS",
    "parse",
    "serialize",
    "evaluate",
    "evaluate_with_grad",
    "evaluate_array",
    "evaluate_array_with_grad",
    "probe_env",
    "featurize",
    "feature_length",
    "depth",
    "node_count",
    "iter_nodes",
]


class ComponentKind(str, enum.Enum):
    ACTIVATION = "activation"
    PREPROCESSOR = "preprocessor"
    REGULARIZER = "regularizer"

    @property
    def variables(self) -> frozenset[str]:
        return _KIND_VARIABLES[self]

    @property
    def primary_variable(self) -> str:
        """The variable derivatives and probes are taken with respect to."""
        return "w" if self is ComponentKind.REGULARIZER else "x"


_KIND_VARIABLES = {
    ComponentKind.ACTIVATION: frozenset({"x"}),
    ComponentKind.PREPROCESSOR: frozenset({"x", "mu", "sigma", "lo", "hi"}),
    ComponentKind.REGULARIZER: frozenset({"w"}),
}
ALL_VARIABLES = frozenset().union(*_KIND_VARIABLES.values())

UNARY_OPS = ("neg", "abs", "sin", "cos", "tanh", "sigmoid", "exp", "softplus", "sqrt", "log")
BINARY_OPS = ("add", "sub", "mul", "div", "min", "max", "pow")
COMPARISONS = (">=", ">", "<=", "<")

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_INFIX_OPS = {v: k for k, v in _INFIX.items()}
_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2}
_CALL_BINARY = ("min", "max", "pow")
_CALL_UNARY = tuple(op for op in UNARY_OPS if op != "neg")


# ---------------------------------------------------------------------------
# errors


class DSLError(ValueError):
    """Base class for all component-language errors."""


class DSLSyntaxError(DSLError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class UnknownFunction(DSLError):
    def __init__(self, name: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: unknown function {name!r}")
        self.name = name
        self.line = line
        self.col = col


class IllegalVariable(DSLError):
    def __init__(self, kind: ComponentKind, name: str):
        super().__init__(f"variable {name!r} is not available to {kind.value} components")
        self.kind = kind
        self.name = name


class DuplicateParam(DSLError):
    def __init__(self, name: str):
        super().__init__(f"parameter {name!r} declared twice")
        self.name = name


class MissingDefault(DSLError):
    def __init__(self, name: str, detail: str = "has no default value"):
        super().__init__(f"parameter {name!r} {detail}")
        self.name = name


class UnboundVariable(DSLError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} is not bound")
        self.name = name


# ---------------------------------------------------------------------------
# tree


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Cond:
    """``where(lhs <cmp> rhs, then, other)``."""

    cmp: str
    lhs: "Node"
    rhs: "Node"
    then: "Node"
    other: "Node"


Node = Union[Const, Var, Param, Unary, Binary, Cond]


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, Unary):
        return (node.arg,)
    if isinstance(node, Binary):
        return (node.left, node.right)
    if isinstance(node, Cond):
        return (node.lhs, node.rhs, node.then, node.other)
    return ()


def iter_nodes(node: Node):
    """Pre-order, left-to-right traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def depth(node: Node) -> int:
    kids = children(node)
    return 1 + (max(depth(k) for k in kids) if kids else 0)


def node_count(node: Node) -> int:
    return sum(1 for _ in iter_nodes(node))


@dataclass(frozen=True)
class ParamSpec:
    name: str
    default: float


@dataclass(frozen=True)
class HypothesisProgram:
    kind: ComponentKind
    name: str
    params: tuple[ParamSpec, ...]
    expr: Node

    @property
    def defaults(self) -> dict[str, float]:
        return {p.name: p.default for p in self.params}

    def variables(self) -> set[str]:
        return {n.name for n in iter_nodes(self.expr) if isinstance(n, Var)}


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<cmp>>=|<=|>|<)
  | (?P<op>[-+*/(),])
    """,
    re.VERBOSE,
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_HEADER_RE = re.compile(r'component[ \t]+(?P<kind>[A-Za-z_]+)[ \t]+"(?P<name>[^"\n]*)"[ \t]*\Z')
_PARAM_RE = re.compile(r"param[ \t]+(?P<name>\S+)[ \t]*(?:=[ \t]*(?P<value>\S*))?[ \t]*\Z")
_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?\Z")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _strip_comment(line: str) -> str:
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


def _tokenize(text: str, line0: int, col0: int) -> list[_Token]:
    """Tokenize an expression that starts at (line0, col0) in the source."""
    tokens = []
    pos, line, line_start = 0, line0, -col0 + 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            for i in range(pos, m.end()):
                if text[i] == "\n":
                    line += 1
                    line_start = i + 1
        else:
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _ExprParser:
    def __init__(self, tokens: list[_Token], params: Mapping[str, float]):
        self.tokens = tokens
        self.i = 0
        self.params = params

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        raise DSLSyntaxError(message, tok.line, tok.col)

    def expect(self, text: str) -> _Token:
        tok = self.tok
        if tok.text != text or tok.kind == "eof":
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            self.fail(f"expected {text!r}, found {found}")
        self.i += 1
        return tok

    def parse(self) -> Node:
        if self.tok.kind == "eof":
            self.fail("empty expression")
        node = self.additive()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r}")
        return node

    def additive(self) -> Node:
        node = self.multiplicative()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = _INFIX_OPS[self.tok.text]
            self.i += 1
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = _INFIX_OPS[self.tok.text]
            self.i += 1
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.tok
        if tok.kind == "op" and tok.text == "-":
            self.i += 1
            # a minus sign directly on a literal is part of the literal
            if self.tok.kind == "num":
                value = float(self.tok.text)
                self.i += 1
                return Const(-value)
            return Unary("neg", self.unary())
        if tok.kind == "op" and tok.text == "+":
            self.fail("unary '+' is not supported")
        return self.primary()

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.additive()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in self.params:
                return Param(tok.text)
            if tok.text in ALL_VARIABLES:
                return Var(tok.text)
            raise MissingDefault(tok.text, "is used but never declared")
        if tok.kind == "eof":
            self.fail("unexpected end of input")
        self.fail(f"unexpected {tok.text!r}")

    def call(self, name: _Token) -> Node:
        fn = name.text
        if fn not in _CALL_UNARY and fn not in _CALL_BINARY and fn != "where":
            raise UnknownFunction(fn, name.line, name.col)
        self.expect("(")
        if fn == "where":
            lhs = self.additive()
            if self.tok.kind != "cmp":
                self.fail("expected a comparison (>=, >, <=, <) as the first argument of where")
            cmp = self.tok.text
            self.i += 1
            rhs = self.additive()
            self.expect(",")
            then = self.additive()
            self.expect(",")
            other = self.additive()
            self.expect(")")
            return Cond(cmp, lhs, rhs, then, other)
        first = self.additive()
        if fn in _CALL_UNARY:
            self.expect(")")
            return Unary(fn, first)
        self.expect(",")
        second = self.additive()
        self.expect(")")
        return Binary(fn, first, second)


def _parse_sections(text: str):
    lines = text.split("\n")
    header = None
    params: list[tuple[str, float, int]] = []
    expr_text = None
    expr_pos = (0, 0)
    for lineno, raw in enumerate(lines, start=1):
        if expr_text is not None:
            expr_text += "\n" + _strip_comment(raw)
            continue
        line = _strip_comment(raw)
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        keyword = stripped.split(None, 1)[0]
        if header is None:
            if keyword != "component":
                raise DSLSyntaxError("expected 'component <kind> \"<name>\"'", lineno, col)
            m = _HEADER_RE.match(stripped)
            if m is None:
                raise DSLSyntaxError("malformed component header", lineno, col)
            kind_text = m.group("kind")
            try:
                kind = ComponentKind(kind_text)
            except ValueError:
                raise DSLSyntaxError(f"unknown component kind {kind_text!r}", lineno, col) from None
            header = (kind, m.group("name"))
        elif keyword == "param":
            m = _PARAM_RE.match(stripped)
            if m is None:
                raise DSLSyntaxError("malformed param line", lineno, col)
            name, value = m.group("name"), m.group("value")
            if not _IDENT_RE.match(name):
                raise DSLSyntaxError(f"invalid parameter name {name!r}", lineno, col)
            if name in ALL_VARIABLES or name in _CALL_UNARY or name in _CALL_BINARY or name == "where":
                raise DSLSyntaxError(f"parameter name {name!r} is reserved", lineno, col)
            if not value:
                raise MissingDefault(name)
            if not _NUMBER_RE.match(value):
                raise DSLSyntaxError(f"invalid default {value!r} for parameter {name!r}", lineno, col)
            if any(p[0] == name for p in params):
                raise DuplicateParam(name)
            params.append((name, float(value), lineno))
        elif keyword == "expr":
            offset = line.index("expr") + 4
            expr_text = line[offset:]
            expr_pos = (lineno, offset + 1)
        else:
            raise DSLSyntaxError(f"unexpected {keyword!r}; expected 'param' or 'expr'", lineno, col)
    if header is None:
        raise DSLSyntaxError("missing component header", 1, 1)
    if expr_text is None:
        raise DSLSyntaxError("missing 'expr' section", len(lines), 1)
    return header, params, expr_text, expr_pos


def parse(text: str, *, check_kind: bool = True) -> HypothesisProgram:
    """Parse component source text.

    With ``check_kind=False`` the variable-legality and finite-default checks
    are skipped so that a validator can report them separately.
    """
    (kind, name), params, expr_text, (line0, col0) = _parse_sections(text)
    defaults = {p[0]: p[1] for p in params}
    expr = _ExprParser(_tokenize(expr_text, line0, col0), defaults).parse()
    used = [n.name for n in iter_nodes(expr) if isinstance(n, Param)]
    order = {name: i for i, name in enumerate(dict.fromkeys(used))}
    # params sorted by first use; unused ones keep declaration order at the end
    specs = sorted(
        (ParamSpec(p[0], p[1]) for p in params),
        key=lambda s: order.get(s.name, len(order)),
    )
    program = HypothesisProgram(kind, name, tuple(specs), expr)
    if check_kind:
        check_program(program)
    return program


def check_program(program: HypothesisProgram) -> None:
    for spec in program.params:
        if not math.isfinite(spec.default):
            raise MissingDefault(spec.name, "has a non-finite default")
    for var in sorted(program.variables()):
        if var not in program.kind.variables:
            raise IllegalVariable(program.kind, var)


# ---------------------------------------------------------------------------
# serialization


def _format_number(value: float) -> str:
    if math.isinf(value):
        return "1e999" if value > 0 else "-1e999"
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value)) if value != 0 or math.copysign(1, value) > 0 else "-0"
    return repr(value)


def _render(node: Node) -> tuple[str, int]:
    """Return (text, precedence) where atoms/calls have precedence 4."""
    if isinstance(node, Const):
        text = _format_number(node.value)
        return text, (3 if text.startswith("-") else 4)
    if isinstance(node, (Var, Param)):
        return node.name, 4
    if isinstance(node, Unary):
        if node.op == "neg":
            inner, prec = _render(node.arg)
            if prec < 4 or isinstance(node.arg, Const):
                inner = f"({inner})"
            return f"-{inner}", 3
        return f"{node.op}({_render(node.arg)[0]})", 4
    if isinstance(node, Binary):
        if node.op in _INFIX:
            prec = _PRECEDENCE[node.op]
            left, lp = _render(node.left)
            right, rp = _render(node.right)
            if lp < prec:
                left = f"({left})"
            if rp <= prec:
                right = f"({right})"
            return f"{left} {_INFIX[node.op]} {right}", prec
        return f"{node.op}({_render(node.left)[0]}, {_render(node.right)[0]})", 4
    if isinstance(node, Cond):
        parts = [_render(n)[0] for n in (node.lhs, node.rhs, node.then, node.other)]
        return f"where({parts[0]} {node.cmp} {parts[1]}, {parts[2]}, {parts[3]})", 4
    raise TypeError(f"not an expression node: {node!r}")


def serialize_expr(node: Node) -> str:
    return _render(node)[0]


def serialize(program: HypothesisProgram) -> str:
    lines = [f'component {program.kind.value} "{program.name}"']
    lines += [f"param {p.name} = {_format_number(p.default)}" for p in program.params]
    lines.append(f"expr {serialize_expr(program.expr)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# evaluation

_COMPARE = {
    ">=": np.greater_equal,
    ">": np.greater,
    "<=": np.less_equal,
    "<": np.less,
}


def _value(node: Node, env: Mapping[str, object]):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, (Var, Param)):
        return env[node.name]
    if isinstance(node, Unary):
        a = _value(node.arg, env)
        op = node.op
        if op == "neg":
            return np.negative(a)
        if op == "abs":
            return np.abs(a)
        if op == "sigmoid":
            return expit(a)
        if op == "softplus":
            return np.logaddexp(0.0, a)
        return getattr(np, op)(a)
    if isinstance(node, Binary):
        a = _value(node.left, env)
        b = _value(node.right, env)
        op = node.op
        if op == "add":
            return np.add(a, b)
        if op == "sub":
            return np.subtract(a, b)
        if op == "mul":
            return np.multiply(a, b)
        if op == "div":
            return np.divide(a, b)
        if op == "min":
            return np.where(np.less_equal(a, b), a, b)
        if op == "max":
            return np.where(np.greater_equal(a, b), a, b)
        return np.power(a, b)
    guard = _COMPARE[node.cmp](_value(node.lhs, env), _value(node.rhs, env))
    return np.where(guard, _value(node.then, env), _value(node.other, env))


def _chain(tangent, factor):
    """tangent * factor, where a zero tangent contributes exactly zero."""
    return np.where(np.equal(tangent, 0.0), 0.0, np.multiply(tangent, factor))


def _dual(node: Node, env: Mapping[str, object], wrt: str):
    if isinstance(node, Const):
        return node.value, 0.0
    if isinstance(node, Var):
        return env[node.name], (1.0 if node.name == wrt else 0.0)
    if isinstance(node, Param):
        return env[node.name], 0.0
    if isinstance(node, Unary):
        a, da = _dual(node.arg, env, wrt)
        op = node.op
        if op == "neg":
            return np.negative(a), np.negative(da)
        if op == "abs":
            return np.abs(a), _chain(da, np.sign(a))
        if op == "sin":
            return np.sin(a), _chain(da, np.cos(a))
        if op == "cos":
            return np.cos(a), _chain(da, -np.sin(a))
        if op == "tanh":
            t = np.tanh(a)
            return t, _chain(da, 1.0 - t * t)
        if op == "sigmoid":
            s = expit(a)
            return s, _chain(da, s * (1.0 - s))
        if op == "exp":
            e = np.exp(a)
            return e, _chain(da, e)
        if op == "softplus":
            return np.logaddexp(0.0, a), _chain(da, expit(a))
        if op == "sqrt":
            r = np.sqrt(a)
            return r, _chain(da, np.divide(0.5, r))
        if op == "log":
            return np.log(a), _chain(da, np.divide(1.0, a))
        raise AssertionError(op)
    if isinstance(node, Binary):
        a, da = _dual(node.left, env, wrt)
        b, db = _dual(node.right, env, wrt)
        op = node.op
        if op == "add":
            return np.add(a, b), np.add(da, db)
        if op == "sub":
            return np.subtract(a, b), np.subtract(da, db)
        if op == "mul":
            return np.multiply(a, b), np.add(_chain(da, b), _chain(db, a))
        if op == "div":
            q = np.divide(a, b)
            return q, np.divide(np.subtract(da, _chain(db, q)), b)
        if op == "min":
            g = np.less_equal(a, b)
            return np.where(g, a, b), np.where(g, da, db)
        if op == "max":
            g = np.greater_equal(a, b)
            return np.where(g, a, b), np.where(g, da, db)
        v = np.power(a, b)
        d = np.add(
            _chain(da, np.multiply(b, np.power(a, np.subtract(b, 1.0)))),
            _chain(db, np.multiply(v, np.log(a))),
        )
        return v, d
    guard = _COMPARE[node.cmp](_value(node.lhs, env), _value(node.rhs, env))
    tv, td = _dual(node.then, env, wrt)
    fv, fd = _dual(node.other, env, wrt)
    return np.where(guard, tv, fv), np.where(guard, td, fd)


def _bind(program: HypothesisProgram, env: Mapping[str, object]) -> dict[str, object]:
    bound = program.defaults
    for name in program.kind.variables:
        if name not in env:
            raise UnboundVariable(name)
    for name in program.variables():
        if name not in env:
            raise UnboundVariable(name)
    bound.update(env)
    return bound


def evaluate_array(program: HypothesisProgram, env: Mapping[str, object]) -> np.ndarray:
    """Evaluate elementwise over (broadcastable) numpy arrays."""
    bound = _bind(program, env)
    with np.errstate(all="ignore"):
        out = _value(program.expr, bound)
        return np.asarray(out, dtype=float)


def evaluate_array_with_grad(
    program: HypothesisProgram, env: Mapping[str, object], wrt: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    wrt = wrt or program.kind.primary_variable
    if wrt not in program.kind.variables:
        raise IllegalVariable(program.kind, wrt)
    bound = _bind(program, env)
    with np.errstate(all="ignore"):
        v, d = _dual(program.expr, bound, wrt)
        v = np.asarray(v, dtype=float)
        d = np.broadcast_to(np.asarray(d, dtype=float), v.shape).copy()
    return v, d


def evaluate(program: HypothesisProgram, env: Mapping[str, float]) -> float:
    """Evaluate at a single point. Non-finite results are returned as-is."""
    return float(evaluate_array(program, env))


def evaluate_with_grad(
    program: HypothesisProgram, env: Mapping[str, float], wrt: str | None = None
) -> tuple[float, float]:
    v, d = evaluate_array_with_grad(program, env, wrt)
    return float(v), float(d)


# ---------------------------------------------------------------------------
# features

PROBE_GRID = np.arange(-20, 21) * 0.25
PREPROCESSOR_PROBE_STATS = {"mu": 0.0, "sigma": 1.0, "lo": -1.0, "hi": 1.0}
PROBE_CLAMP = 10.0

_OP_KINDS = UNARY_OPS + BINARY_OPS + ("where",)
_STRUCTURAL = ("depth", "nodes", "params", "constants", "const_mean", "const_std")


def probe_env(kind: ComponentKind, points=PROBE_GRID) -> dict[str, object]:
    env: dict[str, object] = {kind.primary_variable: np.asarray(points, dtype=float)}
    if kind is ComponentKind.PREPROCESSOR:
        env.update(PREPROCESSOR_PROBE_STATS)
    return env


def feature_length() -> int:
    return len(_OP_KINDS) + len(_STRUCTURAL) + len(PROBE_GRID) + 1


def feature_names() -> list[str]:
    return (
        [f"op_{k}" for k in _OP_KINDS]
        + list(_STRUCTURAL)
        + [f"probe_{i}" for i in range(len(PROBE_GRID))]
        + ["non_finite"]
    )


def featurize(program: HypothesisProgram) -> np.ndarray:
    """Structural counts plus the program's values on the probe grid."""
    counts = dict.fromkeys(_OP_KINDS, 0)
    consts = []
    for n in iter_nodes(program.expr):
        if isinstance(n, (Unary, Binary)):
            counts[n.op] += 1
        elif isinstance(n, Cond):
            counts["where"] += 1
        elif isinstance(n, Const):
            consts.append(n.value)
    consts_arr = np.clip(np.asarray(consts, dtype=float), -1e6, 1e6)
    structural = [
        depth(program.expr),
        node_count(program.expr),
        len(program.params),
        len(consts),
        float(consts_arr.mean()) if consts else 0.0,
        float(consts_arr.std()) if consts else 0.0,
    ]
    probes = evaluate_array(program, probe_env(program.kind))
    probes = np.broadcast_to(probes, PROBE_GRID.shape)
    non_finite = float(not np.all(np.isfinite(probes)))
    probes = np.nan_to_num(probes, nan=PROBE_CLAMP, posinf=PROBE_CLAMP, neginf=-PROBE_CLAMP)
    probes = np.clip(probes, -PROBE_CLAMP, PROBE_CLAMP)
    return np.concatenate(
        [np.array([counts[k] for k in _OP_KINDS], dtype=float), np.array(structural, float), probes, [non_finite]]
    )
