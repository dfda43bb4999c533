"""Expression trees shared by the symbolic pipeline.

Expressions are immutable and reference three namespaces: input ports
(:class:`InputRef`), state variables (:class:`VarRef`) and block-local wires
(:class:`SignalRef`).  Signal references only exist between CFG extraction and
substitution; everything downstream works over inputs and variables alone.

Values are plain Python ``bool``/``int`` plus enum variants carried as ``str``.
Integer arithmetic is evaluated in 64-bit signed range; leaving it raises
:class:`~dfcompat.errors.ArithmeticOverflow`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .errors import ArithmeticOverflow

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

Value = Union[bool, int, str]

BOOL_BIN_OPS = ("and", "or", "xor")
INT_BIN_OPS = ("add", "sub", "mul", "min", "max")
CMP_OPS = ("eq", "ne", "lt", "le", "gt", "ge")
COMMUTATIVE_OPS = frozenset({"and", "or", "xor", "add", "mul", "min", "max", "eq", "ne"})


@dataclass(frozen=True, slots=True)
class Const:
    value: Value


@dataclass(frozen=True, slots=True)
class InputRef:
    name: str


@dataclass(frozen=True, slots=True)
class VarRef:
    name: str


@dataclass(frozen=True, slots=True)
class SignalRef:
    name: str


@dataclass(frozen=True, slots=True)
class Unary:
    op: str  # "not" | "neg"
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Ite:
    cond: "Expr"
    then: "Expr"
    other: "Expr"


Expr = Union[Const, InputRef, VarRef, SignalRef, Unary, Binary, Ite]

TRUE = Const(True)
FALSE = Const(False)


def _check64(n: int) -> int:
    if n < INT64_MIN or n > INT64_MAX:
        raise ArithmeticOverflow(f"value {n} exceeds 64-bit signed range")
    return n


def eval_expr(e: Expr, env: Mapping[str, Value]) -> Value:
    """Evaluate ``e`` under a total valuation of its inputs and variables."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, (InputRef, VarRef)):
        return env[e.name]
    if isinstance(e, SignalRef):
        raise KeyError(f"unsubstituted signal reference {e.name!r}")
    if isinstance(e, Unary):
        v = eval_expr(e.arg, env)
        if e.op == "not":
            return not v
        if e.op == "neg":
            return _check64(-v)
        raise ValueError(f"unknown unary op {e.op!r}")
    if isinstance(e, Binary):
        a = eval_expr(e.left, env)
        b = eval_expr(e.right, env)
        op = e.op
        if op == "and":
            return bool(a) and bool(b)
        if op == "or":
            return bool(a) or bool(b)
        if op == "xor":
            return bool(a) != bool(b)
        if op == "add":
            return _check64(a + b)
        if op == "sub":
            return _check64(a - b)
        if op == "mul":
            return _check64(a * b)
        if op == "min":
            return a if a <= b else b
        if op == "max":
            return a if a >= b else b
        if op == "eq":
            return a == b
        if op == "ne":
            return a != b
        if op == "lt":
            return a < b
        if op == "le":
            return a <= b
        if op == "gt":
            return a > b
        if op == "ge":
            return a >= b
        raise ValueError(f"unknown binary op {op!r}")
    # Ite
    return eval_expr(e.then, env) if eval_expr(e.cond, env) else eval_expr(e.other, env)


def walk(e: Expr) -> Iterator[Expr]:
    """Yield every node of ``e`` in preorder."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Unary):
            stack.append(n.arg)
        elif isinstance(n, Binary):
            stack.append(n.right)
            stack.append(n.left)
        elif isinstance(n, Ite):
            stack.append(n.other)
            stack.append(n.then)
            stack.append(n.cond)


def free_inputs(e: Expr) -> frozenset[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, InputRef))


def free_vars(e: Expr) -> frozenset[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, VarRef))


def free_names(e: Expr) -> frozenset[str]:
    """Input and variable names referenced by ``e``."""
    return frozenset(
        n.name for n in walk(e) if isinstance(n, (InputRef, VarRef))
    )


def free_signals(e: Expr) -> frozenset[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, SignalRef))


def substitute(
    e: Expr,
    signals: Mapping[str, Expr] | None = None,
    variables: Mapping[str, Expr] | None = None,
    inputs: Mapping[str, Expr] | None = None,
) -> Expr:
    """Replace references by expressions; missing names are left untouched."""
    def go(n: Expr) -> Expr:
        if isinstance(n, SignalRef):
            if signals is not None and n.name in signals:
                return signals[n.name]
            return n
        if isinstance(n, VarRef):
            if variables is not None and n.name in variables:
                return variables[n.name]
            return n
        if isinstance(n, InputRef):
            if inputs is not None and n.name in inputs:
                return inputs[n.name]
            return n
        if isinstance(n, Const):
            return n
        if isinstance(n, Unary):
            a = go(n.arg)
            return n if a is n.arg else Unary(n.op, a)
        if isinstance(n, Binary):
            l, r = go(n.left), go(n.right)
            return n if l is n.left and r is n.right else Binary(n.op, l, r)
        c, t, o = go(n.cond), go(n.then), go(n.other)
        if c is n.cond and t is n.then and o is n.other:
            return n
        return Ite(c, t, o)

    return go(e)


def partial_eval(e: Expr, binding: Mapping[str, Value]) -> Expr:
    """Fix some inputs/variables to concrete values and fold constants."""
    consts = {k: Const(v) for k, v in binding.items()}
    return fold(substitute(e, variables=consts, inputs=consts))


def _fold_unary(op: str, a: Expr) -> Expr:
    if op == "not":
        if isinstance(a, Const):
            return Const(not a.value)
        if isinstance(a, Unary) and a.op == "not":
            return a.arg
    elif op == "neg" and isinstance(a, Const):
        n = -a.value
        if INT64_MIN <= n <= INT64_MAX:
            return Const(n)
    return Unary(op, a)


def _fold_binary(op: str, a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(eval_expr(Binary(op, a, b), {}))
        except ArithmeticOverflow:
            pass  # keep the node, evaluation will raise with context
    if op == "and":
        if a == TRUE:
            return b
        if b == TRUE:
            return a
        if FALSE in (a, b):
            return FALSE
    elif op == "or":
        if a == FALSE:
            return b
        if b == FALSE:
            return a
        if TRUE in (a, b):
            return TRUE
    elif op == "xor":
        if a == FALSE:
            return b
        if b == FALSE:
            return a
    return Binary(op, a, b)


def fold(e: Expr) -> Expr:
    """Bottom-up constant folding.  Total: overflowing folds are skipped."""
    if isinstance(e, (Const, InputRef, VarRef, SignalRef)):
        return e
    if isinstance(e, Unary):
        return _fold_unary(e.op, fold(e.arg))
    if isinstance(e, Binary):
        return _fold_binary(e.op, fold(e.left), fold(e.right))
    c = fold(e.cond)
    if isinstance(c, Const):
        return fold(e.then) if c.value else fold(e.other)
    t, o = fold(e.then), fold(e.other)
    if t == o:
        return t
    return Ite(c, t, o)


_KIND_RANK = {Const: 0, InputRef: 1, VarRef: 2, SignalRef: 3, Unary: 4, Binary: 5, Ite: 6}


def structural_key(e: Expr) -> tuple:
    """Total order key used for canonical operand ordering."""
    if isinstance(e, Const):
        v = e.value
        # bools sort before ints before enum variants, values ascending
        if isinstance(v, bool):
            tag = (0, int(v))
        elif isinstance(v, int):
            tag = (1, v)
        else:
            tag = (2, v)
        return (0, tag)
    if isinstance(e, InputRef):
        return (1, e.name)
    if isinstance(e, VarRef):
        return (2, e.name)
    if isinstance(e, SignalRef):
        return (3, e.name)
    if isinstance(e, Unary):
        return (4, e.op, structural_key(e.arg))
    if isinstance(e, Binary):
        return (5, e.op, structural_key(e.left), structural_key(e.right))
    return (6, structural_key(e.cond), structural_key(e.then), structural_key(e.other))


def normalize(e: Expr) -> Expr:
    """Canonical form: folded constants, sorted commutative operands,
    double negation removed.  Idempotent; clone detection compares these.
    """
    if isinstance(e, (Const, InputRef, VarRef, SignalRef)):
        return e
    if isinstance(e, Unary):
        return _fold_unary(e.op, normalize(e.arg))
    if isinstance(e, Binary):
        a, b = normalize(e.left), normalize(e.right)
        op = e.op
        if op in ("add", "sub") and b == Const(0):
            return a
        if op == "add" and a == Const(0):
            return b
        if op == "mul":
            if Const(0) in (a, b):
                return Const(0)
            if a == Const(1):
                return b
            if b == Const(1):
                return a
        if op == "eq" and a == b:
            return TRUE
        if op in ("ne", "lt", "gt") and a == b:
            return FALSE
        if op in ("le", "ge") and a == b:
            return TRUE
        if op in COMMUTATIVE_OPS and structural_key(b) < structural_key(a):
            a, b = b, a
        return _fold_binary(op, a, b)
    c = normalize(e.cond)
    if isinstance(c, Const):
        return normalize(e.then) if c.value else normalize(e.other)
    t, o = normalize(e.then), normalize(e.other)
    if t == o:
        return t
    if t == TRUE and o == FALSE:
        return c
    if t == FALSE and o == TRUE:
        return _fold_unary("not", c)
    return Ite(c, t, o)


def conjoin(terms: list[Expr]) -> Expr:
    """Left-associated conjunction; empty list means true."""
    out: Expr = TRUE
    for t in terms:
        if t == TRUE:
            continue
        out = t if out == TRUE else Binary("and", out, t)
    return out


def disjoin(terms: list[Expr]) -> Expr:
    out: Expr = FALSE
    for t in terms:
        if t == FALSE:
            continue
        out = t if out == FALSE else Binary("or", out, t)
    return out


_INFIX = {
    "and": "&&", "or": "||", "xor": "^", "add": "+", "sub": "-", "mul": "*",
    "eq": "==", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=",
}


def to_str(e: Expr) -> str:
    """Human-readable rendering used in dumps, DOT labels and messages."""
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, (InputRef, SignalRef)):
        return e.name
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Unary):
        inner = to_str(e.arg)
        if isinstance(e.arg, (Binary, Ite)):
            inner = f"({inner})"
        return ("!" if e.op == "not" else "-") + inner
    if isinstance(e, Binary):
        if e.op in ("min", "max"):
            return f"{e.op}({to_str(e.left)}, {to_str(e.right)})"
        l, r = to_str(e.left), to_str(e.right)
        if isinstance(e.left, (Binary, Ite)):
            l = f"({l})"
        if isinstance(e.right, (Binary, Ite)):
            r = f"({r})"
        return f"{l} {_INFIX[e.op]} {r}"
    return f"ite({to_str(e.cond)}, {to_str(e.then)}, {to_str(e.other)})"
