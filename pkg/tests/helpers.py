"""Shared test utilities.

Covers corpus loading, exhaustive input enumeration, a brute-force
trace-containment oracle for cross-checking the simulation preorder, a
seeded random model-pair generator, and an in-process CLI runner.
"""

from __future__ import annotations

import copy
import io
import itertools
import random
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

from hypothesis import strategies as st

from dfcompat import Model, parse_model
from dfcompat.cli import main as cli_main
from dfcompat.exprs import Binary, Const, InputRef, Ite, Unary, Value, VarRef, eval_expr
from dfcompat.interp import Interpreter
from dfcompat.model import BoolType, IntType, flatten_and_validate
from dfcompat.solver import Domain
from dfcompat.unfold import Ts

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"

_model_cache: dict[str, str] = {}


def model_path(name: str) -> Path:
    return MODELS_DIR / f"{name}.dfm"


def load_model(name: str) -> Model:
    if name not in _model_cache:
        _model_cache[name] = model_path(name).read_text()
    return parse_model(_model_cache[name])


def interp_for(name: str) -> Interpreter:
    return Interpreter(flatten_and_validate(load_model(name)))


# constructed pair whose first divergence needs a warm-up step: the armed
# switch flips the output from step two on
DRIFTER = (
    "model Drifter\nin u : bool\nout y : bool\n"
    "block One : Constant(true)\nblock Arm : UnitDelay(false)\n"
    "block Inv : Logic(NOT)\nblock Pick : Switch\n"
    "wire One -> Arm.in\nwire u -> Inv.in1\n"
    "wire Arm -> Pick.ctrl\nwire Inv -> Pick.in1\nwire u -> Pick.in3\n"
    "wire Pick -> y\n"
)

MIRROR = "model Mirror\nin u : bool\nout y : bool\nwire u -> y\n"


# (candidate, reference) pairs exercised by several suites
FIXTURE_PAIRS = [
    ("flipflop", "flipflop"),
    ("flipflop_logic", "flipflop"),
    ("flipflop_reset", "flipflop"),
    ("bands_v1", "bands_v0"),
    ("bands_v2", "bands_v0"),
    ("bands_v2", "bands_v1"),
    ("cruise_v4", "cruise_v3"),
    ("limiter_sign", "limiter_plain"),
    ("charge_pump", "charge_pump"),
    ("tri_latch", "tri_latch"),
    ("pulse_keeper", "pulse_keeper"),
]

EXPECTED_VERDICTS = {
    ("flipflop", "flipflop"): "full",
    ("flipflop_logic", "flipflop"): "full",
    ("flipflop_reset", "flipflop"): "incompatible",
    ("bands_v1", "bands_v0"): "backward-only",
    ("bands_v2", "bands_v0"): "backward-only",
    ("bands_v2", "bands_v1"): "backward-only",
    ("cruise_v4", "cruise_v3"): "backward-only",
    ("limiter_sign", "limiter_plain"): "backward-only",
    ("charge_pump", "charge_pump"): "full",
    ("tri_latch", "tri_latch"): "full",
    ("pulse_keeper", "pulse_keeper"): "full",
}


# ---------------------------------------------------------------------------
# enumeration and oracles


def all_rows(dom: Domain) -> list[dict[str, Value]]:
    """Every total input row of the domain, in lexicographic order."""
    names = dom.sorted_names()
    return [
        dict(zip(names, combo))
        for combo in itertools.product(*(dom.values(n) for n in names))
    ]


def ts_step(ts: Ts, state: int, row: dict[str, Value]) -> int | None:
    """Deterministic successor under a row, or None when no guard matches."""
    matches = [t for g, t in ts.transitions[state] if eval_expr(g, row)]
    assert len(matches) <= 1, f"nondeterministic step from {ts.label(state)}"
    return matches[0] if matches else None


def ts_outputs(ts: Ts, state: int, row: dict[str, Value]) -> dict[str, Value]:
    return {p: eval_expr(e, row) for p, e in ts.outputs[state].items()}


def trace_containment(cand: Ts, ref: Ts, dom: Domain, depth: int = 6) -> bool:
    """Brute-force oracle: outputs agree on every input sequence up to depth.

    Explores state pairs reachable under common input prefixes; a pair with
    an output difference on some row, or a row the candidate cannot step on,
    refutes containment.  For deterministic systems this decides the same
    relation the simulation preorder does.
    """
    rows = all_rows(dom)
    level = {(cand.init, ref.init)}
    seen = set(level)
    for _ in range(depth):
        nxt: set[tuple[int, int]] = set()
        for a, b in level:
            for row in rows:
                for port, e in ref.outputs[b].items():
                    if eval_expr(e, row) != eval_expr(cand.outputs[a][port], row):
                        return False
                a2 = ts_step(cand, a, row)
                b2 = ts_step(ref, b, row)
                if a2 is None or b2 is None:
                    return False
                if (a2, b2) not in seen:
                    seen.add((a2, b2))
                    nxt.add((a2, b2))
        level = nxt
    return True


def run_cli(*argv: str) -> tuple[int, str, str]:
    """Run the CLI in process; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


# ---------------------------------------------------------------------------
# hypothesis strategies for well-typed expressions

EXPR_DOM = Domain.of(
    p=BoolType(), q=BoolType(), u=IntType(0, 3), w=IntType(-2, 2)
)

_BOOL_LEAVES = [Const(True), Const(False), InputRef("p"), VarRef("q")]
_INT_LEAVES = [Const(0), Const(1), Const(-2), InputRef("u"), VarRef("w")]


def bool_exprs(depth: int = 3) -> st.SearchStrategy:
    if depth == 0:
        return st.sampled_from(_BOOL_LEAVES)
    sub = bool_exprs(depth - 1)
    num = int_exprs(depth - 1)
    return st.one_of(
        st.sampled_from(_BOOL_LEAVES),
        st.builds(Unary, st.just("not"), sub),
        st.builds(Binary, st.sampled_from(["and", "or", "xor"]), sub, sub),
        st.builds(
            Binary, st.sampled_from(["lt", "le", "eq", "ne", "gt", "ge"]), num, num
        ),
        st.builds(Ite, sub, sub, sub),
    )


def int_exprs(depth: int = 3) -> st.SearchStrategy:
    if depth == 0:
        return st.sampled_from(_INT_LEAVES)
    sub = int_exprs(depth - 1)
    return st.one_of(
        st.sampled_from(_INT_LEAVES),
        st.builds(Unary, st.just("neg"), sub),
        st.builds(
            Binary, st.sampled_from(["add", "sub", "mul", "min", "max"]), sub, sub
        ),
        st.builds(Ite, bool_exprs(depth - 1), sub, sub),
    )


def any_exprs(depth: int = 3) -> st.SearchStrategy:
    return st.one_of(bool_exprs(depth), int_exprs(depth))


def envs() -> st.SearchStrategy:
    return st.fixed_dictionaries(
        {
            "p": st.booleans(),
            "q": st.booleans(),
            "u": st.integers(0, 3),
            "w": st.integers(-2, 2),
        }
    )


# ---------------------------------------------------------------------------
# random deterministic model pairs (shared interface, varied internals)


class GenSpec:
    """Block-diagram skeleton the generator renders to model text."""

    def __init__(self, inputs, out_kind):
        self.inputs = inputs          # [(name, "bool" | ("int", hi))]
        self.out_kind = out_kind      # "bool" | ("int", hi)
        self.blocks: list[dict] = []  # {name, kind, params: list, wires: dict}
        self.out_src = ""


def _fmt_kind(kind) -> str:
    if kind == "bool":
        return "bool"
    return f"int[0,{kind[1]}]"


def _fmt_params(blk: dict) -> str:
    k, p = blk["kind"], blk["params"]
    if not p:
        return ""
    if k == "Constant":
        v = p[0]
        return ("true" if v else "false") if isinstance(v, bool) else str(v)
    if k == "UnitDelay":
        if isinstance(p[0], bool):
            return "true" if p[0] else "false"
        return f"{p[0]}, int[0,{p[1]}]"
    if k == "Saturation":
        return f"{p[0]}, {p[1]}"
    return str(p[0])


def render_spec(spec: GenSpec, name: str) -> str:
    lines = [f"model {name}"]
    for n, kind in spec.inputs:
        lines.append(f"in {n} : {_fmt_kind(kind)}")
    lines.append(f"out y : {_fmt_kind(spec.out_kind)}")
    for blk in spec.blocks:
        params = _fmt_params(blk)
        suffix = f"({params})" if params else ""
        lines.append(f"block {blk['name']} : {blk['kind']}{suffix}")
    for blk in spec.blocks:
        for port in sorted(blk["wires"]):
            lines.append(f"wire {blk['wires'][port]} -> {blk['name']}.{port}")
    lines.append(f"wire {spec.out_src} -> y")
    return "\n".join(lines) + "\n"


def _gen_spec(rng: random.Random, inputs=None, out_kind=None) -> GenSpec:
    if inputs is None:
        inputs = []
        for i in range(rng.randint(1, 2)):
            if rng.random() < 0.5:
                inputs.append((f"i{i}", "bool"))
            else:
                inputs.append((f"i{i}", ("int", rng.randint(1, 4))))
    if out_kind is None:
        out_kind = "bool" if rng.random() < 0.5 else ("int", rng.randint(1, 3))
    spec = GenSpec(list(inputs), out_kind)
    bools = [n for n, k in inputs if k == "bool"]
    ints = [n for n, k in inputs if k != "bool"]

    def add(name, kind, params, wires, pool):
        spec.blocks.append(
            {"name": name, "kind": kind, "params": params, "wires": wires}
        )
        if pool is not None:
            pool.append(name)

    add("K0", "Constant", [rng.randint(0, 3)], {}, ints)
    if rng.random() < 0.6:
        add("K1", "Constant", [rng.randint(0, 3)], {}, ints)

    delays = []
    for i in range(rng.randint(0, 3)):
        if rng.random() < 0.5:
            add(f"d{i}", "UnitDelay", [rng.random() < 0.3], {}, bools)
            delays.append((f"d{i}", "bool", None))
        else:
            hi = rng.randint(1, 3)
            add(f"d{i}", "UnitDelay", [0, hi], {}, ints)
            delays.append((f"d{i}", "int", hi))

    for i in range(rng.randint(2, 6)):
        name = f"b{i}"
        options = ["gain", "sat"]
        if bools:
            options += ["not"]
        if len(bools) >= 2:
            options += ["logic", "logic"]
        if len(ints) >= 2:
            options += ["rel", "sum", "minmax"]
        if bools and len(ints) >= 2:
            options += ["switch_int"]
        if len(bools) >= 3:
            options += ["switch_bool"]
        kind = rng.choice(options)
        if kind == "not":
            add(name, "Logic", ["NOT"], {"in1": rng.choice(bools)}, bools)
        elif kind == "logic":
            op = rng.choice(["AND", "OR", "XOR"])
            add(name, "Logic", [op],
                {"in1": rng.choice(bools), "in2": rng.choice(bools)}, bools)
        elif kind == "rel":
            op = rng.choice(["<", "<=", "==", "!="])
            add(name, "Relational", [op],
                {"in1": rng.choice(ints), "in2": rng.choice(ints)}, bools)
        elif kind == "sum":
            add(name, "Sum", [rng.choice(["++", "+-"])],
                {"in1": rng.choice(ints), "in2": rng.choice(ints)}, ints)
        elif kind == "minmax":
            add(name, "MinMax", [rng.choice(["min", "max"])],
                {"in1": rng.choice(ints), "in2": rng.choice(ints)}, ints)
        elif kind == "gain":
            add(name, "Gain", [rng.choice([-2, -1, 2, 3])],
                {"in": rng.choice(ints)}, ints)
        elif kind == "sat":
            add(name, "Saturation", [0, rng.randint(1, 4)],
                {"in": rng.choice(ints)}, ints)
        elif kind == "switch_int":
            add(name, "Switch", [],
                {"ctrl": rng.choice(bools), "in1": rng.choice(ints),
                 "in3": rng.choice(ints)}, ints)
        else:
            add(name, "Switch", [],
                {"ctrl": rng.choice(bools), "in1": rng.choice(bools),
                 "in3": rng.choice(bools)}, bools)

    for dname, dkind, hi in delays:
        blk = next(b for b in spec.blocks if b["name"] == dname)
        if dkind == "bool":
            blk["wires"]["in"] = rng.choice(bools)
        else:
            sat = f"s_{dname}"
            add(sat, "Saturation", [0, hi], {"in": rng.choice(ints)}, None)
            blk["wires"]["in"] = sat

    if spec.out_kind == "bool":
        if not bools:
            add("Cmp", "Relational", ["<"],
                {"in1": rng.choice(ints), "in2": rng.choice(ints)}, bools)
        spec.out_src = rng.choice(bools)
    else:
        hi = spec.out_kind[1]
        add("OutClamp", "Saturation", [0, hi], {"in": rng.choice(ints)}, None)
        spec.out_src = "OutClamp"
    return spec


def _mutate(spec: GenSpec, rng: random.Random) -> None:
    """Tweak one block parameter or wiring in place."""
    swaps = {
        "<": "<=", "<=": "<", "==": "!=", "!=": "==",
        "AND": "OR", "OR": "AND", "XOR": "OR",
        "min": "max", "max": "min", "++": "+-", "+-": "++",
    }
    candidates = [
        b for b in spec.blocks
        if b["kind"] in ("Logic", "Relational", "Sum", "MinMax",
                         "Constant", "Gain", "Switch", "UnitDelay")
        and not (b["kind"] == "Logic" and b["params"][0] == "NOT")
    ]
    blk = rng.choice(candidates)
    k = blk["kind"]
    if k in ("Logic", "Relational", "Sum", "MinMax"):
        blk["params"][0] = swaps[blk["params"][0]]
    elif k == "Constant":
        blk["params"][0] = blk["params"][0] + 1
    elif k == "Gain":
        blk["params"][0] = blk["params"][0] + 1 or 2
    elif k == "Switch":
        blk["wires"]["in1"], blk["wires"]["in3"] = (
            blk["wires"]["in3"], blk["wires"]["in1"]
        )
    else:  # UnitDelay
        if isinstance(blk["params"][0], bool):
            blk["params"][0] = not blk["params"][0]
        else:
            blk["params"][0] = 1 if blk["params"][0] == 0 else 0


def random_model_pair(seed: int) -> tuple[Model, Model]:
    """Two models sharing an interface: identical, tweaked, or regenerated."""
    rng = random.Random(seed)
    spec_a = _gen_spec(rng)
    roll = rng.random()
    if roll < 0.25:
        spec_b = spec_a
    elif roll < 0.6:
        spec_b = copy.deepcopy(spec_a)
        _mutate(spec_b, rng)
    else:
        spec_b = _gen_spec(rng, inputs=spec_a.inputs, out_kind=spec_a.out_kind)
    return (
        parse_model(render_spec(spec_a, "GenA")),
        parse_model(render_spec(spec_b, "GenB")),
    )
