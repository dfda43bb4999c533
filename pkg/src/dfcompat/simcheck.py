"""Behavioral compatibility decisions.

Two models are compared through a simulation preorder on their unfolded
transition systems: the candidate must match the reference's outputs on
every mapped port and answer every reference transition, over the
reference side's input domain.  Checking both directions classifies a pair
as fully compatible, safe only for existing callers, safe only for new
callers, or incompatible, and every refusal comes with a replayable input
trace.  Extra candidate inputs can be searched for constant settings that
restore compatibility.
"""

from __future__ import annotations

import json
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

from .errors import IterationCapExceeded
from .exprs import Binary, Expr, Unary, Value, disjoin, eval_expr, partial_eval
from .model import (
    FlatModel,
    InterfaceReport,
    Model,
    PortMapping,
    check_interface,
    derive_port_mapping,
    flatten_and_validate,
)
from .cfg import extract_cfg, sorted_order
from .solver import (
    DEFAULT_BUDGET,
    Domain,
    exists_forall_constants,
    sat_witness,
)
from .symbolic import (
    DEFAULT_SPLIT_CAP,
    SymbolicStep,
    bind_inputs,
    prune_clones,
    rename_inputs,
    restrict_to_outputs,
    summarize,
)
from .unfold import DEFAULT_STATE_BUDGET, Ts, unfold_to_ts


@dataclass(frozen=True)
class CheckConfig:
    clone_pruning: bool = True
    output_split: bool = True
    datastore: str = "internal"
    datastore_order: str = "strict"
    solver_budget: int = DEFAULT_BUDGET
    split_cap: int = DEFAULT_SPLIT_CAP
    state_budget: int = DEFAULT_STATE_BUDGET
    fix_iterations: int = 16
    workers: int = 1


# ---------------------------------------------------------------------------
# simulation preorder


@dataclass
class SimFailure:
    kind: str  # "output-mismatch" | "uncovered-input"
    port: str | None
    rows: list[dict[str, Value]]
    cand_state: str
    ref_state: str


@dataclass
class SimResult:
    holds: bool
    failure: SimFailure | None
    pairs: int
    queries: int
    visited: tuple[tuple[str, str], ...] = ()


def simulates(
    cand: Ts, ref: Ts, dom: Domain, budget: int = DEFAULT_BUDGET
) -> SimResult:
    """Can the candidate mimic every behavior of the reference over dom?

    Computed as the greatest simulation relation on the reachable product:
    pairs failing output equality die immediately, then pairs whose
    reference moves are no longer answerable by moves into live pairs are
    removed until the relation stabilizes.
    """
    queries = 0
    joint_cache: dict[tuple[Expr, Expr], dict[str, Value] | None] = {}

    def jsat(ga: Expr, gb: Expr) -> dict[str, Value] | None:
        nonlocal queries
        key = (ga, gb)
        if key not in joint_cache:
            queries += 1
            joint_cache[key] = sat_witness(Binary("and", ga, gb), dom, budget)
        return joint_cache[key]

    start = (cand.init, ref.init)
    alive: dict[tuple[int, int], bool] = {}
    reason: dict[tuple[int, int], tuple] = {}
    order: list[tuple[int, int]] = []
    queue = deque([start])
    seen = {start}
    while queue:
        pair = queue.popleft()
        ai, bi = pair
        order.append(pair)
        dead = False
        for port in sorted(ref.outputs[bi]):
            queries += 1
            diff = sat_witness(
                Binary("ne", cand.outputs[ai][port], ref.outputs[bi][port]),
                dom,
                budget,
            )
            if diff is not None:
                reason[pair] = ("output", port, diff)
                alive[pair] = False
                dead = True
                break
        if dead:
            continue
        alive[pair] = True
        for gb, bj in ref.transitions[bi]:
            for ga, aj in cand.transitions[ai]:
                if jsat(ga, gb) is not None and (aj, bj) not in seen:
                    seen.add((aj, bj))
                    queue.append((aj, bj))

    changed = True
    while changed:
        changed = False
        for pair in order:
            if not alive[pair]:
                continue
            ai, bi = pair
            for gb, bj in ref.transitions[bi]:
                live = [
                    ga
                    for ga, aj in cand.transitions[ai]
                    if alive.get((aj, bj), False) and jsat(ga, gb) is not None
                ]
                queries += 1
                residual = sat_witness(
                    Binary("and", gb, Unary("not", disjoin(live))), dom, budget
                )
                if residual is None:
                    continue
                firing = [
                    aj
                    for ga, aj in cand.transitions[ai]
                    if eval_expr(ga, residual)
                ]
                if firing:
                    reason[pair] = ("step", residual, (firing[0], bj))
                else:
                    reason[pair] = ("uncovered", residual)
                alive[pair] = False
                changed = True
                break

    visited = tuple((cand.label(a), ref.label(b)) for a, b in order)
    if alive[start]:
        return SimResult(True, None, len(order), queries, visited)

    rows: list[dict[str, Value]] = []
    cur = start
    while reason[cur][0] == "step":
        rows.append(reason[cur][1])
        cur = reason[cur][2]
    tail = reason[cur]
    if tail[0] == "output":
        rows.append(tail[2])
        failure = SimFailure(
            "output-mismatch", tail[1], rows, cand.label(cur[0]), ref.label(cur[1])
        )
    else:
        rows.append(tail[1])
        failure = SimFailure(
            "uncovered-input", None, rows, cand.label(cur[0]), ref.label(cur[1])
        )
    return SimResult(False, failure, len(order), queries, visited)


# ---------------------------------------------------------------------------
# reporting types


@dataclass
class Counterexample:
    direction: str  # "backward" | "upward"
    kind: str
    port: str | None
    rows_a: list[dict[str, Value]]
    rows_b: list[dict[str, Value]]
    expected: dict[str, Value] | None
    actual: dict[str, Value] | None
    cand_state: str = ""
    ref_state: str = ""


@dataclass
class DirectionResult:
    holds: bool
    counterexample: Counterexample | None = None
    fixed_inputs: dict[str, Value] | None = None
    per_port: dict[str, bool] = field(default_factory=dict)
    pairs: int = 0
    queries: int = 0
    elapsed: float = 0.0


@dataclass
class CompatReport:
    a_name: str
    b_name: str
    mapping: list[tuple[str, str]]  # (b port, a port)
    extra_inputs_a: list[str]
    extra_outputs_a: list[str]
    interface_ok: bool
    interface_violations: list[tuple[str, str]]  # (port, reason)
    backward: DirectionResult | None
    upward: DirectionResult | None
    stats: dict = field(default_factory=dict)

    @property
    def conditional(self) -> bool:
        return bool(self.backward and self.backward.fixed_inputs)

    @property
    def verdict(self) -> str:
        back = bool(self.backward and self.backward.holds)
        up = bool(self.upward and self.upward.holds)
        if back and up:
            return "full"
        if back:
            return "backward-only"
        if up:
            return "upward-only"
        return "incompatible"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        d["conditional"] = self.conditional
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def from_dict(d: Mapping) -> "CompatReport":
        def direction(sub) -> DirectionResult | None:
            if sub is None:
                return None
            cx = sub.get("counterexample")
            return DirectionResult(
                holds=sub["holds"],
                counterexample=Counterexample(**cx) if cx else None,
                fixed_inputs=sub.get("fixed_inputs"),
                per_port=sub.get("per_port", {}),
                pairs=sub.get("pairs", 0),
                queries=sub.get("queries", 0),
                elapsed=sub.get("elapsed", 0.0),
            )

        return CompatReport(
            a_name=d["a_name"],
            b_name=d["b_name"],
            mapping=[tuple(p) for p in d["mapping"]],
            extra_inputs_a=list(d["extra_inputs_a"]),
            extra_outputs_a=list(d["extra_outputs_a"]),
            interface_ok=d["interface_ok"],
            interface_violations=[tuple(v) for v in d["interface_violations"]],
            backward=direction(d.get("backward")),
            upward=direction(d.get("upward")),
            stats=dict(d.get("stats", {})),
        )

    @staticmethod
    def from_json(text: str) -> "CompatReport":
        return CompatReport.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# pipeline pieces


def build_step(
    flat: FlatModel, config: CheckConfig = CheckConfig()
) -> SymbolicStep:
    """Flat model to symbolic step under the configured reductions."""
    cfg = extract_cfg(flat, sorted_order(flat, config.datastore_order))
    step = summarize(cfg)
    if config.clone_pruning:
        step, _ = prune_clones(step)
    return step


@dataclass
class _Prepared:
    flat_a: FlatModel
    flat_b: FlatModel
    mapping: PortMapping
    iface: InterfaceReport
    step_a: SymbolicStep | None = None
    step_b: SymbolicStep | None = None  # ports renamed onto A's names


def _rename_outputs(step: SymbolicStep, name_map: Mapping[str, str]) -> SymbolicStep:
    return replace(
        step,
        outputs={name_map.get(p, p): e for p, e in step.outputs.items()},
    )


def prepare(
    model_a: Model,
    model_b: Model,
    overrides: Mapping[str, str] | None = None,
    config: CheckConfig = CheckConfig(),
) -> _Prepared:
    flat_a = flatten_and_validate(model_a, datastore=config.datastore)
    flat_b = flatten_and_validate(model_b, datastore=config.datastore)
    mapping = derive_port_mapping(flat_a, flat_b, overrides or {})
    iface = check_interface(flat_a, flat_b, mapping)
    prep = _Prepared(flat_a, flat_b, mapping, iface)
    if not iface.compatible:
        return prep
    prep.step_a = build_step(flat_a, config)
    step_b = build_step(flat_b, config)
    b_to_a = {b: a for b, a in mapping.pairs}
    prep.step_b = _rename_outputs(rename_inputs(step_b, b_to_a), b_to_a)
    return prep


def _mapped_input_domains(prep: _Prepared) -> tuple[dict, dict]:
    """Input dtypes keyed by A-side names: (B's declared, A's declared)."""
    a_in = {p.name: p.dtype for p in prep.flat_a.inputs}
    b_in = {p.name: p.dtype for p in prep.flat_b.inputs}
    b_side = {}
    a_side = {}
    for b, a in prep.mapping.pairs:
        if b in b_in:
            b_side[a] = b_in[b]
            a_side[a] = a_in[a]
    return b_side, a_side


def _mapped_output_ports(prep: _Prepared) -> list[str]:
    b_out = {p.name for p in prep.flat_b.outputs}
    return sorted(a for b, a in prep.mapping.pairs if b in b_out)


def _check_direction(
    cand_step: SymbolicStep,
    ref_step: SymbolicStep,
    ports: Sequence[str],
    dom: Domain,
    config: CheckConfig,
) -> tuple[bool, dict[str, bool], SimFailure | None, int, int]:
    """Simulate per mapped output port (or jointly) and merge the results."""

    def run_ports(port_group: Sequence[str]):
        cand = unfold_to_ts(
            restrict_to_outputs(cand_step, port_group),
            config.state_budget,
            config.solver_budget,
        )
        ref = unfold_to_ts(
            restrict_to_outputs(ref_step, port_group),
            config.state_budget,
            config.solver_budget,
        )
        return simulates(cand, ref, dom, config.solver_budget)

    groups: list[Sequence[str]]
    if config.output_split and len(ports) > 1:
        groups = [[p] for p in ports]
    else:
        groups = [list(ports)]

    if config.workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_ports, groups))
    else:
        results = [run_ports(g) for g in groups]

    per_port: dict[str, bool] = {}
    failure: SimFailure | None = None
    pairs = queries = 0
    for group, res in zip(groups, results):
        pairs += res.pairs
        queries += res.queries
        for p in group:
            per_port[p] = res.holds
        if not res.holds and failure is None:
            failure = res.failure
    return all(per_port.values()) if per_port else True, per_port, failure, pairs, queries


def _to_counterexample(
    prep: _Prepared,
    failure: SimFailure,
    direction: str,
    ref_step: SymbolicStep,
    cand_step: SymbolicStep,
    bound: Mapping[str, Value] | None,
) -> Counterexample:
    """Lift witness rows into replayable traces for both concrete models."""
    a_names = [p.name for p in prep.flat_a.inputs]
    a_to_b = {a: b for b, a in prep.mapping.pairs}
    bound = dict(bound or {})
    rows_a = []
    rows_b = []
    for row in failure.rows:
        full = dict(row) | bound
        rows_a.append({n: full[n] for n in a_names if n in full})
        rows_b.append(
            {a_to_b[n]: v for n, v in full.items() if n in a_to_b}
        )
    expected = actual = None
    if failure.kind == "output-mismatch" and failure.port:
        expected = {failure.port: _trace_output(ref_step, failure.rows, bound, failure.port)}
        actual = {failure.port: _trace_output(cand_step, failure.rows, bound, failure.port)}
    return Counterexample(
        direction=direction,
        kind=failure.kind,
        port=failure.port,
        rows_a=rows_a,
        rows_b=rows_b,
        expected=expected,
        actual=actual,
        cand_state=failure.cand_state,
        ref_state=failure.ref_state,
    )


def _trace_output(
    step: SymbolicStep,
    rows: Sequence[Mapping[str, Value]],
    bound: Mapping[str, Value],
    port: str,
) -> Value:
    state = step.initial_state()
    val: Value | None = None
    for i, row in enumerate(rows):
        env = dict(row) | dict(bound) | state
        val = eval_expr(step.outputs[port], env)
        if i + 1 < len(rows):
            state = {v: eval_expr(e, env) for v, e in step.updates.items()}
    return val


def fix_free_ports(
    prep: _Prepared,
    dom_free: Domain,
    ports: Sequence[str],
    config: CheckConfig,
) -> tuple[dict[str, Value], dict[str, bool], int, int] | None:
    """Search constants for A's extra inputs restoring backward simulation.

    Candidates must at least equalize all mapped outputs at the initial
    state pair for every shared input; each survivor is then verified by a
    full simulation run and excluded on failure.  Returns None when no
    candidate exists; raises IterationCapExceeded when the verification
    loop runs out of attempts.
    """
    extras = sorted(prep.mapping.extra_inputs_a)
    step_a, step_b = prep.step_a, prep.step_b
    assert step_a is not None and step_b is not None
    init_a = step_a.initial_state()
    init_b = step_b.initial_state()
    agree = [
        Binary(
            "eq",
            partial_eval(step_a.outputs[p], init_a),
            partial_eval(step_b.outputs[p], init_b),
        )
        for p in ports
    ]
    necessary = agree[0] if len(agree) == 1 else _conj_all(agree)

    b_side, _ = _mapped_input_domains(prep)
    dom_check = Domain(b_side)
    exclude: list[dict[str, Value]] = []
    for _ in range(config.fix_iterations):
        cand = exists_forall_constants(
            necessary, extras, dom_free, config.solver_budget, exclude
        )
        if cand is None:
            return None
        fixed_a = bind_inputs(step_a, cand)
        holds, per_port, _, pairs, queries = _check_direction(
            fixed_a, step_b, ports, dom_check, config
        )
        if holds:
            return cand, per_port, pairs, queries
        exclude.append(cand)
    raise IterationCapExceeded(
        f"no verified constant fix within {config.fix_iterations} attempts"
    )


def _conj_all(terms: list[Expr]) -> Expr:
    acc = terms[0]
    for t in terms[1:]:
        acc = Binary("and", acc, t)
    return acc


# ---------------------------------------------------------------------------
# top-level check


def check_compatibility(
    model_a: Model,
    model_b: Model,
    overrides: Mapping[str, str] | None = None,
    config: CheckConfig = CheckConfig(),
) -> CompatReport:
    """Full pipeline: flatten, align interfaces, unfold, simulate both ways."""
    prep = prepare(model_a, model_b, overrides, config)
    b_outs = {p.name for p in prep.flat_b.outputs}
    report = CompatReport(
        a_name=prep.flat_a.name,
        b_name=prep.flat_b.name,
        mapping=list(prep.mapping.pairs),
        extra_inputs_a=sorted(prep.mapping.extra_inputs_a),
        extra_outputs_a=sorted(
            {p.name for p in prep.flat_a.outputs}
            - {a for b, a in prep.mapping.pairs if b in b_outs}
        ),
        interface_ok=prep.iface.compatible,
        interface_violations=list(prep.iface.violations),
        backward=None,
        upward=None,
    )
    if not prep.iface.compatible:
        return report

    step_a, step_b = prep.step_a, prep.step_b
    assert step_a is not None and step_b is not None
    ports = _mapped_output_ports(prep)
    b_side, a_side = _mapped_input_domains(prep)
    extra_doms = {n: step_a.inputs[n] for n in prep.mapping.extra_inputs_a}
    dom_backward = Domain(b_side | extra_doms)
    dom_upward = Domain(a_side | extra_doms)

    t0 = time.perf_counter()
    holds, per_port, failure, pairs, queries = _check_direction(
        step_a, step_b, ports, dom_backward, config
    )
    back = DirectionResult(
        holds, per_port=per_port, pairs=pairs, queries=queries,
        elapsed=time.perf_counter() - t0,
    )
    if not holds and failure is not None:
        back.counterexample = _to_counterexample(
            prep, failure, "backward", step_b, step_a, None
        )
    if not holds and prep.mapping.extra_inputs_a:
        fixed = fix_free_ports(prep, dom_backward, ports, config)
        if fixed is not None:
            binding, per_port_f, pairs_f, queries_f = fixed
            back = DirectionResult(
                True,
                fixed_inputs=binding,
                per_port=per_port_f,
                pairs=pairs + pairs_f,
                queries=queries + queries_f,
                elapsed=time.perf_counter() - t0,
                counterexample=back.counterexample,
            )
    report.backward = back

    t1 = time.perf_counter()
    holds, per_port, failure, pairs, queries = _check_direction(
        step_b, step_a, ports, dom_upward, config
    )
    up = DirectionResult(
        holds, per_port=per_port, pairs=pairs, queries=queries,
        elapsed=time.perf_counter() - t1,
    )
    if not holds and failure is not None:
        up.counterexample = _to_counterexample(
            prep, failure, "upward", step_a, step_b, None
        )
    report.upward = up

    report.stats = {
        "a": _step_stats(prep.flat_a, step_a),
        "b": _step_stats(prep.flat_b, step_b),
        "mapped_output_ports": ports,
    }
    return report


def _step_stats(flat: FlatModel, step: SymbolicStep) -> dict:
    return {
        "blocks": len(flat.blocks),
        "inputs": len(flat.inputs),
        "outputs": len(flat.outputs),
        "state_vars": len(step.vars),
    }
