"""Symbolic step summaries.

Walking the step CFG with an expression environment eliminates every
internal signal: what remains is, per output port and per state variable,
one expression over current-state variables and current inputs.  Branches
merge as if-then-else terms, so the summary stays a single definition per
target no matter how many paths the CFG has.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import PathExplosion
from .exprs import (
    Binary,
    Const,
    Expr,
    InputRef,
    Ite,
    SignalRef,
    Unary,
    Value,
    VarRef,
    fold,
    free_names,
    free_signals,
    normalize,
    structural_key,
    substitute,
    to_str,
)
from .cfg import BranchEl, Cfg, Straight
from .model import DataType, EnumType

DEFAULT_SPLIT_CAP = 4096


@dataclass(frozen=True)
class SymbolicStep:
    """One synchronous step as closed-form expressions.

    outputs[p] and updates[v] mention only InputRef and VarRef terms; the
    VarRefs denote pre-step values throughout.
    """

    name: str
    inputs: dict[str, DataType]
    vars: dict[str, tuple[DataType, Value]]
    outputs: dict[str, Expr]
    updates: dict[str, Expr]
    enums: dict[str, EnumType] = field(default_factory=dict)

    def initial_state(self) -> dict[str, Value]:
        return {v: init for v, (_, init) in self.vars.items()}


def summarize(cfg: Cfg) -> SymbolicStep:
    flat = cfg.flat

    def process(elems: list, sigs: dict[str, Expr], varenv: dict[str, Expr]):
        for el in elems:
            if isinstance(el, Straight):
                for space, target, rhs in cfg.nodes[el.node]:
                    val = substitute(rhs, signals=sigs, variables=varenv)
                    if space == "var":
                        varenv[target] = val
                    else:
                        sigs[target] = val
            else:
                guard = substitute(el.guard, signals=sigs, variables=varenv)
                t_sigs, t_vars = dict(sigs), dict(varenv)
                process(el.then, t_sigs, t_vars)
                e_sigs, e_vars = dict(sigs), dict(varenv)
                process(el.other, e_sigs, e_vars)
                for key in t_sigs.keys() | e_sigs.keys():
                    a, b = t_sigs.get(key), e_sigs.get(key)
                    if a is None:
                        sigs[key] = b
                    elif b is None or a == b:
                        sigs[key] = a
                    else:
                        sigs[key] = Ite(guard, a, b)
                for key in varenv:
                    a, b = t_vars[key], e_vars[key]
                    varenv[key] = a if a == b else Ite(guard, a, b)

    sigs: dict[str, Expr] = {}
    varenv: dict[str, Expr] = {v: VarRef(v) for v in flat.var_decls}
    process(cfg.elements, sigs, varenv)

    outputs: dict[str, Expr] = {}
    for port, (tag, name) in flat.output_sources.items():
        outputs[port] = fold(InputRef(name) if tag == "in" else sigs[name])

    updates: dict[str, Expr] = {}
    for var, rhs in cfg.update_assigns:
        updates[var] = fold(substitute(rhs, signals=sigs, variables=varenv))
    # stores are updated in place during the walk, not via the exit node
    for var in flat.var_decls:
        if var not in updates:
            updates[var] = fold(varenv[var])

    for label, exprs in (("output", outputs), ("update", updates)):
        for target, e in exprs.items():
            left = free_signals(e)
            if left:
                raise AssertionError(
                    f"{label} {target} still references signals {sorted(left)}"
                )

    return SymbolicStep(
        name=flat.name,
        inputs={p.name: p.dtype for p in flat.inputs},
        vars=dict(flat.var_decls),
        outputs=outputs,
        updates=updates,
        enums=dict(flat.enums),
    )


# ---------------------------------------------------------------------------
# case splitting


@dataclass(frozen=True)
class GuardedDef:
    """One branch-free alternative: value applies when all conds hold."""

    conds: tuple[Expr, ...]
    value: Expr


def _extend(conds: tuple[Expr, ...], lit: Expr) -> tuple[Expr, ...] | None:
    """Add a normalized literal; None signals a contradictory set."""
    lit = normalize(lit)
    if lit == Const(False):
        return None
    if lit == Const(True) or lit in conds:
        return conds
    neg = normalize(Unary("not", lit))
    if neg in conds:
        return None
    return conds + (lit,)


def split_expr(e: Expr, cap: int = DEFAULT_SPLIT_CAP) -> list[GuardedDef]:
    """All branch-free alternatives of an expression.

    Splits on every Ite, including ones nested inside conditions and
    arithmetic operands.  Contradictory condition sets are dropped as they
    form; more than `cap` live alternatives aborts with PathExplosion.
    """

    def check(cases: list) -> list:
        if len(cases) > cap:
            raise PathExplosion(
                f"case split exceeded {cap} alternatives; "
                f"raise the cap or simplify the model"
            )
        return cases

    def go(e: Expr) -> list[tuple[tuple[Expr, ...], Expr]]:
        if isinstance(e, (Const, InputRef, VarRef, SignalRef)):
            return [((), e)]
        if isinstance(e, Unary):
            return check([(c, Unary(e.op, v)) for c, v in go(e.arg)])
        if isinstance(e, Binary):
            out = []
            for cl, vl in go(e.left):
                for cr, vr in go(e.right):
                    conds = cl
                    ok = True
                    for lit in cr:
                        ext = _extend(conds, lit)
                        if ext is None:
                            ok = False
                            break
                        conds = ext
                    if ok:
                        out.append((conds, Binary(e.op, vl, vr)))
            return check(out)
        assert isinstance(e, Ite)
        out = []
        for cc, cv in go(e.cond):
            for arm, taken in ((e.then, cv), (e.other, Unary("not", cv))):
                base = _extend(cc, taken)
                if base is None:
                    continue
                for ca, va in go(arm):
                    conds = base
                    ok = True
                    for lit in ca:
                        ext = _extend(conds, lit)
                        if ext is None:
                            ok = False
                            break
                        conds = ext
                    if ok:
                        out.append((conds, va))
        return check(out)

    return [GuardedDef(conds, fold(value)) for conds, value in go(fold(e))]


# ---------------------------------------------------------------------------
# clone pruning


def detect_clones(step: SymbolicStep) -> dict[str, str]:
    """Map each redundant state variable to its surviving representative.

    Two variables are merged when they start equal and their updates are
    structurally identical once every variable is read through its class
    representative; the partition is refined from the coarsest grouping, so
    any stable mutual recursion between clones is kept merged.
    """
    groups: dict[object, list[str]] = {}
    for v, (dtype, init) in step.vars.items():
        groups.setdefault((dtype, init), []).append(v)
    classes = [sorted(g) for g in groups.values()]

    while True:
        rep = {v: members[0] for members in classes for v in members}
        remap = {v: VarRef(r) for v, r in rep.items() if r != v}
        refined: list[list[str]] = []
        changed = False
        for members in classes:
            sig_groups: dict[object, list[str]] = {}
            for v in members:
                key = structural_key(
                    normalize(substitute(step.updates[v], variables=remap))
                )
                sig_groups.setdefault(key, []).append(v)
            if len(sig_groups) > 1:
                changed = True
            refined.extend(sorted(g) for g in sig_groups.values())
        classes = refined
        if not changed:
            break

    return {
        v: members[0]
        for members in classes
        for v in members[1:]
        if len(members) > 1
    }


def prune_clones(step: SymbolicStep) -> tuple[SymbolicStep, dict[str, str]]:
    """Drop variables that provably mirror another one."""
    mapping = detect_clones(step)
    if not mapping:
        return step, {}
    remap = {v: VarRef(r) for v, r in mapping.items()}
    outputs = {p: fold(substitute(e, variables=remap)) for p, e in step.outputs.items()}
    updates = {
        v: fold(substitute(e, variables=remap))
        for v, e in step.updates.items()
        if v not in mapping
    }
    vars_left = {v: d for v, d in step.vars.items() if v not in mapping}
    return replace(step, vars=vars_left, outputs=outputs, updates=updates), mapping


# ---------------------------------------------------------------------------
# interface adjustments


def bind_inputs(step: SymbolicStep, binding: Mapping[str, Value]) -> SymbolicStep:
    """Pin input ports to constants and remove them from the interface."""
    consts = {n: Const(v) for n, v in binding.items()}
    return replace(
        step,
        inputs={n: d for n, d in step.inputs.items() if n not in binding},
        outputs={p: fold(substitute(e, inputs=consts)) for p, e in step.outputs.items()},
        updates={v: fold(substitute(e, inputs=consts)) for v, e in step.updates.items()},
    )


def rename_inputs(step: SymbolicStep, name_map: Mapping[str, str]) -> SymbolicStep:
    """Rewrite input port names, e.g. onto the peer model's port names."""
    refs = {old: InputRef(new) for old, new in name_map.items()}
    return replace(
        step,
        inputs={name_map.get(n, n): d for n, d in step.inputs.items()},
        outputs={p: substitute(e, inputs=refs) for p, e in step.outputs.items()},
        updates={v: substitute(e, inputs=refs) for v, e in step.updates.items()},
    )


def step_to_text(step: SymbolicStep) -> str:
    """Readable dump of the closed-form step definitions."""
    lines = [f"step {step.name}"]
    for n, dt in sorted(step.inputs.items()):
        lines.append(f"  in  {n} : {dt}")
    for v, (dt, init) in sorted(step.vars.items()):
        lines.append(f"  var {v} : {dt} = {init!r}")
    for p, e in sorted(step.outputs.items()):
        lines.append(f"  out {p} = {to_str(e)}")
    for v, e in sorted(step.updates.items()):
        lines.append(f"  {v}' = {to_str(e)}")
    return "\n".join(lines) + "\n"


def restrict_to_outputs(step: SymbolicStep, ports: Sequence[str]) -> SymbolicStep:
    """Keep only the given outputs plus the state they transitively need."""
    keep: set[str] = set()
    frontier: set[str] = set()
    for p in ports:
        frontier |= free_names(step.outputs[p]) & step.vars.keys()
    while frontier - keep:
        keep |= frontier
        frontier = set()
        for v in keep:
            frontier |= free_names(step.updates[v]) & step.vars.keys()
    used_inputs: set[str] = set()
    for p in ports:
        used_inputs |= free_names(step.outputs[p]) & step.inputs.keys()
    for v in keep:
        used_inputs |= free_names(step.updates[v]) & step.inputs.keys()
    return replace(
        step,
        inputs={n: d for n, d in step.inputs.items() if n in used_inputs},
        vars={v: d for v, d in step.vars.items() if v in keep},
        outputs={p: step.outputs[p] for p in ports},
        updates={v: step.updates[v] for v in keep},
    )
