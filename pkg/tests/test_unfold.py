"""Reachable unfolding into explicit transition systems."""

import itertools

import pytest

from dfcompat import (
    DomainError,
    Interpreter,
    StateBudgetExceeded,
    compute_image,
    extract_cfg,
    flatten_and_validate,
    summarize,
    unfold_to_ts,
)
from dfcompat.exprs import Binary, Const, InputRef, VarRef, eval_expr
from dfcompat.model import BoolType, IntType
from dfcompat.solver import Domain
from dfcompat.symbolic import SymbolicStep
from dfcompat.unfold import expr_interval, run_ts, ts_to_dot
from helpers import all_rows, load_model, ts_outputs, ts_step
from test_efa import pump_step


def ts_of(name, **kw):
    step = summarize(extract_cfg(flatten_and_validate(load_model(name))))
    return unfold_to_ts(step, **kw)


def test_latch_two_states():
    ts = ts_of("flipflop")
    assert len(ts.states) == 2
    assert ts.label(0) == "Delay=0"
    assert ts.label(1) == "Delay=1"
    assert ts.init == 0


def test_latch_guards_partition_each_state():
    ts = ts_of("flipflop")
    rows = all_rows(ts.input_domain())
    for state in range(len(ts.states)):
        for row in rows:
            assert len([t for g, t in ts.transitions[state] if eval_expr(g, row)]) == 1


def test_pump_reachable_states():
    ts = unfold_to_ts(pump_step())
    assert {vec[0] for vec in ts.states} == {2, 4, 5, 8, 9, 10, 11, 12, 13, 14}
    assert len(ts.states) == 10


def test_pump_image_of_initial_state():
    step = pump_step()
    image = compute_image(step, {"level": 2})
    assert image == {(4,): {"u": 0}, (5,): {"u": 1}, (2,): {"u": 2}}


def test_image_witness_is_least_row():
    step = pump_step()
    image = compute_image(step, {"level": 5})
    # staying put first happens at u = 5, every rise below that
    assert image[(5,)] == {"u": 5}
    assert image[(10,)] == {"u": 0}


def test_band_classifier_states_follow_modes():
    ts = ts_of("bands_v2")
    assert sorted(vec[0] for vec in ts.states) == [0, 1, 2, 3, 4]
    # public output stays three-valued in every state
    for state in range(len(ts.states)):
        out = ts.outputs[state]["band"]
        assert isinstance(out, Const)
        assert out.value in (0, 1, 2)


def test_independent_latches_full_product():
    ts = ts_of("tri_latch")
    assert len(ts.states) == 8


def test_gated_max_tracker_states():
    ts = ts_of("pulse_keeper")
    assert len(ts.states) == 36


def test_witnesses_replay_to_their_successor():
    ts = ts_of("bands_v1")
    step = summarize(extract_cfg(flatten_and_validate(load_model("bands_v1"))))
    for (i, t), env in ts.witnesses.items():
        binding = ts.state_binding(i)
        succ = tuple(
            eval_expr(step.updates[v], {**binding, **env}) for v in ts.var_names
        )
        assert succ == ts.states[t]


def test_stateless_system_has_single_total_state():
    ts = ts_of("cruise_v3")
    assert len(ts.states) == 1
    assert ts.label(0) == "s0"
    assert ts.transitions[0] == [(Const(True), 0)]


def test_run_matches_interpreter_on_traces():
    flat = flatten_and_validate(load_model("flipflop"))
    ts = ts_of("flipflop")
    interp = Interpreter(flat)
    rows_space = all_rows(ts.input_domain())
    for seq in itertools.product(rows_space, repeat=4):
        assert run_ts(ts, list(seq)) == interp.run(list(seq))


def test_run_rejects_out_of_domain_input():
    ts = ts_of("bands_v1")
    with pytest.raises(DomainError, match="no transition"):
        run_ts(ts, [{"u": 70}])


def test_state_budget_enforced():
    with pytest.raises(StateBudgetExceeded, match="reachable states"):
        unfold_to_ts(pump_step(), state_budget=3)


def test_unfold_detects_domain_escape():
    step = SymbolicStep(
        name="Count",
        inputs={"p": BoolType()},
        vars={"n": (IntType(0, 3), 0)},
        outputs={"y": VarRef("n")},
        updates={"n": Binary("add", VarRef("n"), Const(1))},
    )
    with pytest.raises(DomainError):
        unfold_to_ts(step)


def test_expr_interval_corners():
    dom = Domain.of(u=IntType(0, 3), w=IntType(-2, 2))
    u, w = InputRef("u"), InputRef("w")
    assert expr_interval(Binary("add", u, w), dom) == (-2, 5)
    assert expr_interval(Binary("sub", u, w), dom) == (-2, 5)
    assert expr_interval(Binary("mul", u, w), dom) == (-6, 6)
    assert expr_interval(Binary("min", u, Const(1)), dom) == (0, 1)
    assert expr_interval(Binary("max", u, Const(1)), dom) == (1, 3)
    assert expr_interval(Binary("lt", u, w), dom) is None


def test_outputs_specialized_per_state():
    ts = ts_of("flipflop")
    env = {"S": False, "R": False}
    assert ts_outputs(ts, 0, env) == {"Q": False}
    assert ts_outputs(ts, 1, env) == {"Q": True}
    assert ts_step(ts, 0, {"S": True, "R": False}) == 1
    assert ts_step(ts, 1, {"S": False, "R": True}) == 0


def test_dot_rendering():
    ts = ts_of("flipflop")
    dot = ts_to_dot(ts)
    assert dot.count("[label=\"Delay=") == 2
    assert "init -> s0" in dot
    assert "s0 -> s1" in dot
