"""Concrete step interpreter over flat models.

This is the executable ground truth the symbolic pipeline is tested against:
it walks the schedule directly, skipping blocks whose enable chain is off,
and applies delay updates after the output phase.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping, Sequence

from .errors import CsvSchemaError, DomainError
from .exprs import Value, _check64
from .model import EnumType, FlatBlock, FlatModel, Port, hold_var, in_domain, kind_of
from .cfg import Schedule, sorted_order

_REL_FUNCS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class Interpreter:
    """Deterministic executor for one flat model."""

    def __init__(self, flat: FlatModel, datastore_order: str = "strict"):
        self.flat = flat
        self.schedule: Schedule = sorted_order(flat, datastore_order)
        self._input_ports = {p.name: p for p in flat.inputs}
        self._output_ports = {p.name: p for p in flat.outputs}

    def initial_state(self) -> dict[str, Value]:
        return {v: init for v, (_, init) in self.flat.var_decls.items()}

    def validate_inputs(self, inputs: Mapping[str, Value]) -> None:
        for name, port in self._input_ports.items():
            if name not in inputs:
                raise DomainError(f"missing value for input {name}")
            if not in_domain(port.dtype, inputs[name]):
                raise DomainError(
                    f"input {name}={inputs[name]!r} outside {port.dtype}"
                )

    def step(
        self, state: Mapping[str, Value], inputs: Mapping[str, Value]
    ) -> tuple[dict[str, Value], dict[str, Value]]:
        """Run one synchronous step; returns (outputs, successor state)."""
        sigs: dict[str, Value] = {}
        varvals: dict[str, Value] = dict(state)

        def val_of(src: tuple[str, str]) -> Value:
            tag, name = src
            return inputs[name] if tag == "in" else sigs[name]

        def gates_on(srcs: Iterable[tuple[str, str]]) -> bool:
            for tag, name in srcs:
                if tag == "in":
                    if not inputs[name]:
                        return False
                elif not sigs.get(name, False):
                    return False
            return True

        for path in self.schedule.output_phase:
            blk = self.flat.blocks[path]
            if not gates_on(blk.enables):
                continue
            if blk.kind == "HoldOutput":
                if gates_on(blk.params["gate"]):
                    sigs[path] = val_of(blk.inputs["in"])
                else:
                    sigs[path] = varvals[hold_var(path)]
            elif blk.kind == "DataStoreWrite":
                varvals[blk.params["store"]] = val_of(blk.inputs["in"])
            else:
                sigs[path] = self._combinational(blk, val_of, varvals)

        for path in self.schedule.update_phase:
            blk = self.flat.blocks[path]
            if blk.kind == "UnitDelay":
                if gates_on(blk.enables):
                    varvals[path] = val_of(blk.inputs["in"])
            elif path in sigs:  # HoldOutput latches whenever its scope ran
                varvals[hold_var(path)] = sigs[path]

        for var, new in varvals.items():
            dtype = self.flat.var_decls[var][0]
            if not in_domain(dtype, new):
                raise DomainError(f"state {var}={new!r} left {dtype}")

        outputs: dict[str, Value] = {}
        for name, src in self.flat.output_sources.items():
            val = val_of(src)
            if not in_domain(self._output_ports[name].dtype, val):
                raise DomainError(
                    f"output {name}={val!r} outside {self._output_ports[name].dtype}"
                )
            outputs[name] = val
        return outputs, varvals

    def run(
        self,
        rows: Sequence[Mapping[str, Value]],
        state: Mapping[str, Value] | None = None,
    ) -> list[dict[str, Value]]:
        """Feed a whole input trace; returns the output row per step."""
        cur = dict(state) if state is not None else self.initial_state()
        out: list[dict[str, Value]] = []
        for row in rows:
            self.validate_inputs(row)
            step_out, cur = self.step(cur, row)
            out.append(step_out)
        return out

    def _combinational(self, blk: FlatBlock, val_of, varvals) -> Value:
        k = blk.kind
        if k == "Constant":
            return blk.params["value"]
        if k == "UnitDelay":
            return varvals[blk.path]
        if k == "DataStoreRead":
            return varvals[blk.params["store"]]
        if k == "Switch":
            c = val_of(blk.inputs["ctrl"])
            return val_of(blk.inputs["in1"] if c else blk.inputs["in3"])
        if k == "Logic":
            op = blk.params["op"]
            a = val_of(blk.inputs["in1"])
            if op == "NOT":
                return not a
            b = val_of(blk.inputs["in2"])
            if op == "AND":
                return a and b
            if op == "OR":
                return a or b
            return a != b  # XOR
        if k == "Relational":
            return _REL_FUNCS[blk.params["op"]](
                val_of(blk.inputs["in1"]), val_of(blk.inputs["in2"])
            )
        if k == "Sum":
            acc = 0
            for i, sign in enumerate(blk.params["signs"]):
                term = val_of(blk.inputs[f"in{i + 1}"])
                acc = _check64(acc + term if sign == "+" else acc - term)
            return acc
        if k == "Product":
            return _check64(val_of(blk.inputs["in1"]) * val_of(blk.inputs["in2"]))
        if k == "Gain":
            return _check64(blk.params["k"] * val_of(blk.inputs["in"]))
        if k == "MinMax":
            f = min if blk.params["mode"] == "min" else max
            return f(val_of(blk.inputs["in1"]), val_of(blk.inputs["in2"]))
        if k == "Saturation":
            return min(max(val_of(blk.inputs["in"]), blk.params["lo"]), blk.params["hi"])
        raise AssertionError(f"unschedulable kind {k}")


# ---------------------------------------------------------------------------
# trace CSV


def format_value(val: Value) -> str:
    if isinstance(val, bool):
        return "1" if val else "0"
    return str(val)


def parse_value(text: str, port: Port) -> Value:
    text = text.strip()
    kind = kind_of(port.dtype)
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true"):
            return True
        if low in ("0", "false"):
            return False
        raise CsvSchemaError(f"column {port.name}: {text!r} is not a boolean")
    if kind == "int":
        try:
            val: Value = int(text)
        except ValueError:
            raise CsvSchemaError(f"column {port.name}: {text!r} is not an integer")
    else:
        assert isinstance(port.dtype, EnumType)
        val = text
    if not in_domain(port.dtype, val):
        raise CsvSchemaError(f"column {port.name}: {text!r} outside {port.dtype}")
    return val


def write_trace_csv(rows: Sequence[Mapping[str, Value]], ports: Sequence[Port]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [p.name for p in ports]
    writer.writerow(names)
    for row in rows:
        writer.writerow([format_value(row[n]) for n in names])
    return buf.getvalue()


def read_trace_csv(text: str, ports: Sequence[Port]) -> list[dict[str, Value]]:
    """Parse a trace; every port must have a column, extras are ignored."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvSchemaError("trace file is empty")
    header = [h.strip() for h in header]
    cols: dict[str, int] = {}
    for port in ports:
        if port.name not in header:
            raise CsvSchemaError(f"trace is missing input column {port.name}")
        cols[port.name] = header.index(port.name)
    rows: list[dict[str, Value]] = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        row: dict[str, Value] = {}
        for port in ports:
            idx = cols[port.name]
            if idx >= len(raw):
                raise CsvSchemaError(f"line {lineno}: too few columns")
            row[port.name] = parse_value(raw[idx], port)
        rows.append(row)
    return rows
