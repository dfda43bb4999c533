"""Behavioral compatibility checking for discrete dataflow models.

Parse two versions of a block-diagram model, compile each to a reachable
transition system, and decide whether one can stand in for the other by
computing a simulation preorder, with replayable counterexample traces and
constant-fix search for added input ports.
"""

from .errors import (
    ArithmeticOverflow,
    CsvSchemaError,
    DfcError,
    DomainError,
    DomainTooLarge,
    DslSyntaxError,
    IterationCapExceeded,
    ModelValidationError,
    PathExplosion,
    SolverFailure,
    StateBudgetExceeded,
)
from .model import (
    BoolType,
    EnumType,
    IntType,
    Model,
    PortMapping,
    check_interface,
    derive_port_mapping,
    flatten_and_validate,
)
from .parser import parse_mapping_file, parse_model, print_model
from .interp import Interpreter, read_trace_csv, write_trace_csv
from .cfg import extract_cfg, sorted_order
from .symbolic import SymbolicStep, prune_clones, summarize
from .efa import Efa, build_efa, image_map
from .unfold import Ts, compute_image, unfold_to_ts
from .solver import Domain, exists_forall_constants, minimal_cover, sat_witness
from .simcheck import (
    CheckConfig,
    CompatReport,
    Counterexample,
    build_step,
    check_compatibility,
    simulates,
)

__version__ = "0.1.0"

__all__ = [
    "ArithmeticOverflow",
    "BoolType",
    "CheckConfig",
    "CompatReport",
    "Counterexample",
    "CsvSchemaError",
    "DfcError",
    "Domain",
    "DomainError",
    "DomainTooLarge",
    "DslSyntaxError",
    "Efa",
    "EnumType",
    "Interpreter",
    "IntType",
    "IterationCapExceeded",
    "Model",
    "ModelValidationError",
    "PathExplosion",
    "PortMapping",
    "SolverFailure",
    "StateBudgetExceeded",
    "SymbolicStep",
    "Ts",
    "build_efa",
    "image_map",
    "build_step",
    "check_compatibility",
    "check_interface",
    "compute_image",
    "derive_port_mapping",
    "exists_forall_constants",
    "extract_cfg",
    "flatten_and_validate",
    "minimal_cover",
    "parse_mapping_file",
    "parse_model",
    "print_model",
    "prune_clones",
    "read_trace_csv",
    "sat_witness",
    "simulates",
    "sorted_order",
    "summarize",
    "unfold_to_ts",
    "write_trace_csv",
    "__version__",
]
