"""Circuit IR with projection gates: building, checking, evaluating, expanding."""

from .builder import Builder, splice
from .evaluate import (ResourceLimitError, UnboundVariableError, evaluate, evaluate_lanes,
                       evaluate_mod, expand)
from .ir import (Circuit, CircuitError, Gate, Instance, constant_free_check, degree_bounds,
                 find_violation, is_projection_free, prune, size, validate)
from .textfmt import CircuitFormatError, format_circuit, parse_circuit

__all__ = [
    "Builder", "Circuit", "CircuitError", "CircuitFormatError", "Gate", "Instance",
    "ResourceLimitError", "UnboundVariableError", "constant_free_check", "degree_bounds",
    "evaluate", "evaluate_lanes", "evaluate_mod", "expand", "find_violation",
    "format_circuit", "is_projection_free", "parse_circuit", "prune", "size", "splice",
    "validate",
]
