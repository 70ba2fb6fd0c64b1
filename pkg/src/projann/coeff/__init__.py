"""Coefficient functions of circuits, streaming arithmetic and QBF arithmetization."""

from .coefffn import (CoeffFunction, MonotoneSplit, cf_table_circuit, circuit_from_coeff_fn,
                      coeff_fn_of_circuit, monotone_split)
from .qbf import QBF, QBFError, arithmetize_qbf, evaluate_qbf, format_qbf, parse_qbf, random_qbf
from .streaming import (MagnitudeBoundError, WorkspaceMeter, from_int, stream_add, stream_list_sum,
                        stream_mul, stream_sub, workspace_bounds)
