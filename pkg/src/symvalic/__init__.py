"""symvalic: a symbolic value-flow analyzer for a small contract language."""

from .deps import (
    Conflict, DependencyBudget, DependencyMap, TrackingPlan, combine, restrict,
)
from .ir import Contract, Function, Statement, harvest_constants, validate
from .parser import ParseError, parse, pretty
from .symexpr import (
    BinOp, Concat, Const, Expr, Not, OWNER, OWNER_UNIQUE, Sha3, Sym,
    UNPRIVILEGED_USER, USER_UNIQUE, eval_concrete, implies, normalize,
    value_for_var,
)
from .valueflow import (
    AnalysisConfig, AnalysisResult, Inference, ReachabilityFact, analyze,
    seed_inputs, stmt_reachable, var_may_be,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig", "AnalysisResult", "BinOp", "Concat", "Conflict",
    "Const", "Contract", "DependencyBudget", "DependencyMap", "Expr",
    "Function", "Inference", "Not", "OWNER", "OWNER_UNIQUE", "ParseError",
    "ReachabilityFact", "Sha3", "Statement", "Sym", "TrackingPlan",
    "UNPRIVILEGED_USER", "USER_UNIQUE", "analyze", "combine", "eval_concrete",
    "harvest_constants", "implies", "normalize", "parse", "pretty",
    "restrict", "seed_inputs", "stmt_reachable", "validate", "value_for_var",
    "var_may_be",
]
