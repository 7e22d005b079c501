"""Systematic-generalization stress testing for symbolic integrators.

Two halves: Fail@k evaluation of an integrator over generated problem
suites (robustness, compositionality, extrapolation), and a genetic
search that grows archives of verified failure cases.  Expressions are
immutable trees in one variable; all randomness flows from explicit
seeds.
"""

from .calculus import (
    CORRECT,
    INCORRECT,
    TIMEOUT_COUNTED_CORRECT,
    UNPARSEABLE,
    EquivConfig,
    InsufficientDomain,
    Verdict,
    differentiate,
    numeric_equiv,
    verify_integral,
)
# expr.metrics (the size-summary helper) is not re-exported: importing
# the metrics submodule below would rebind the name to the module
from .expr import (
    Add,
    DivisionByZero,
    DomainError,
    Expr,
    Fn,
    InfixSyntaxError,
    IntegerLit,
    Mul,
    Pow,
    PrefixError,
    RationalLit,
    Var,
    X,
    canonicalize,
    eval_at,
    parse_infix,
    parse_prefix,
    rational,
    to_infix,
    to_prefix,
)
from .metrics import (
    EvalRecord,
    FailAtKResult,
    fail_at_k,
    failure_indicator,
    read_records,
    search_vs_model_report,
    summary_table,
    write_records,
)
from .model import (
    CachingModel,
    CandidateList,
    DecodeParams,
    ExternalModel,
    FixedModel,
    Integrator,
    MalformedResponse,
    ModelError,
    ModelUnavailable,
    ResponseTooLarge,
)
from .oracle import (
    FaultSpec,
    FaultyModel,
    ReferenceModel,
    classify,
    integrate_reference,
)
from .sagga import (
    Archive,
    ArchiveEntry,
    FitnessSpec,
    MutationConfig,
    SearchConfig,
    mutate,
)
from .sagga import run as run_search

__all__ = [
    "Add",
    "Archive",
    "ArchiveEntry",
    "CORRECT",
    "CachingModel",
    "CandidateList",
    "DecodeParams",
    "DivisionByZero",
    "DomainError",
    "EquivConfig",
    "EvalRecord",
    "Expr",
    "ExternalModel",
    "FailAtKResult",
    "FaultSpec",
    "FaultyModel",
    "FitnessSpec",
    "FixedModel",
    "Fn",
    "INCORRECT",
    "InfixSyntaxError",
    "InsufficientDomain",
    "IntegerLit",
    "Integrator",
    "MalformedResponse",
    "ModelError",
    "ModelUnavailable",
    "Mul",
    "MutationConfig",
    "Pow",
    "PrefixError",
    "RationalLit",
    "ReferenceModel",
    "ResponseTooLarge",
    "SearchConfig",
    "TIMEOUT_COUNTED_CORRECT",
    "UNPARSEABLE",
    "Var",
    "Verdict",
    "X",
    "canonicalize",
    "classify",
    "differentiate",
    "eval_at",
    "fail_at_k",
    "failure_indicator",
    "integrate_reference",
    "mutate",
    "numeric_equiv",
    "parse_infix",
    "parse_prefix",
    "rational",
    "read_records",
    "run_search",
    "search_vs_model_report",
    "summary_table",
    "to_infix",
    "to_prefix",
    "verify_integral",
    "write_records",
]
