"""elfol: an extended first-order language with restricted generalized
quantifiers, possibility/necessity operators, predicate modifiers, and
reifying term constructors, together with a parser, a finite
possible-worlds evaluator, an axiom-schema engine, a bounded prover with
replayable traces, a classical-FOL reduction with effort comparison, and
a bundled freight-planning knowledge base."""

from .core import (
    And,
    Atom,
    Const,
    Equal,
    Equiv,
    Formula,
    FunApp,
    Implies,
    Ka,
    Lambda,
    Modal,
    Modified,
    Not,
    Or,
    PredConst,
    QuantRef,
    RestrictedQuant,
    Signature,
    Term,
    TermDerived,
    That,
    TrueF,
    Var,
    alpha_equivalent,
    free_vars,
    substitute,
    well_formed,
)
from .kb import KnowledgeBase, load_files
from .models import (
    IntensionalModel,
    enumerate_models,
    eval_formula,
    find_counterexample,
    model_satisfies,
)
from .prover import ProveResult, ProverConfig, TraceNode, forward_chain, prove, replay, unify
from .quantifiers import DEFAULT_REGISTRY, QuantDef, QuantRegistry, eval_quant, verify_monotonicity
from .reduction import ReductionContext, compare_effort, reduce_formula, reduce_kb
from .schemas import Schema, enumerate_instances, instantiate, match_conclusion
from .syntax import parse_formula, parse_term, render

__version__ = "0.1.0"
