"""Proof search and countermodels for justification logics in labeled sequent calculi."""

from .calculus import (
    AnalyticityUniverse,
    CheckResult,
    Derivation,
    RuleInstance,
    backward_instances,
    check_derivation,
    derivation_from_json,
    derivation_to_json,
    derivation_to_latex,
    generalized_axiom,
    is_initial,
    prune_superfluous,
    simplify_derivation,
    substitute_label,
)
from .logic_config import (
    EMPTY_CS,
    ConfigError,
    ConstantSpec,
    LogicConfig,
    RuleId,
    is_axiom_instance,
    parse_cs,
    preset,
    rules_for_logic,
    validate_cs,
)
from .models import (
    EvidenceUniverse,
    FittingModel,
    check_conditions,
    closure_membership,
    extract_countermodel,
    forces,
    inductive_closure_membership,
    validates_sequent,
)
from .search import Derivable, NotDerivable, SearchBudget, Unknown, compute_budgets, search
from .syntax import (
    Sequent,
    format_formula,
    format_sequent,
    format_term,
    parse_formula,
    parse_goal,
    parse_sequent,
    parse_term,
)

__version__ = "0.1.0"
