"""Semiring parsing with tensor-valued rule weights for latent-variable grammars."""
from __future__ import annotations

from .deduction import Item, parse, sentence_value
from .derivation import flatten, sentence_value_oracle, string_value, tree_value
from .errors import (
    ConfigurationError,
    DescriptionMismatch,
    GrammarSyntaxError,
    LvspError,
    NonConvergenceWarning,
    PartialOperationError,
    SchedulingError,
    UndefinedPosterior,
    UnknownTerminal,
    UnsupportedOperation,
    WellDefinednessError,
)
from .grammar import Rule, Tree, WeightedCFG, enumerate_derivations, parse_grammar_file
from .outside import compute_outside, expected_rule_counts, inside_outside_product
from .semiring import SEMIRING_NAMES, make_semiring
from .tensor import Tensor, contract, contract_list, contract_star, identity_tensor, permute

__version__ = "0.1.0"
