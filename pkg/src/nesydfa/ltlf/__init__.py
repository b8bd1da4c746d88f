"""LTLf formulas: parsing, direct semantics, and compilation to minimal DFAs."""
from .catalog import GLOB_AVOID, SEQ_VISIT, VISIT, declare_catalog, declare_formulas, pattern
from .dfa import Dfa, isomorphic, minimize
from .formula import Formula, UnknownPropositionError, propositions
from .parser import LtlfSyntaxError, parse, to_text
from .semantics import evaluate, truth_table
from .translate import DEFAULT_STATE_CAP, StateBudgetExceeded, compile, compile_raw, nnf

__all__ = [
    "Formula", "Dfa", "parse", "to_text", "evaluate", "truth_table", "compile", "compile_raw",
    "minimize", "isomorphic", "nnf", "pattern", "declare_catalog", "declare_formulas",
    "propositions", "LtlfSyntaxError", "UnknownPropositionError", "StateBudgetExceeded",
    "DEFAULT_STATE_CAP", "VISIT", "SEQ_VISIT", "GLOB_AVOID",
]
