"""LTL with truncated semantics for asynchronous compositions of
components that may run only finitely often."""

from .ast import Vocabulary, VarDecl
from .its import ITS, compose, enumerate_traces, is_trace_of
from .parser import parse_formula
from .rewriting import (RewriteMode, gamma_p, rewrite_base_top, rewrite_fair_top, rewrite_opt_top,
                        tr_rewrite, w2s)
from .semantics import holds
from .trace import Trace
from .verify import bounded_entailment, verify_system

__all__ = [
    "ITS", "RewriteMode", "Trace", "VarDecl", "Vocabulary", "bounded_entailment", "compose",
    "enumerate_traces", "gamma_p", "holds", "is_trace_of", "parse_formula", "rewrite_base_top",
    "rewrite_fair_top", "rewrite_opt_top", "tr_rewrite", "verify_system", "w2s",
]
