"""Entailment checks over ITS models and the compositional inference.

``bounded_entailment`` decides whether every trace of a system that
satisfies an assumption also satisfies a goal (finite traces under the
weak truncated semantics, fair lassos under the standard semantics).
Two routes are available: the product search of :mod:`asyncltl.mc`,
which covers every trace, and literal enumeration up to the given
stem/loop bounds.  Counterexamples found by the product search are
replayed through the reference evaluator and the membership check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from . import mc
from .its import ComposedITS, ITS, ResourceError, StateSpace, enumerate_traces, is_trace_of, state_space
from .rewriting import RewriteMode, gamma_p, tail_vocab, tr_rewrite
from .semantics import holds
from .trace import Trace

VALID_UP_TO_BOUND = "valid-up-to-bound"
INVALID = "invalid"
PRODUCT = "product"
ENUMERATE = "enumerate"


class ReplayError(AssertionError):
    """A counterexample did not replay; indicates an internal bug."""


@dataclass(frozen=True)
class Verdict:
    status: str
    counterexample: Optional[Trace] = None
    method: str = PRODUCT
    exhaustive: bool = True
    stem_bound: int = 0
    loop_bound: int = 0
    elapsed_ms: int = 0

    @property
    def valid(self) -> bool:
        return self.status != INVALID

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "method": self.method,
            "exhaustive": self.exhaustive,
            "bounds": {"stem": self.stem_bound, "loop": self.loop_bound},
            "counterexample": self.counterexample.to_json() if self.counterexample is not None else None,
        }


def _space(system, cap) -> StateSpace:
    if isinstance(system, StateSpace):
        return system
    return state_space(system, cap)


def _fresh(name: str, vocab: A.Vocabulary) -> str:
    k = 0
    cand = name
    while cand in vocab:
        k += 1
        cand = f"{name}_{k}"
    return cand


def _replay(space: StateSpace, t: Trace, assumption, goal) -> None:
    member = is_trace_of(space, t)
    if not member:
        raise ReplayError(f"counterexample is not a trace of the system: {member.reason}")
    if not holds(t, assumption):
        raise ReplayError("counterexample violates the assumption")
    if holds(t, goal):
        raise ReplayError("counterexample satisfies the goal")


def lasso_counterexample(space: StateSpace, assumption, goal) -> Optional[Trace]:
    query = A.conj(assumption, A.Not(goal), mc.fairness_formula(space))
    found = mc.find_lasso(mc.SystemView(space), query, space.vocab, space.cap)
    if found is None:
        return None
    t = space.to_trace(found.stem, found.loop)
    _replay(space, t, assumption, goal)
    return t


def finite_counterexample(space: StateSpace, assumption, goal) -> Optional[Trace]:
    vocab = space.vocab
    tail = _fresh("Tail", vocab)
    view = mc.TailView(space, tail)
    query = A.conj(
        A.Eventually(A.var(tail)),
        tr_rewrite(assumption, A.WEAK, vocab, tail),
        A.Not(tr_rewrite(goal, A.WEAK, vocab, tail)),
    )
    found = mc.find_lasso(view, query, tail_vocab(vocab, tail), space.cap)
    if found is None:
        return None
    states = list(found.stem) + list(found.loop)
    j = next(k for k, s in enumerate(states) if s[-1])
    t = space.to_trace([s[:-1] for s in states[:j]], None, space.outputs_of(states[j][:-1]))
    _replay(space, t, assumption, goal)
    return t


def bounded_entailment(system, assumption: A.Formula, goal: A.Formula, stem: int = 8,
                       loop: int = 4, method: str = PRODUCT, cap: Optional[int] = None) -> Verdict:
    """Check that every trace of ``system`` satisfying ``assumption``
    satisfies ``goal``."""
    start = time.perf_counter()
    space = _space(system, cap)
    if method == PRODUCT:
        cex = lasso_counterexample(space, assumption, goal)
        if cex is None:
            cex = finite_counterexample(space, assumption, goal)
        exhaustive = True
    elif method == ENUMERATE:
        cex = None
        for t in enumerate_traces(space, stem, loop):
            if holds(t, assumption) and not holds(t, goal):
                cex = t
                break
        exhaustive = False
    else:
        raise ValueError(f"unknown method {method!r}")
    elapsed = int((time.perf_counter() - start) * 1000)
    return Verdict(INVALID if cex is not None else VALID_UP_TO_BOUND, cex, method,
                   exhaustive, stem, loop, elapsed)


# ---------------------------------------------------------------- inference


@dataclass(frozen=True)
class LocalResult:
    component: str
    verdict: Verdict


@dataclass(frozen=True)
class SystemReport:
    mode: str
    locals: tuple
    composition: Verdict
    warnings: tuple = ()

    @property
    def valid(self) -> bool:
        return all(r.verdict.valid for r in self.locals) and self.composition.valid

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "valid": self.valid,
            "locals": {r.component: r.verdict.to_json() for r in self.locals},
            "composition": self.composition.to_json(),
            "warnings": list(self.warnings),
        }


def composition_assumption(composed: ComposedITS, props: dict, schedule: A.Formula,
                           mode, infinite_local: bool = False, extra=()) -> tuple:
    """Assumption schedule & gamma_p(mode) for the composed check, plus the
    mode warnings.  ``props`` maps component names to local properties
    already expressed over the wired vocabulary."""
    pairs = [(props[m.name], composed.symbols_for(m.name)) for m in composed.components
             if m.name in props]
    gp = gamma_p(pairs, mode, infinite_local)
    assumption = A.conj(schedule, gp.formula, *gp.assumptions, *extra)
    return assumption, tuple(w.message for w in gp.warnings)


def verify_system(composed: ComposedITS, local_checks, wired_props: dict,
                  schedule: A.Formula, goal: A.Formula, mode=RewriteMode.OPTIMIZED,
                  stem: int = 8, loop: int = 4, method: str = PRODUCT,
                  cap: Optional[int] = None, extra_assumptions=(),
                  infinite_local: bool = False) -> SystemReport:
    """(a) each component satisfies its property (``local_checks`` lists
    ``(ITS, property)`` pairs over the unwired local vocabularies); (b) the
    composition under schedule & gamma_p(mode) satisfies the goal."""
    mode = RewriteMode(mode)
    local = [LocalResult(m.name, bounded_entailment(m, A.TRUE, prop, stem, loop, method, cap))
             for m, prop in local_checks]
    assumption, warnings = composition_assumption(composed, wired_props, schedule, mode,
                                                  infinite_local, extra_assumptions)
    verdict = bounded_entailment(composed, assumption, goal, stem, loop, method, cap)
    return SystemReport(mode.value, tuple(local), verdict, warnings)
