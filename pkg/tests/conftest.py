import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from asyncltl import ast as A
from asyncltl.trace import Trace

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance criterion number -> (passed, summary); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {text}")


IO = A.Vocabulary.of(["i"], ["o"])
I_VAR, O_VAR = A.var("i"), A.var("o")


@pytest.fixture
def io_vocab():
    return IO


def full_states(vocab=IO):
    names = vocab.names
    return st.fixed_dictionaries({n: st.booleans() for n in names})


def out_states(vocab=IO):
    return st.fixed_dictionaries({n: st.booleans() for n in vocab.outputs})


@st.composite
def finite_traces(draw, vocab=IO, max_len=4):
    n = draw(st.integers(1, max_len))
    states = [draw(full_states(vocab)) for _ in range(n - 1)]
    states.append(draw(out_states(vocab)))
    return Trace.finite(vocab, states)


@st.composite
def lassos(draw, vocab=IO, max_stem=2, max_loop=3):
    stem = draw(st.lists(full_states(vocab), max_size=max_stem))
    loop = draw(st.lists(full_states(vocab), min_size=1, max_size=max_loop))
    return Trace.lasso(vocab, stem, loop)


def formulas(max_leaves=6, past=True):
    """Core formulas over i (input) and o (output)."""
    leaves = st.sampled_from([A.TRUE, I_VAR, O_VAR])

    def extend(sub):
        unary = [A.Not, A.Next] + ([A.Yesterday] if past else [])
        binary = [A.Or, A.Until] + ([A.Since] if past else [])
        return st.one_of(
            st.builds(lambda op, a: op(a), st.sampled_from(unary), sub),
            st.builds(lambda op, a, b: op(a, b), st.sampled_from(binary), sub, sub),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def derived_formulas(max_leaves=5):
    """Formulas that also use the derived operators."""
    leaves = st.sampled_from([A.TRUE, A.FALSE, I_VAR, O_VAR])

    def extend(sub):
        unary = [A.Not, A.Next, A.Yesterday, A.WeakYesterday, A.Eventually, A.Always,
                 A.Once, A.Historically]
        binary = [A.Or, A.And, A.Implies, A.Iff, A.Until, A.Release, A.Since]
        return st.one_of(
            st.builds(lambda op, a: op(a), st.sampled_from(unary), sub),
            st.builds(lambda op, a, b: op(a, b), st.sampled_from(binary), sub, sub),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)
