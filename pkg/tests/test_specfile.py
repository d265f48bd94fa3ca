from importlib import resources

import pytest

from asyncltl import ast as A
from asyncltl.rewriting import RewriteMode
from asyncltl.specfile import SpecError, load_spec, parse_spec, parse_sort


def data(name):
    return str(resources.files("asyncltl") / "data" / name)


def test_load_two_component_sender():
    spec = load_spec(data("sender-2comp.spec"))
    assert spec.order == ("c1", "c2")
    assert spec.mode is RewriteMode.BASE
    c2 = spec.wired("c2")
    # c2's inputs are renamed to the c1 outputs that drive them
    assert set(c2.input_names) == {"send_1", "out_1"}
    comp = spec.composed()
    assert {cs.run for cs in comp.symbols} == {"run_c1", "run_c2"}
    assert spec.property is not None
    assert len(spec.local_checks()) == 2


def test_load_three_component_sender():
    spec = load_spec(data("sender-3comp.spec"))
    assert len(spec.order) == 3
    assert set(spec.wired_properties()) == set(spec.order)


def test_sorts():
    assert parse_sort("boolean") == A.BOOL
    assert parse_sort("0..3") == A.int_sort(0, 3)
    assert parse_sort("{idle, busy}").values() == ("idle", "busy")
    with pytest.raises(SpecError):
        parse_sort("float")


def test_continuation_lines_and_comments():
    spec = parse_spec("""
-- leading comment
component m
  output o : boolean   -- trailing comment
  init !o
  trans o' = o
    | !o
end
""")
    its = spec.components["m"].its
    assert its.output_names == ("o",)
    assert isinstance(its.trans, A.Or)


@pytest.mark.parametrize("text, line", [
    ("component m\n  output o : boolean\n  init o &\nend\n", 3),
    # an unknown word continues the previous clause
    ("component m\n  output o : boolean\n  bogus o\nend\n", 2),
    ("component m\n  output o : boolean\n", 1),
    ("widget m\n", 1),
    ("component m\n  output o boolean\nend\n", 2),
    ("component m\n  output o : boolean\n  init zz\nend\n", 3),
])
def test_errors_carry_lines(text, line):
    with pytest.raises(SpecError) as e:
        parse_spec(text)
    assert e.value.line == line


def test_formula_error_column_is_absolute():
    with pytest.raises(SpecError) as e:
        parse_spec("component m\n  output o : boolean\n  init o & )\nend\n")
    assert e.value.line == 3 and e.value.col > 8


def test_system_errors():
    comp = "component a\n  input x : boolean\n  output y : boolean\nend\n"
    with pytest.raises(SpecError):
        parse_spec(comp + "system\n  components a b\nend\n")
    with pytest.raises(SpecError):
        parse_spec(comp + "system\n  connect a.x -> a.y\nend\n")
    with pytest.raises(SpecError):
        parse_spec(comp + "system\n  mode turbo\nend\n")


def test_invalid_component_is_reported():
    with pytest.raises(SpecError) as e:
        parse_spec("component m\n  input x : boolean\n  output o : boolean\n  init x\nend\n")
    assert "init-over-inputs" in str(e.value)
