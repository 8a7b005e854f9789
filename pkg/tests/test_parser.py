import pytest
from hypothesis import given, settings, strategies as st

from advprog.minilang import CorpusConfig, ParseError, generate_corpus, parse_source, tokenize, unparse
from advprog.minilang.nodes import If


def test_parse_basic_structure():
    fn = parse_source("def f(a, b): c = a + b; if c > 0: return c else: return 0")
    assert fn.name == "f"
    assert [p.name for p in fn.params] == ["a", "b"]
    assert len(fn.body) == 2 and isinstance(fn.body[1], If)


def test_braced_if_body():
    fn = parse_source("def f(a): if a > 0: { b = 1; return b } else: { return 2 }")
    assert isinstance(fn.body[0], If) and len(fn.body[0].then) == 2


@pytest.mark.parametrize("src", [
    "def f(a): return b",               # unbound read
    "def f(a): return foo(a)",          # non-builtin call
    "def f(a): x = abs; return x",      # bare builtin
    "def f(a) return a",                # missing colon
    "def (a): return a",                # missing name
    "def f(a): return a +",             # dangling operator
])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        parse_source(src)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse_source("def f(a): return a +")
    assert info.value.index >= 0


def test_roundtrip_corpus():
    for e in generate_corpus(CorpusConfig(count=1000, seed=11)):
        fn = parse_source(e.source)
        text = unparse(fn)
        assert unparse(parse_source(text)) == text
        assert [t.text for t in tokenize(text)] == [t.text for t in tokenize(e.source)]


def test_parens_preserved():
    src = "def f(a): return ((a + 1)) * 2"
    assert [t.text for t in tokenize(unparse(parse_source(src)))] == [t.text for t in tokenize(src)]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "1", "2"]), min_size=1, max_size=6),
       st.lists(st.sampled_from(["+", "-", "*"]), min_size=5, max_size=5))
def test_expression_roundtrip_property(atoms, ops):
    expr = atoms[0]
    for atom, op in zip(atoms[1:], ops):
        expr = f"{expr} {op} {atom}"
    src = f"def f(a, b): return {expr}"
    text = unparse(parse_source(src))
    assert unparse(parse_source(text)) == text
