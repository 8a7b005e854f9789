import pytest

from advprog.minilang import LexError, TokenKind, model_tokens, tokenize
from advprog.minilang.lexer import join_tokens


def kinds(src):
    return [t.kind for t in tokenize(src)]


def test_simple_function_tokens():
    toks = tokenize("def f(a): return a + 1")
    assert [t.text for t in toks] == ["def", "f", "(", "a", ")", ":", "return", "a", "+", "1"]
    assert toks[0].kind is TokenKind.KEYWORD
    assert toks[1].kind is TokenKind.IDENTIFIER
    assert toks[-1].kind is TokenKind.INT


def test_offsets_are_byte_positions():
    toks = tokenize('def f(a):  print("hi")')
    s = 'def f(a):  print("hi")'
    for t in toks:
        start, length = t.span
        assert s.encode()[start:start + length].decode() == t.text


def test_two_char_operators_win():
    assert [t.text for t in tokenize("a == b // c != d")] == ["a", "==", "b", "//", "c", "!=", "d"]


def test_field_names_after_self_dot():
    toks = tokenize("self.count = 1")
    assert toks[2].text == "count" and toks[2].kind is TokenKind.FIELD


def test_bool_and_string_literals():
    toks = tokenize('x = True; y = "ab c"')
    assert toks[2].kind is TokenKind.BOOL
    assert toks[-1].kind is TokenKind.STRING and toks[-1].text == '"ab c"'


@pytest.mark.parametrize("bad", ["x = 3 $ 4", 'x = "unterminated', "x = @"])
def test_illegal_characters_raise_with_offset(bad):
    with pytest.raises(LexError) as info:
        tokenize(bad)
    assert info.value.offset >= 0


def test_empty_input_raises():
    with pytest.raises(LexError):
        tokenize("   ")


def test_leading_zero_is_not_a_single_int():
    assert [t.text for t in tokenize("x = 007")][2:] == ["0", "0", "7"]


def test_model_tokens_drop_punct_and_name():
    assert model_tokens(tokenize('def f(a): print("yo"); return a')) == ["def", "a", "print", "yo", "return", "a"]


def test_join_tokens_roundtrip():
    src = "def f ( a ) : return a"
    assert join_tokens([t.text for t in tokenize(src)]) == src
