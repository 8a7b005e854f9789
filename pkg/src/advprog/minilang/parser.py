"""Recursive-descent parser and unparser for MiniLang.

Grammar::

    program := 'def' NAME '(' [NAME (',' NAME)*] ')' ':' stmts EOF
    stmts   := stmt (';' stmt)*
    stmt    := 'return' expr | 'print' '(' expr ')' | if | target '=' expr | expr
    if      := 'if' expr ':' body ['else' ':' body]
    body    := '{' stmts '}' | stmt
    target  := NAME | 'self' '.' FIELD
    expr    := arith (('==' | '!=' | '<' | '>') arith)*
    arith   := term (('+' | '-') term)*
    term    := atom (('*' | '//') atom)*
    atom    := INT | STRING | BOOL | NAME | BUILTIN '(' args ')'
             | 'self' '.' FIELD | '(' expr ')'
"""
from __future__ import annotations

from .lexer import BUILTINS, Token, TokenKind, join_tokens, tokenize
from .nodes import (
    Assign,
    BinOp,
    BoolLit,
    Call,
    Expr,
    ExprStmt,
    FieldAccess,
    Function,
    If,
    IntLit,
    Param,
    Print,
    Return,
    StrLit,
    Var,
)


class ParseError(ValueError):
    def __init__(self, index: int, expected, found: str | None = None):
        self.index = index
        self.expected = frozenset(expected)
        what = "end of input" if found is None else repr(found)
        super().__init__(
            f"parse error at token {index}: expected one of "
            f"{sorted(self.expected)}, found {what}"
        )


_CMP = ("==", "!=", "<", ">")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def fail(self, expected):
        tok = self.peek()
        raise ParseError(self.i, expected, None if tok is None else tok.text)

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text and tok.kind is not TokenKind.STRING

    def expect(self, text: str) -> int:
        if not self.at(text):
            self.fail({text})
        self.i += 1
        return self.i - 1

    def expect_kind(self, kind: TokenKind, label: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind is not kind:
            self.fail({label})
        self.i += 1
        return tok

    # -- program / statements -------------------------------------------

    def program(self) -> Function:
        self.expect("def")
        name = self.expect_kind(TokenKind.IDENTIFIER, "function name")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                tok = self.expect_kind(TokenKind.IDENTIFIER, "parameter name")
                params.append(Param(tok.text, self.i - 1))
                if not self.at(","):
                    break
                self.i += 1
        self.expect(")")
        self.expect(":")
        body = self.stmts()
        if self.peek() is not None:
            self.fail({";", "end of input"})
        return Function(name.text, params, body, name_tok=1)

    def stmts(self) -> list:
        out = [self.stmt()]
        while self.at(";"):
            self.i += 1
            out.append(self.stmt())
        return out

    def body(self) -> tuple[list, bool]:
        if self.at("{"):
            self.i += 1
            stmts = self.stmts()
            self.expect("}")
            return stmts, True
        return [self.stmt()], False

    def stmt(self):
        start = self.i
        tok = self.peek()
        if tok is None:
            self.fail({"statement"})
        if self.at("return"):
            self.i += 1
            return Return(self.expr(), start)
        if self.at("print"):
            self.i += 1
            self.expect("(")
            value = self.expr()
            self.expect(")")
            return Print(value, start)
        if self.at("if"):
            self.i += 1
            cond = self.expr()
            self.expect(":")
            then, then_braced = self.body()
            orelse, else_braced = None, True
            if self.at("else"):
                self.i += 1
                self.expect(":")
                orelse, else_braced = self.body()
            return If(cond, then, orelse, then_braced, else_braced, start)
        nxt = self.peek(1)
        if tok.kind is TokenKind.IDENTIFIER and nxt is not None and nxt.text == "=":
            self.i += 2
            return Assign(Var(tok.text, start), self.expr(), start)
        if (
            tok.text == "self"
            and len(self.toks) > self.i + 3
            and self.toks[self.i + 3].text == "="
        ):
            target = self.field_access()
            self.expect("=")
            return Assign(target, self.expr(), start)
        return ExprStmt(self.expr(), start)

    # -- expressions ----------------------------------------------------

    def _binary(self, sub, ops) -> Expr:
        left = sub()
        while True:
            tok = self.peek()
            if tok is None or tok.kind is not TokenKind.OPERATOR or tok.text not in ops:
                return left
            self.i += 1
            left = BinOp(tok.text, left, sub())

    def expr(self) -> Expr:
        return self._binary(self.arith, _CMP)

    def arith(self) -> Expr:
        return self._binary(self.term, ("+", "-"))

    def term(self) -> Expr:
        return self._binary(self.atom, ("*", "//"))

    def field_access(self) -> FieldAccess:
        self.expect("self")
        self.expect(".")
        tok = self.expect_kind(TokenKind.FIELD, "field name")
        return FieldAccess(tok.text, self.i - 1)

    def atom(self) -> Expr:
        tok = self.peek()
        expected = {"integer", "string", "boolean", "name", "self", "("}
        if tok is None:
            self.fail(expected)
        idx = self.i
        if tok.kind is TokenKind.INT:
            self.i += 1
            return IntLit(int(tok.text), idx)
        if tok.kind is TokenKind.STRING:
            self.i += 1
            return StrLit(tok.text[1:-1], idx)
        if tok.kind is TokenKind.BOOL:
            self.i += 1
            return BoolLit(tok.text == "True", idx)
        if tok.text == "self":
            return self.field_access()
        if tok.text == "(" and tok.kind is TokenKind.PUNCT:
            self.i += 1
            inner = self.expr()
            self.expect(")")
            inner.parens += 1
            return inner
        if tok.kind is TokenKind.IDENTIFIER:
            self.i += 1
            if self.at("("):
                if tok.text not in BUILTINS:
                    raise ParseError(idx, {"builtin function"}, tok.text)
                self.i += 1
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.i += 1
                        args.append(self.expr())
                self.expect(")")
                return Call(tok.text, args, idx)
            if tok.text in BUILTINS:
                raise ParseError(idx, {"("}, tok.text)
            return Var(tok.text, idx)
        self.fail(expected)


def _check_scope(fn: Function) -> None:
    """Every variable read must follow (textually) a parameter or assignment."""
    bound = {p.name for p in fn.params}

    def expr(e):
        if isinstance(e, Var):
            if e.name not in bound:
                raise ParseError(e.tok, {"bound name"}, e.name)
        elif isinstance(e, BinOp):
            expr(e.left)
            expr(e.right)
        elif isinstance(e, Call):
            for a in e.args:
                expr(a)

    def stmts(body):
        for s in body:
            if isinstance(s, Assign):
                expr(s.value)
                if isinstance(s.target, Var):
                    bound.add(s.target.name)
            elif isinstance(s, If):
                expr(s.cond)
                stmts(s.then)
                if s.orelse is not None:
                    stmts(s.orelse)
            else:
                expr(s.value)

    stmts(fn.body)


def parse(tokens: list[Token]) -> Function:
    p = _Parser(list(tokens))
    fn = p.program()
    _check_scope(fn)
    return fn


def parse_source(source: str) -> Function:
    return parse(tokenize(source))


# -- unparsing ------------------------------------------------------------


def _expr_texts(e: Expr, out: list[str]) -> None:
    out.extend("(" * e.parens)
    if isinstance(e, Var):
        out.append(e.name)
    elif isinstance(e, FieldAccess):
        out.extend(("self", ".", e.name))
    elif isinstance(e, IntLit):
        out.append(str(e.value))
    elif isinstance(e, StrLit):
        out.append(f'"{e.value}"')
    elif isinstance(e, BoolLit):
        out.append("True" if e.value else "False")
    elif isinstance(e, BinOp):
        _expr_texts(e.left, out)
        out.append(e.op)
        _expr_texts(e.right, out)
    elif isinstance(e, Call):
        out.extend((e.func, "("))
        for j, a in enumerate(e.args):
            if j:
                out.append(",")
            _expr_texts(a, out)
        out.append(")")
    else:  # pragma: no cover
        raise TypeError(e)
    out.extend(")" * e.parens)


def _body_texts(body, braced: bool, out: list[str]) -> None:
    if braced:
        out.append("{")
    _stmts_texts(body, out)
    if braced:
        out.append("}")


def _stmts_texts(body, out: list[str]) -> None:
    for j, s in enumerate(body):
        if j:
            out.append(";")
        if isinstance(s, Assign):
            _expr_texts(s.target, out)
            out.append("=")
            _expr_texts(s.value, out)
        elif isinstance(s, Return):
            out.append("return")
            _expr_texts(s.value, out)
        elif isinstance(s, Print):
            out.extend(("print", "("))
            _expr_texts(s.value, out)
            out.append(")")
        elif isinstance(s, ExprStmt):
            _expr_texts(s.value, out)
        elif isinstance(s, If):
            out.append("if")
            _expr_texts(s.cond, out)
            out.append(":")
            _body_texts(s.then, s.then_braced, out)
            if s.orelse is not None:
                out.extend(("else", ":"))
                _body_texts(s.orelse, s.else_braced, out)


def unparse_texts(fn: Function) -> list[str]:
    out = ["def", fn.name, "("]
    for j, p in enumerate(fn.params):
        if j:
            out.append(",")
        out.append(p.name)
    out.extend((")", ":"))
    _stmts_texts(fn.body, out)
    return out


def unparse(fn: Function) -> str:
    return join_tokens(unparse_texts(fn))
