"""AST node types for MiniLang.

Nodes keep the index of the token they came from (``tok``) so that site
extraction can map names back onto the token stream, and expression nodes
remember how many redundant parentheses surrounded them so that ``unparse``
reproduces the original token sequence exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass
class Var:
    name: str
    tok: int
    parens: int = 0


@dataclass
class FieldAccess:
    name: str
    tok: int  # index of the field-name token
    parens: int = 0


@dataclass
class IntLit:
    value: int
    tok: int
    parens: int = 0


@dataclass
class StrLit:
    value: str
    tok: int
    parens: int = 0


@dataclass
class BoolLit:
    value: bool
    tok: int
    parens: int = 0


@dataclass
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    parens: int = 0


@dataclass
class Call:
    func: str
    args: list["Expr"]
    tok: int
    parens: int = 0


Expr = Union[Var, FieldAccess, IntLit, StrLit, BoolLit, BinOp, Call]


@dataclass
class Assign:
    target: Union[Var, FieldAccess]
    value: Expr
    first_tok: int = -1


@dataclass
class Return:
    value: Expr
    first_tok: int = -1


@dataclass
class Print:
    value: Expr
    first_tok: int = -1


@dataclass
class ExprStmt:
    value: Expr
    first_tok: int = -1


@dataclass
class If:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"] | None = None
    then_braced: bool = True
    else_braced: bool = True
    first_tok: int = -1


Stmt = Union[Assign, Return, Print, ExprStmt, If]


@dataclass
class Param:
    name: str
    tok: int


@dataclass
class Function:
    name: str
    params: list[Param]
    body: list[Stmt] = field(default_factory=list)
    name_tok: int = 1
