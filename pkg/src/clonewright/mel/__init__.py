"""The Mel mini-language: lexer, parser, AST, binding analysis, printer."""

from clonewright.mel.tokens import Span, Token, tokenize
from clonewright.mel.syntax import Clause, Expr, FunDef, ModuleAst, node_count
from clonewright.mel.parser import parse, parse_module
from clonewright.mel.bindings import BindingInfo, annotate_bindings
from clonewright.mel.printer import print_expr, print_fundef, print_module

__all__ = [
    "Span",
    "Token",
    "tokenize",
    "Expr",
    "Clause",
    "FunDef",
    "ModuleAst",
    "node_count",
    "parse",
    "parse_module",
    "BindingInfo",
    "annotate_bindings",
    "print_expr",
    "print_fundef",
    "print_module",
]
