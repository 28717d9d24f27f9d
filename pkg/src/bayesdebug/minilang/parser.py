"""Recursive-descent parser for the mini-language.

Grammar (informal)::

    unit     := (fn NAME '(' params ')' block | let NAME '=' expr ';')*
    stmt     := let NAME '=' expr ';' | NAME '=' expr ';'
              | if '(' expr ')' block [else (if ... | block)]
              | while '(' expr ')' block | return [expr] ';' | expr ';'
    expr     := or;  or := and ('||' and)*;  and := eq ('&&' eq)*
    eq       := cmp (('=='|'!=') cmp)*;  cmp := add (('<'|'<='|'>'|'>=') add)*
    add      := mul (('+'|'-') mul)*;  mul := unary (('*'|'/'|'%') unary)*
    unary    := ('!'|'-') unary | postfix;  postfix := primary ('[' expr ']')*
    primary  := INT | FLOAT | STRING | true | false | null | '[' exprs ']'
              | NAME | NAME '(' exprs ')' | '(' expr ')'
"""

from __future__ import annotations

from typing import Mapping

from . import ast as A
from .lexer import MiniSyntaxError, Token, tokenize


class Parser:
    def __init__(self, source: str, file: str = "main.mini", start_id: int = 0):
        self.file = file
        self.tokens = tokenize(source, file)
        self.pos = 0
        self.next_id = start_id

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise MiniSyntaxError(message, self.file, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def mk(self, cls, tok: Token, *args, **kw):
        node = cls(*args, **kw, loc=A.SourceLocation(self.file, tok.line, tok.col), nid=self.next_id)
        self.next_id += 1
        return node

    # declarations
    def parse_unit(self) -> A.Unit:
        first = self.tok
        decls = []
        while self.tok.kind != "eof":
            if self.at("fn"):
                decls.append(self.parse_function())
            elif self.at("let"):
                tok = self.advance()
                name = self.expect_name().text
                self.expect("=")
                value = self.parse_expr()
                self.expect(";")
                decls.append(self.mk(A.Global, tok, name, value))
            elif self.at("}"):
                self.error("unmatched '}'")
            else:
                self.error(f"expected 'fn' or 'let' at top level, found {self.tok.text!r}")
        return self.mk(A.Unit, first, self.file, decls)

    def parse_function(self) -> A.FuncDef:
        tok = self.expect("fn")
        name = self.expect_name().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                p = self.expect_name()
                if p.text in params:
                    self.error(f"duplicate parameter {p.text!r}", p)
                params.append(p.text)
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        body = self.parse_block()
        return self.mk(A.FuncDef, tok, name, params, body)

    def parse_block(self) -> A.Block:
        open_tok = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unclosed '{'", open_tok)
            stmts.append(self.parse_stmt())
        self.advance()
        return self.mk(A.Block, open_tok, stmts)

    # statements
    def parse_stmt(self) -> A.Stmt:
        tok = self.tok
        if self.at("let"):
            self.advance()
            name = self.expect_name().text
            self.expect("=")
            value = self.parse_expr()
            self.expect(";")
            return self.mk(A.Let, tok, name, value)
        if self.at("if"):
            return self.parse_if()
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return self.mk(A.While, tok, cond, body)
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return self.mk(A.Return, tok, value)
        if self.at("{"):
            self.error("bare blocks are not allowed")
        if tok.kind == "name" and self.peek().kind == "op" and self.peek().text == "=":
            self.advance()
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            return self.mk(A.Assign, tok, tok.text, value)
        expr = self.parse_expr()
        self.expect(";")
        return self.mk(A.ExprStmt, tok, expr)

    def parse_if(self) -> A.If:
        tok = self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_block()
        orelse = None
        if self.at("else"):
            self.advance()
            orelse = self.parse_if() if self.at("if") else self.parse_block()
        return self.mk(A.If, tok, cond, then, orelse)

    # expressions
    def parse_expr(self) -> A.Expr:
        return self.parse_logical("||", self.parse_and)

    def parse_and(self) -> A.Expr:
        return self.parse_logical("&&", self.parse_eq)

    def parse_logical(self, op: str, sub) -> A.Expr:
        left = sub()
        while self.at(op):
            self.advance()
            right = sub()
            left = self.mk(A.Logical, self._tok_of(left), op, left, right)
        return left

    def _tok_of(self, node: A.Node) -> Token:
        return Token("", "", node.loc.line, node.loc.col)

    def parse_binary(self, ops, sub) -> A.Expr:
        left = sub()
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance().text
            right = sub()
            left = self.mk(A.Binary, self._tok_of(left), op, left, right)
        return left

    def parse_eq(self) -> A.Expr:
        return self.parse_binary(("==", "!="), self.parse_cmp)

    def parse_cmp(self) -> A.Expr:
        return self.parse_binary(("<", "<=", ">", ">="), self.parse_add)

    def parse_add(self) -> A.Expr:
        return self.parse_binary(("+", "-"), self.parse_mul)

    def parse_mul(self) -> A.Expr:
        return self.parse_binary(("*", "/", "%"), self.parse_unary)

    def parse_unary(self) -> A.Expr:
        if self.tok.kind == "op" and self.tok.text in ("!", "-"):
            tok = self.advance()
            return self.mk(A.Unary, tok, tok.text, self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        expr = self.parse_primary()
        while self.at("["):
            self.advance()
            index = self.parse_expr()
            self.expect("]")
            expr = self.mk(A.Index, self._tok_of(expr), expr, index)
        return expr

    def parse_args(self, close: str) -> list:
        items = []
        if not self.at(close):
            while True:
                items.append(self.parse_expr())
                if not self.at(","):
                    break
                self.advance()
        self.expect(close)
        return items

    def parse_primary(self) -> A.Expr:
        tok = self.tok
        if tok.kind == "int":
            self.advance()
            value = int(tok.text)
            if value > 2**63:
                self.error("integer literal out of range", tok)
            return self.mk(A.IntLit, tok, value)
        if tok.kind == "float":
            self.advance()
            return self.mk(A.FloatLit, tok, float(tok.text))
        if tok.kind == "string":
            self.advance()
            return self.mk(A.StrLit, tok, tok.text)
        if tok.kind == "keyword" and tok.text in ("true", "false"):
            self.advance()
            return self.mk(A.BoolLit, tok, tok.text == "true")
        if tok.kind == "keyword" and tok.text == "null":
            self.advance()
            return self.mk(A.NullLit, tok)
        if self.at("["):
            self.advance()
            return self.mk(A.ListLit, tok, self.parse_args("]"))
        if self.at("("):
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if tok.kind == "name":
            self.advance()
            if self.at("("):
                self.advance()
                return self.mk(A.Call, tok, tok.text, self.parse_args(")"))
            return self.mk(A.Name, tok, tok.text)
        self.error(f"unexpected {tok.text or 'end of input'!r}")

    def finish(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected trailing {self.tok.text!r}")


def parse_program(files: Mapping[str, str]) -> A.Program:
    """Parse named source units into one program (functions share a namespace)."""
    units, next_id = [], 0
    for name in files:
        p = Parser(files[name], name, start_id=next_id)
        units.append(p.parse_unit())
        next_id = p.next_id
    return A.Program(units, dict(files))


def parse(source: str, file: str = "main.mini") -> A.Program:
    return parse_program({file: source})


def parse_expr(text: str, file: str = "<expr>", start_id: int = 0, line: int = 1) -> A.Expr:
    p = Parser(text, file, start_id)
    for t in p.tokens:
        object.__setattr__(t, "line", line)
    expr = p.parse_expr()
    p.finish()
    return expr


def parse_stmt(text: str, file: str = "<stmt>", start_id: int = 0, line: int = 1) -> A.Stmt:
    p = Parser(text, file, start_id)
    for t in p.tokens:
        object.__setattr__(t, "line", line)
    stmt = p.parse_stmt()
    p.finish()
    return stmt
