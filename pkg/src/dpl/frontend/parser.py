"""Recursive-descent parser producing undecorated terms.

Sugar is expanded here: ``a - b`` becomes ``a + neg(b)``, ``a * b`` becomes
``mul(<a, b>)``, ``<a, b, c>`` is the left-associated ``<<a, b>, c>``,
``real^n`` is an iterated product, and ``let f(x: T): U = M in N``,
tuple-lets, ``grad`` and ``fd`` are elaborated to core terms.

Source positions of every constructed node are recorded in
:attr:`SourceFile.spans`, keyed by node identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dpl.derived import DuplicateBinder, elab_fd, elab_tuple_let, is_real_power
from dpl.frontend.lexer import ParseError, Token, tokenize
from dpl.primitives import REGISTRY
from dpl.syntax import (
    REAL,
    UNIT,
    UNIT_VAL,
    Add,
    BoolConst,
    Const,
    Fst,
    FunApp,
    If,
    Let,
    LetRec,
    Pair,
    PredApp,
    PrimApp,
    Prod,
    Rd,
    Snd,
    Term,
    Type,
    Var,
    VarSupply,
    free_vars,
    rename_fun,
)

__all__ = ["ParseError", "SourceFile", "parse", "parse_term", "parse_bool", "parse_type", "parse_file"]


@dataclass
class SourceFile:
    path: Optional[str]
    text: str
    parsed: object = None
    spans: dict[int, tuple[int, int]] = field(default_factory=dict)

    def span_of(self, node) -> Optional[tuple[int, int]]:
        return self.spans.get(id(node))


class _Parser:
    def __init__(self, text: str, supply: Optional[VarSupply] = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.spans: dict[int, tuple[int, int]] = {}
        self.supply = supply or VarSupply()
        self.supply.reserve(t.text for t in self.tokens if t.kind == "ident")
        self.functions: list[str] = []  # function names in scope, innermost last

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("kw", "sym")

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected an identifier, found {self.describe(self.tok)}")
        return self.advance()

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def mark(self, node, tok: Token):
        self.spans.setdefault(id(node), (tok.line, tok.col))
        return node

    def finish(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.describe(self.tok)}")

    # -- types

    def type_(self) -> Type:
        t = self.type_atom()
        while self.at("*"):
            self.advance()
            t = Prod(t, self.type_atom())
        return t

    def type_atom(self) -> Type:
        tok = self.tok
        if self.at("real"):
            self.advance()
            if self.at("^"):
                self.advance()
                n = self.tok
                if n.kind != "number" or not n.text.isdigit() or int(n.text) < 1:
                    self.error("expected a positive integer exponent")
                self.advance()
                t: Type = REAL
                for _ in range(int(n.text) - 1):
                    t = Prod(t, REAL)
                return t
            return REAL
        if self.at("unit"):
            self.advance()
            return UNIT
        if self.at("("):
            self.advance()
            t = self.type_()
            self.expect(")")
            return t
        self.error(f"expected a type, found {self.describe(tok)}")

    def binder(self) -> tuple[str, Type, Token]:
        name = self.ident()
        self.expect(":")
        return name.text, self.type_(), name

    # -- terms

    def term(self) -> Term:
        """Binding forms extend as far right as possible; their spine is parsed iteratively."""
        wrappers = []
        while True:
            tok = self.tok
            if self.at("let"):
                wrappers.append(self.let_header())
            elif self.at("letrec"):
                wrappers.append(self.letrec_header(tok))
            elif self.at("if"):
                self.advance()
                cond = self.bterm()
                self.expect("then")
                then = self.term()
                self.expect("else")
                wrappers.append(("if", tok, cond, then))
            else:
                break
        body = self.sum()
        for w in reversed(wrappers):
            body = self.close(w, body)
        return body

    def let_header(self):
        tok = self.advance()
        if self.at("<"):
            self.advance()
            bindings = [self.binder()]
            while self.at(","):
                self.advance()
                bindings.append(self.binder())
            self.expect(">")
            self.expect("=")
            bound = self.term()
            self.expect("in")
            return ("tuple", tok, [(x, t) for x, t, _ in bindings], bound)
        if self.tok.kind == "ident" and self.peek().text == "(" and self.peek().kind == "sym":
            return self.fun_header(tok, recursive=False)
        x, t, _ = self.binder()
        self.expect("=")
        bound = self.term()
        self.expect("in")
        return ("let", tok, x, t, bound)

    def letrec_header(self, tok: Token):
        self.advance()
        return self.fun_header(tok, recursive=True)

    def fun_header(self, tok: Token, recursive: bool):
        fname = self.ident().text
        self.expect("(")
        x, t, _ = self.binder()
        self.expect(")")
        self.expect(":")
        u = self.type_()
        self.expect("=")
        if recursive:
            self.functions.append(fname)
        body = self.term()
        if recursive:
            self.functions.pop()
        self.expect("in")
        self.functions.append(fname)
        return ("fun", tok, fname, x, t, u, body, recursive)

    def close(self, w, body: Term) -> Term:
        kind, tok = w[0], w[1]
        match kind:
            case "let":
                _, _, x, t, bound = w
                return self.mark(Let(x, t, bound, body), tok)
            case "tuple":
                _, _, bindings, bound = w
                try:
                    return self.mark(elab_tuple_let(bindings, bound, body, self.supply), tok)
                except DuplicateBinder as exc:
                    self.error(str(exc), tok)
            case "if":
                _, _, cond, then = w
                return self.mark(If(cond, then, body), tok)
            case "fun":
                _, _, fname, x, t, u, fbody, recursive = w
                self.functions.pop()
                if not recursive and fname in free_vars(fbody)[1]:
                    # the body refers to an outer function of the same name
                    fresh = self.supply.fresh()
                    return self.mark(LetRec(fresh, x, t, u, fbody, rename_fun(body, fname, fresh)), tok)
                return self.mark(LetRec(fname, x, t, u, fbody, body), tok)
        raise AssertionError(kind)

    def sum(self) -> Term:
        left = self.product()
        while self.at("+") or self.at("-"):
            tok = self.advance()
            right = self.product()
            if tok.text == "-":
                right = self.mark(PrimApp("neg", right), tok)
            left = self.mark(Add(left, right), tok)
        return left

    def product(self) -> Term:
        left = self.unary()
        while self.at("*"):
            tok = self.advance()
            right = self.unary()
            left = self.mark(PrimApp("mul", self.mark(Pair(left, right), tok)), tok)
        return left

    def unary(self) -> Term:
        tok = self.tok
        if self.at("-"):
            self.advance()
            if self.tok.kind == "number":
                return self.mark(Const(-float(self.advance().text)), tok)
            return self.mark(PrimApp("neg", self.unary()), tok)
        if self.at("fst") or self.at("snd"):
            self.advance()
            arg = self.unary()
            return self.mark((Fst if tok.text == "fst" else Snd)(arg), tok)
        if self.at("let") or self.at("letrec") or self.at("if"):
            return self.term()
        return self.atom()

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return self.mark(Const(float(tok.text)), tok)
        if self.at("()"):
            self.advance()
            return self.mark(UNIT_VAL, tok)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return self.mark(UNIT_VAL, tok)
            m = self.term()
            self.expect(")")
            return m
        if self.at("<"):
            self.advance()
            items = [self.term()]
            while self.at(","):
                self.advance()
                items.append(self.term())
            self.expect(">")
            if len(items) == 1:
                self.error("a tuple needs at least two components", tok)
            m = items[0]
            for item in items[1:]:
                m = self.mark(Pair(m, item), tok)
            return m
        if self.at("rd"):
            return self.rd(tok)
        if self.at("fd"):
            return self.fd(tok)
        if self.at("grad"):
            return self.grad(tok)
        if tok.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                arg = self.term()
                self.expect(")")
                if tok.text not in self.functions and REGISTRY.has_op(tok.text):
                    return self.mark(PrimApp(tok.text, arg), tok)
                return self.mark(FunApp(tok.text, arg), tok)
            return self.mark(Var(tok.text), tok)
        self.error(f"expected a term, found {self.describe(tok)}")

    def lambda_(self) -> tuple[str, Type, Term]:
        self.expect("(")
        x, t, _ = self.binder()
        self.expect(".")
        body = self.term()
        self.expect(")")
        return x, t, body

    def paren_term(self) -> Term:
        self.expect("(")
        m = self.term()
        self.expect(")")
        return m

    def rd(self, tok: Token) -> Term:
        self.advance()
        x, t, body = self.lambda_()
        at = self.paren_term()
        cot = self.paren_term()
        return self.mark(Rd(x, t, body, at, cot), tok)

    def fd(self, tok: Token) -> Term:
        self.advance()
        x, t, body = self.lambda_()
        self.expect("(")
        u = self.type_()
        self.expect(",")
        at = self.term()
        self.expect(")")
        tangent = self.paren_term()
        m = elab_fd(x, t, body, u, at, tangent, self.supply)
        self.mark(m.body, tok)
        return self.mark(m, tok)

    def grad(self, tok: Token) -> Term:
        self.advance()
        x, t, body = self.lambda_()
        if is_real_power(t) is None:
            self.error("grad needs a binder of type real^n", tok)
        at = self.paren_term()
        return self.mark(Rd(x, t, body, at, self.mark(Const(1.0), tok)), tok)

    # -- boolean terms

    def bterm(self):
        tok = self.tok
        if self.at("true") or self.at("false"):
            self.advance()
            return self.mark(BoolConst(tok.text == "true"), tok)
        if (
            tok.kind == "ident"
            and REGISTRY.has_pred(tok.text)
            and tok.text not in self.functions
            and self.peek().text == "("
        ):
            self.advance()
            arg = self.paren_term()
            return self.mark(PredApp(tok.text, arg), tok)
        left = self.sum()
        op = self.tok
        if not (self.at("<.") or self.at(">.")):
            self.error(f"expected '<.' or '>.', found {self.describe(op)}")
        self.advance()
        right = self.sum()
        pred = REGISTRY.pred_by_symbol(op.text)
        return self.mark(PredApp(pred.name, self.mark(Pair(left, right), op)), op)


def parse(text: str, supply: Optional[VarSupply] = None) -> SourceFile:
    """Parse a complete program (a term)."""
    p = _Parser(text, supply)
    m = p.term()
    p.finish()
    return SourceFile(None, text, m, p.spans)


def parse_term(text: str, supply: Optional[VarSupply] = None) -> Term:
    return parse(text, supply).parsed


def parse_bool(text: str, supply: Optional[VarSupply] = None):
    p = _Parser(text, supply)
    b = p.bterm()
    p.finish()
    return b


def parse_type(text: str) -> Type:
    p = _Parser(text)
    t = p.type_()
    p.finish()
    return t


def parse_file(path: str | Path) -> SourceFile:
    text = Path(path).read_text(encoding="utf-8")
    src = parse(text)
    src.path = str(path)
    return src
