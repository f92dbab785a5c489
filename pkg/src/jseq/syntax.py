"""Terms, formulas and labeled sequents of the justification language.

Concrete grammar (precedence from tightest to loosest):

    term     ::= sum
    sum      ::= app ( '+' app )*              left-assoc
    app      ::= prefix ( '*' prefix )*        left-assoc, '*' is application
    prefix   ::= ('!' | '?' | '??') prefix | IDENT | '(' term ')'

    formula  ::= disj ( '->' formula )?        right-assoc
    disj     ::= conj ( '|' conj )*
    conj     ::= unary ( '&' unary )*
    unary    ::= '~' unary | '[]' unary | term ':' unary
               | 'false' | PROP | '(' formula ')'

    item     ::= LABEL '|=' formula | LABEL 'R' LABEL | LABEL 'E' '(' term ',' formula ')'
    sequent  ::= [item (',' item)*] '=>' [item (',' item)*]

Identifiers starting with a-e are justification constants, any other
lowercase identifier in term position is a justification variable and
identifiers starting with an uppercase letter are propositional variables.
Labels are lowercase identifiers starting with a-w.
"""

from __future__ import annotations

import re
import weakref
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Union


def _node(cls):
    """Frozen dataclass whose instances are interned.

    Structurally equal nodes are the same object, so equality and hashing are by identity
    and run at C speed. Children are interned first, which keeps the interning key cheap.
    """
    names = tuple(cls.__annotations__)
    ns = {k: v for k, v in cls.__dict__.items() if k not in ("__dict__", "__weakref__")}
    ns["__slots__"] = names + ("_k", "__weakref__")
    new = dataclass(frozen=True, eq=False)(type(cls)(cls.__name__, cls.__bases__, ns))
    init = new.__init__
    table: weakref.WeakValueDictionary = weakref.WeakValueDictionary()

    def __new__(c, *args, **kw):
        if kw:
            try:
                args = args + tuple(kw.pop(n) for n in names[len(args):])
            except KeyError as exc:
                raise TypeError(f"{cls.__name__} missing field {exc}") from None
            if kw:
                raise TypeError(f"{cls.__name__} got unexpected fields {sorted(kw)}")
        if len(args) != len(names):
            raise TypeError(f"{cls.__name__} takes {len(names)} fields, got {len(args)}")
        obj = table.get(args)
        if obj is None:
            obj = object.__new__(c)
            init(obj, *args)
            object.__setattr__(obj, "_k", None)
            table[args] = obj
        return obj

    def __reduce__(self):
        return (type(self), tuple(getattr(self, n) for n in names))

    new.__new__ = __new__
    new.__init__ = lambda self, *a, **kw: None
    new.__reduce__ = __reduce__
    new.__copy__ = lambda self: self
    new.__deepcopy__ = lambda self, memo: self
    return new


class SyntaxErrorAt(ValueError):
    """Raised on malformed input; ``pos`` is the character offset."""

    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos} in {text!r}")


# --------------------------------------------------------------------------
# terms

class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return format_term(self)


@_node
class Var(Term):
    name: str


@_node
class Const(Term):
    name: str


@_node
class Sum(Term):
    left: Term
    right: Term


@_node
class App(Term):
    left: Term
    right: Term


@_node
class Bang(Term):
    inner: Term


@_node
class Query(Term):
    inner: Term


@_node
class BarQuery(Term):
    inner: Term


# --------------------------------------------------------------------------
# formulas

class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@_node
class Prop(Formula):
    name: str


@_node
class Bottom(Formula):
    pass


@_node
class Neg(Formula):
    sub: Formula


@_node
class And(Formula):
    left: Formula
    right: Formula


@_node
class Or(Formula):
    left: Formula
    right: Formula


@_node
class Imp(Formula):
    left: Formula
    right: Formula


@_node
class Just(Formula):
    term: Term
    body: Formula


@_node
class Box(Formula):
    body: Formula


BOTTOM = Bottom()

POSITIVE = "positive"
NEGATIVE = "negative"


# --------------------------------------------------------------------------
# sequent items

@_node
class Labeled:
    """``w |= A``"""

    label: str
    formula: Formula

    def __str__(self) -> str:
        return f"{self.label} |= {format_formula(self.formula)}"


@_node
class Rel:
    """``w R v``"""

    src: str
    dst: str

    def __str__(self) -> str:
        return f"{self.src} R {self.dst}"


@_node
class Ev:
    """``w E(t, A)``"""

    label: str
    term: Term
    formula: Formula

    def __str__(self) -> str:
        return f"{self.label} E({format_term(self.term)}, {format_formula(self.formula)})"


Item = Union[Labeled, Rel, Ev]

_KIND_ORDER = {Labeled: 0, Rel: 1, Ev: 2}


def item_key(item: Item) -> tuple[int, str]:
    """Canonical ordering: labeled < relational < evidence, then text."""
    k = item._k
    if k is None:
        k = (_KIND_ORDER[type(item)], str(item))
        object.__setattr__(item, "_k", k)
    return k


def item_labels(item: Item) -> tuple[str, ...]:
    if type(item) is Rel:
        return (item.src, item.dst)
    return (item.label,)


@dataclass(frozen=True, slots=True)
class Sequent:
    """Pair of multisets, stored as canonically sorted tuples."""

    antecedent: tuple
    succedent: tuple

    @staticmethod
    def of(antecedent: Iterable[Item] = (), succedent: Iterable[Item] = ()) -> "Sequent":
        return Sequent(tuple(sorted(antecedent, key=item_key)), tuple(sorted(succedent, key=item_key)))

    def labels(self) -> set[str]:
        out: set[str] = set()
        for it in self.antecedent + self.succedent:
            out.update(item_labels(it))
        return out

    def __str__(self) -> str:
        return format_sequent(self)


# --------------------------------------------------------------------------
# printing

def format_term(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, Sum):
        right = format_term(t.right)
        if isinstance(t.right, Sum):
            right = f"({right})"
        return f"{format_term(t.left)}+{right}"
    if isinstance(t, App):
        left = format_term(t.left)
        if isinstance(t.left, Sum):
            left = f"({left})"
        right = format_term(t.right)
        if isinstance(t.right, (Sum, App)):
            right = f"({right})"
        return f"{left}*{right}"
    op = {Bang: "!", Query: "?", BarQuery: "??"}[type(t)]
    inner = format_term(t.inner)
    # '?' followed by '?' would be read as '??'
    if isinstance(t.inner, (Sum, App)) or (type(t) is Query and isinstance(t.inner, (Query, BarQuery))):
        inner = f"({inner})"
    return op + inner


_PREC = {Imp: 1, Or: 2, And: 3}


def _prec(a: Formula) -> int:
    return _PREC.get(type(a), 4)


def format_formula(a: Formula) -> str:
    if isinstance(a, Prop):
        return a.name
    if isinstance(a, Bottom):
        return "false"
    if isinstance(a, (Neg, Box, Just)):
        body = a.sub if isinstance(a, Neg) else a.body
        inner = format_formula(body)
        if _prec(body) < 4:
            inner = f"({inner})"
        if isinstance(a, Neg):
            return "~" + inner
        if isinstance(a, Box):
            return "[]" + inner
        term = format_term(a.term)
        if isinstance(a.term, (Sum, App)):
            term = f"({term})"
        return f"{term}:{inner}"
    p = _prec(a)
    left = format_formula(a.left)
    right = format_formula(a.right)
    if isinstance(a, Imp):
        if _prec(a.left) <= p:
            left = f"({left})"
        if _prec(a.right) < p:
            right = f"({right})"
        return f"{left} -> {right}"
    if _prec(a.left) < p:
        left = f"({left})"
    if _prec(a.right) <= p:
        right = f"({right})"
    sym = "&" if isinstance(a, And) else "|"
    return f"{left} {sym} {right}"


def format_item(item: Item) -> str:
    return str(item)


def format_sequent(s: Sequent) -> str:
    left = ", ".join(str(i) for i in s.antecedent)
    right = ", ".join(str(i) for i in s.succedent)
    return f"{left} => {right}".strip()


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<sym>=>|\|=|->|\?\?|\[\]|[?!+*:~&|(),])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*))"
)

_LABEL_RE = re.compile(r"[a-w][A-Za-z0-9_]*\Z")


class _Tok(NamedTuple):
    kind: str  # 'sym', 'ident' or 'end'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise SyntaxErrorAt(f"unexpected character {text[pos]!r}", text, pos)
        kind = "sym" if m.group("sym") else "ident"
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


def is_constant_name(name: str) -> bool:
    return "a" <= name[0] <= "e"


def _is_term_ident(name: str) -> bool:
    return name[0].islower() and name != "false"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # helpers
    def peek(self) -> _Tok:
        return self.toks[self.i]

    def at(self, sym: str) -> bool:
        t = self.toks[self.i]
        return t.kind == "sym" and t.text == sym

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, sym: str) -> _Tok:
        if not self.at(sym):
            t = self.peek()
            raise SyntaxErrorAt(f"expected {sym!r}, found {t.text or 'end of input'!r}", self.text, t.pos)
        return self.advance()

    def error(self, message: str) -> SyntaxErrorAt:
        return SyntaxErrorAt(message, self.text, self.peek().pos)

    def finish(self) -> None:
        if self.peek().kind != "end":
            raise self.error(f"unexpected {self.peek().text!r}")

    # terms
    def term(self) -> Term:
        left = self.app()
        while self.at("+"):
            self.advance()
            left = Sum(left, self.app())
        return left

    def app(self) -> Term:
        left = self.prefix()
        while self.at("*"):
            self.advance()
            left = App(left, self.prefix())
        return left

    def prefix(self) -> Term:
        t = self.peek()
        if t.kind == "sym" and t.text in ("!", "?", "??"):
            self.advance()
            inner = self.prefix()
            return {"!": Bang, "?": Query, "??": BarQuery}[t.text](inner)
        if t.kind == "sym" and t.text == "(":
            self.advance()
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            if not _is_term_ident(t.text):
                raise SyntaxErrorAt(f"identifier {t.text!r} cannot name a term", self.text, t.pos)
            self.advance()
            return Const(t.text) if is_constant_name(t.text) else Var(t.text)
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")

    # formulas
    def formula(self) -> Formula:
        left = self.disj()
        if self.at("->"):
            self.advance()
            return Imp(left, self.formula())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at("|"):
            self.advance()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.at("&"):
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "sym" and t.text == "~":
            self.advance()
            return Neg(self.unary())
        if t.kind == "sym" and t.text == "[]":
            self.advance()
            return Box(self.unary())
        if t.kind == "ident" and t.text == "false":
            self.advance()
            return BOTTOM
        if t.kind == "ident" and t.text[0].isupper():
            self.advance()
            return Prop(t.text)
        if t.kind == "ident" and not _is_term_ident(t.text):
            raise SyntaxErrorAt(f"unknown identifier class {t.text!r}", self.text, t.pos)
        # a justification assertion, or a parenthesised formula
        if t.kind == "ident" or (t.kind == "sym" and t.text in ("!", "?", "??", "(")):
            save = self.i
            try:
                term = self.term()
                if self.at(":"):
                    self.advance()
                    return Just(term, self.unary())
            except SyntaxErrorAt:
                if not self.at_paren(save):
                    raise
            if not self.at_paren(save):
                raise self.error("expected ':' after term")
            self.i = save
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        raise self.error(f"expected a formula, found {t.text or 'end of input'!r}")

    def at_paren(self, idx: int) -> bool:
        t = self.toks[idx]
        return t.kind == "sym" and t.text == "("

    # sequents
    def label(self) -> str:
        t = self.peek()
        if t.kind != "ident" or not _LABEL_RE.match(t.text):
            raise self.error(f"expected a label, found {t.text or 'end of input'!r}")
        self.advance()
        return t.text

    def item(self) -> Item:
        w = self.label()
        t = self.peek()
        if t.kind == "sym" and t.text == "|=":
            self.advance()
            return Labeled(w, self.formula())
        if t.kind == "ident" and t.text == "R":
            self.advance()
            return Rel(w, self.label())
        if t.kind == "ident" and t.text == "E":
            self.advance()
            self.expect("(")
            term = self.term()
            self.expect(",")
            body = self.formula()
            self.expect(")")
            return Ev(w, term, body)
        raise SyntaxErrorAt("malformed atom: expected '|=', 'R' or 'E' after label", self.text, t.pos)

    def items(self, stop: str) -> list[Item]:
        out: list[Item] = []
        if self.at(stop) or self.peek().kind == "end":
            return out
        out.append(self.item())
        while self.at(","):
            self.advance()
            out.append(self.item())
        return out

    def sequent(self) -> Sequent:
        ante = self.items("=>")
        self.expect("=>")
        succ = self.items("")
        self.finish()
        return Sequent.of(ante, succ)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.finish()
    return t


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    a = p.formula()
    p.finish()
    return a


def parse_item(text: str) -> Item:
    p = _Parser(text)
    it = p.item()
    p.finish()
    return it


def parse_sequent(text: str) -> Sequent:
    return _Parser(text).sequent()


def parse_goal(text: str, label: str = "w") -> Sequent:
    """A sequent, or a bare formula ``A`` read as ``=> label |= A``."""
    if "=>" in text:
        return parse_sequent(text)
    return Sequent.of((), (Labeled(label, parse_formula(text)),))


# --------------------------------------------------------------------------
# structural measures

def subterms(t: Term) -> set[Term]:
    out: set[Term] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if u in out:
            continue
        out.add(u)
        if isinstance(u, (Sum, App)):
            stack.append(u.left)
            stack.append(u.right)
        elif isinstance(u, (Bang, Query, BarQuery)):
            stack.append(u.inner)
    return out


def jl_subformulas(a: Formula) -> set[Formula]:
    out: set[Formula] = set()
    stack = [a]
    while stack:
        b = stack.pop()
        if b in out:
            continue
        out.add(b)
        if isinstance(b, Neg):
            stack.append(b.sub)
        elif isinstance(b, (And, Or, Imp)):
            stack.append(b.left)
            stack.append(b.right)
        elif isinstance(b, (Just, Box)):
            stack.append(b.body)
    return out


def formula_terms(a: Formula) -> set[Term]:
    """Terms occurring as justifications anywhere in ``a``."""
    return {b.term for b in jl_subformulas(a) if isinstance(b, Just)}


def formula_subterms(a: Formula) -> set[Term]:
    out: set[Term] = set()
    for t in formula_terms(a):
        out |= subterms(t)
    return out


def rank(t: Term) -> int:
    if isinstance(t, (Var, Const)):
        return 0
    if isinstance(t, (Sum, App)):
        return max(rank(t.left), rank(t.right)) + 1
    return rank(t.inner) + 1


def is_ground(t: Term) -> bool:
    return not any(isinstance(u, Var) for u in subterms(t))


def forgetful_projection(a: Formula) -> Formula:
    if isinstance(a, (Prop, Bottom)):
        return a
    if isinstance(a, Neg):
        return Neg(forgetful_projection(a.sub))
    if isinstance(a, (And, Or, Imp)):
        return type(a)(forgetful_projection(a.left), forgetful_projection(a.right))
    return Box(forgetful_projection(a.body))


def substitute_in_term(t: Term, x: str, s: Term) -> Term:
    if isinstance(t, Var):
        return s if t.name == x else t
    if isinstance(t, Const):
        return t
    if isinstance(t, (Sum, App)):
        return type(t)(substitute_in_term(t.left, x, s), substitute_in_term(t.right, x, s))
    return type(t)(substitute_in_term(t.inner, x, s))


def substitute_term(a: Formula, x: str, s: Term) -> Formula:
    """Replace every occurrence of the variable ``x`` by ``s``."""
    if isinstance(a, (Prop, Bottom)):
        return a
    if isinstance(a, Neg):
        return Neg(substitute_term(a.sub, x, s))
    if isinstance(a, (And, Or, Imp)):
        return type(a)(substitute_term(a.left, x, s), substitute_term(a.right, x, s))
    if isinstance(a, Box):
        return Box(substitute_term(a.body, x, s))
    return Just(substitute_in_term(a.term, x, s), substitute_term(a.body, x, s))


def signed_subformulas(a: Formula, polarity: str = POSITIVE) -> Iterator[tuple[Formula, str]]:
    """Yield every subformula occurrence with its polarity."""
    stack = [(a, polarity)]
    while stack:
        b, pol = stack.pop()
        yield b, pol
        if isinstance(b, Neg):
            stack.append((b.sub, NEGATIVE if pol == POSITIVE else POSITIVE))
        elif isinstance(b, Imp):
            stack.append((b.left, NEGATIVE if pol == POSITIVE else POSITIVE))
            stack.append((b.right, pol))
        elif isinstance(b, (And, Or)):
            stack.append((b.left, pol))
            stack.append((b.right, pol))
        elif isinstance(b, (Just, Box)):
            stack.append((b.body, pol))


def sequent_signed_subformulas(s: Sequent) -> Iterator[tuple[Formula, str]]:
    """Occurrences in the formula (conjunction of antecedent) -> (disjunction of succedent)."""
    for it in s.antecedent:
        if type(it) is Labeled:
            yield from signed_subformulas(it.formula, NEGATIVE)
    for it in s.succedent:
        if type(it) is Labeled:
            yield from signed_subformulas(it.formula, POSITIVE)


class PolarityCounts(NamedTuple):
    n_colon: int
    p_colon: int
    n_box: int
    p_box: int


def polarity_counts(s: Sequent) -> PolarityCounts:
    c: Counter = Counter()
    for b, pol in sequent_signed_subformulas(s):
        if isinstance(b, Just):
            c["n_colon" if pol == NEGATIVE else "p_colon"] += 1
        elif isinstance(b, Box):
            c["n_box" if pol == NEGATIVE else "p_box"] += 1
    return PolarityCounts(c["n_colon"], c["p_colon"], c["n_box"], c["p_box"])


def item_formulas(item: Item) -> tuple[Formula, ...]:
    if type(item) is Rel:
        return ()
    return (item.formula,)


def item_terms(item: Item) -> set[Term]:
    """All subterms of all terms occurring in an item."""
    out: set[Term] = set()
    if type(item) is Ev:
        out |= subterms(item.term)
    for f in item_formulas(item):
        out |= formula_subterms(f)
    return out


def sequent_subterms(s: Sequent) -> set[Term]:
    out: set[Term] = set()
    for it in s.antecedent + s.succedent:
        out |= item_terms(it)
    return out


def sequent_subformulas(s: Sequent) -> set[Formula]:
    out: set[Formula] = set()
    for it in s.antecedent + s.succedent:
        for f in item_formulas(it):
            out |= jl_subformulas(f)
    return out


def neg(a: Formula) -> Formula:
    return Neg(a)


def contains_box(a: Formula) -> bool:
    return any(isinstance(b, Box) for b in jl_subformulas(a))
