"""Labeled sequent kernel: rule schemas, derivations, checking and transformations.

A rule application is described by a :class:`Move`: the principal items of the
conclusion, the items the rule consumes, and for each premise the items it adds.
Both the backward reading used by proof search and the derivation checker go
through :func:`make_move`, so a node is accepted exactly when its premises are
what the schema produces from its conclusion.
"""

from __future__ import annotations

import functools
import itertools
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from .logic_config import (
    INITIAL_RULES,
    ConfigError,
    ConstantSpec,
    LogicConfig,
    RuleId,
    rules_for_logic,
    split_cs_entry,
)
from .syntax import (
    BOTTOM,
    And,
    App,
    BarQuery,
    Bang,
    Bottom,
    Box,
    Const,
    Ev,
    Formula,
    Imp,
    Item,
    Just,
    Labeled,
    Neg,
    Or,
    Prop,
    Query,
    Rel,
    Sequent,
    Sum,
    Term,
    Var,
    format_formula,
    format_term,
    item_key,
    item_labels,
    jl_subformulas,
    parse_item,
    parse_sequent,
    sequent_subformulas,
    sequent_subterms,
    subterms,
)

__all__ = [
    "AnalyticityUniverse", "CheckError", "CheckResult", "Derivation", "Move", "RuleInstance",
    "backward_instances", "check_derivation", "derivation_from_json", "derivation_to_json",
    "derivation_to_latex", "fresh_label_source", "generalized_axiom", "initial_witness",
    "is_initial", "make_move", "premises_of", "prune_superfluous", "simplify_derivation",
    "substitute_label",
]


class CheckError(Exception):
    pass


def make_sequent(ante: Iterable[Item], succ: Iterable[Item]) -> Sequent:
    return Sequent(tuple(sorted(ante, key=item_key)), tuple(sorted(succ, key=item_key)))


# --------------------------------------------------------------------------
# initial sequents

def initial_witness(cfg: LogicConfig, s: Sequent) -> Optional[tuple[RuleId, Item]]:
    """First matching initial rule in the order Ax, AxBot, AxR, AxE, AxEBot."""
    succ = set(s.succedent)
    found: dict[RuleId, Item] = {}
    for it in s.antecedent:
        t = type(it)
        if t is Labeled:
            f = it.formula
            if type(f) is Prop and it in succ:
                found.setdefault(RuleId.AX, it)
            elif type(f) is Bottom:
                found.setdefault(RuleId.AX_BOT, it)
        elif t is Rel:
            if it in succ:
                found.setdefault(RuleId.AX_R, it)
        else:
            if it in succ:
                found.setdefault(RuleId.AX_E, it)
            if cfg.is_fk and type(it.formula) is Bottom:
                found.setdefault(RuleId.AX_E_BOT, it)
    for r in (RuleId.AX, RuleId.AX_BOT, RuleId.AX_R, RuleId.AX_E, RuleId.AX_E_BOT):
        if r in found:
            return r, found[r]
    return None


def is_initial(cfg: LogicConfig, cs: ConstantSpec, s: Sequent) -> Optional[RuleId]:
    w = initial_witness(cfg, s)
    return w[0] if w else None


def _initial_ok(cfg: LogicConfig, rule: RuleId, s: Sequent, witness: Item) -> bool:
    if witness not in s.antecedent:
        return False
    t = type(witness)
    if rule is RuleId.AX:
        return t is Labeled and type(witness.formula) is Prop and witness in s.succedent
    if rule is RuleId.AX_BOT:
        return t is Labeled and type(witness.formula) is Bottom
    if rule is RuleId.AX_R:
        return t is Rel and witness in s.succedent
    if rule is RuleId.AX_E:
        return t is Ev and witness in s.succedent
    if rule is RuleId.AX_E_BOT:
        return cfg.is_fk and t is Ev and type(witness.formula) is Bottom
    return False


# --------------------------------------------------------------------------
# rule schemas

@dataclass(frozen=True)
class Move:
    rule: RuleId
    principal: tuple
    eigenlabel: Optional[str]
    consumed_ante: tuple
    consumed_succ: tuple
    adds: tuple  # one (ante_add, succ_add) pair per premise
    needs_ante: tuple = ()
    needs_succ: tuple = ()


def _one(rule, principal, ante=(), succ=(), cons_a=(), cons_s=(), eigen=None, needs_a=(), needs_s=()):
    return Move(rule, tuple(principal), eigen, tuple(cons_a), tuple(cons_s),
                ((tuple(ante), tuple(succ)),), tuple(needs_a), tuple(needs_s))


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise CheckError(message)


def make_move(rule: RuleId, principal: tuple, eigenlabel: Optional[str] = None, extra=None) -> Move:
    """Build the schema instance of ``rule`` for the given principal items.

    ``extra`` carries what the principal items do not determine: the other
    summand for El+/Er+, the evidence atom for AN/IAN, the label for Ref/Ser,
    and ``(w, t, A)`` for E? and E??.
    """
    p = tuple(principal)
    R = RuleId

    def lab(i: int, kinds=None) -> Labeled:
        _expect(len(p) > i and type(p[i]) is Labeled, f"{rule.value}: principal {i} must be a labeled formula")
        if kinds is not None:
            _expect(isinstance(p[i].formula, kinds), f"{rule.value}: principal formula has the wrong shape")
        return p[i]

    def rel(i: int) -> Rel:
        _expect(len(p) > i and type(p[i]) is Rel, f"{rule.value}: principal {i} must be a relational atom")
        return p[i]

    def ev(i: int) -> Ev:
        _expect(len(p) > i and type(p[i]) is Ev, f"{rule.value}: principal {i} must be an evidence atom")
        return p[i]

    def arity(n: int) -> None:
        _expect(len(p) == n, f"{rule.value}: expected {n} principal items, got {len(p)}")

    if rule in (R.L_NEG, R.R_NEG, R.L_AND, R.R_AND, R.L_OR, R.R_OR, R.L_IMP, R.R_IMP):
        arity(1)
        kind = {R.L_NEG: Neg, R.R_NEG: Neg, R.L_AND: And, R.R_AND: And,
                R.L_OR: Or, R.R_OR: Or, R.L_IMP: Imp, R.R_IMP: Imp}[rule]
        it = lab(0, kind)
        w, f = it.label, it.formula
        if rule is R.L_NEG:
            return _one(rule, p, succ=[Labeled(w, f.sub)], cons_a=[it])
        if rule is R.R_NEG:
            return _one(rule, p, ante=[Labeled(w, f.sub)], cons_s=[it])
        a, b = Labeled(w, f.left), Labeled(w, f.right)
        if rule is R.L_AND:
            return _one(rule, p, ante=[a, b], cons_a=[it])
        if rule is R.R_OR:
            return _one(rule, p, succ=[a, b], cons_s=[it])
        if rule is R.R_IMP:
            return _one(rule, p, ante=[a], succ=[b], cons_s=[it])
        if rule is R.R_AND:
            return Move(rule, p, None, (), (it,), (((), (a,)), ((), (b,))))
        if rule is R.L_OR:
            return Move(rule, p, None, (it,), (), (((a,), ()), ((b,), ())))
        return Move(rule, p, None, (it,), (), (((), (a,)), ((b,), ())))  # L->

    if rule in (R.L_JUST, R.L_BOX):
        arity(2)
        it = lab(0, Just if rule is R.L_JUST else Box)
        r = rel(1)
        _expect(r.src == it.label, f"{rule.value}: relational atom must start at {it.label}")
        return _one(rule, p, ante=[Labeled(r.dst, it.formula.body)], needs_a=p)

    if rule is R.R_JUST:
        arity(2)
        e = ev(0)
        it = lab(1, Just)
        _expect(e.label == it.label and e.term == it.formula.term and e.formula == it.formula.body,
                "R:: evidence atom does not match the justification formula")
        _expect(eigenlabel is not None, "R:: missing eigenlabel")
        v = eigenlabel
        return _one(rule, p, ante=[Rel(it.label, v)], succ=[Labeled(v, it.formula.body)],
                    cons_s=[it], eigen=v, needs_a=[e])

    if rule is R.R_BOX:
        arity(1)
        it = lab(0, Box)
        _expect(eigenlabel is not None, "R[]: missing eigenlabel")
        v = eigenlabel
        return _one(rule, p, ante=[Rel(it.label, v)], succ=[Labeled(v, it.formula.body)], cons_s=[it], eigen=v)

    if rule is R.E:
        arity(1)
        it = lab(0, Just)
        return _one(rule, p, ante=[Ev(it.label, it.formula.term, it.formula.body)], needs_a=p)

    if rule is R.SE:
        arity(1)
        e = ev(0)
        return _one(rule, p, ante=[Labeled(e.label, Just(e.term, e.formula))], needs_a=p)

    if rule in (R.E_SUM_L, R.E_SUM_R):
        arity(1)
        e = ev(0)
        _expect(isinstance(extra, Term), f"{rule.value}: missing summand")
        term = Sum(extra, e.term) if rule is R.E_SUM_L else Sum(e.term, extra)
        return _one(rule, p, ante=[Ev(e.label, term, e.formula)], needs_a=p)

    if rule is R.E_APP:
        arity(2)
        e1, e2 = ev(0), ev(1)
        _expect(isinstance(e1.formula, Imp) and e1.formula.left == e2.formula and e1.label == e2.label,
                "E*: principal atoms must be wE(s, A->B), wE(t, A)")
        return _one(rule, p, ante=[Ev(e1.label, App(e1.term, e2.term), e1.formula.right)], needs_a=p)

    if rule is R.E_BANG:
        arity(1)
        e = ev(0)
        return _one(rule, p, ante=[Ev(e.label, Bang(e.term), Just(e.term, e.formula))], needs_a=p)

    if rule is R.MON:
        arity(2)
        e, r = ev(0), rel(1)
        _expect(r.src == e.label, "Mon: relational atom must start at the evidence label")
        return _one(rule, p, ante=[Ev(r.dst, e.term, e.formula)], needs_a=p)

    if rule is R.ANTI_MON:
        arity(2)
        e, r = ev(0), rel(1)
        _expect(r.dst == e.label, "AntiMon: relational atom must end at the evidence label")
        return _one(rule, p, ante=[Ev(r.src, e.term, e.formula)], needs_a=p)

    if rule in (R.AN, R.IAN):
        arity(0)
        _expect(type(extra) is Ev and type(extra.term) is Const, f"{rule.value}: missing evidence atom")
        return _one(rule, p, ante=[extra])

    if rule is R.REF:
        arity(0)
        _expect(isinstance(extra, str), "Ref: missing label")
        return _one(rule, p, ante=[Rel(extra, extra)])

    if rule is R.SER:
        arity(0)
        _expect(isinstance(extra, str) and eigenlabel is not None, "Ser: missing label or eigenlabel")
        return _one(rule, p, ante=[Rel(extra, eigenlabel)], eigen=eigenlabel)

    if rule is R.SYM:
        arity(1)
        r = rel(0)
        return _one(rule, p, ante=[Rel(r.dst, r.src)], needs_a=p)

    if rule is R.TRANS:
        arity(2)
        r1, r2 = rel(0), rel(1)
        _expect(r1.dst == r2.src, "Trans: atoms must be wRv, vRu")
        return _one(rule, p, ante=[Rel(r1.src, r2.dst)], needs_a=p)

    if rule is R.EUCL:
        arity(2)
        r1, r2 = rel(0), rel(1)
        _expect(r1.src == r2.src, "Eucl: atoms must be wRv, wRu")
        return _one(rule, p, ante=[Rel(r1.dst, r2.dst)], needs_a=p)

    if rule is R.EUCL_STAR:
        arity(1)
        r = rel(0)
        return _one(rule, p, ante=[Rel(r.dst, r.dst)], needs_a=p)

    if rule in (R.E_Q, R.E_BARQ):
        arity(0)
        _expect(isinstance(extra, tuple) and len(extra) == 3, f"{rule.value}: missing instance data")
        w, t, a = extra
        if rule is R.E_Q:
            first = Ev(w, t, a)
            second = Ev(w, Query(t), Neg(Just(t, a)))
        else:
            first = Labeled(w, a)
            second = Ev(w, BarQuery(t), Neg(Just(t, a)))
        return Move(rule, p, None, (), (), (((first,), ()), ((second,), ())))

    raise CheckError(f"{rule.value} is not an inference rule")


def move_applies(move: Move, s: Sequent) -> bool:
    """Consumed items are counted; items that are only read need one occurrence."""
    have_a, have_s = Counter(s.antecedent), Counter(s.succedent)
    need_a, need_s = Counter(move.consumed_ante), Counter(move.consumed_succ)
    return (all(have_a[k] >= n for k, n in need_a.items())
            and all(have_s[k] >= n for k, n in need_s.items())
            and all(have_a[k] for k in move.needs_ante) and all(have_s[k] for k in move.needs_succ))


def premises_of(move: Move, s: Sequent) -> list[Sequent]:
    ante = list(s.antecedent)
    succ = list(s.succedent)
    for it in move.consumed_ante:
        ante.remove(it)
    for it in move.consumed_succ:
        succ.remove(it)
    return [make_sequent(ante + list(a), succ + list(b)) for a, b in move.adds]


@dataclass(frozen=True)
class RuleInstance:
    rule: RuleId
    conclusion: Sequent
    premises: tuple
    principal: tuple
    eigenlabel: Optional[str] = None


# --------------------------------------------------------------------------
# analyticity universe

@dataclass(frozen=True)
class AnalyticityUniverse:
    subterms: frozenset
    subformulas: frozenset
    root_labels: frozenset

    @staticmethod
    def for_root(root: Sequent, cs: ConstantSpec = ConstantSpec()) -> "AnalyticityUniverse":
        fms = set(sequent_subformulas(root))
        fms |= cs.subformulas()
        return AnalyticityUniverse(frozenset(sequent_subterms(root)), frozenset(fms), frozenset(root.labels()))

    @functools.cached_property
    def sums(self) -> tuple:
        return tuple(sorted((t for t in self.subterms if isinstance(t, Sum)), key=format_term))

    @functools.cached_property
    def apps(self) -> tuple:
        return tuple(sorted((t for t in self.subterms if isinstance(t, App)), key=format_term))

    @functools.cached_property
    def bangs(self) -> tuple:
        return tuple(sorted((t for t in self.subterms if isinstance(t, Bang)), key=format_term))

    @functools.cached_property
    def queries(self) -> tuple:
        return tuple(sorted((t for t in self.subterms if isinstance(t, Query)), key=format_term))

    @functools.cached_property
    def barqueries(self) -> tuple:
        return tuple(sorted((t for t in self.subterms if isinstance(t, BarQuery)), key=format_term))

    @functools.cached_property
    def sorted_subformulas(self) -> tuple:
        return tuple(sorted(self.subformulas, key=format_formula))


# --------------------------------------------------------------------------
# fresh labels

_LABEL_NUM = re.compile(r"v(\d+)\Z")


def fresh_label_source(avoid: Iterable[str] = (), prefix: str = "v") -> Callable[[], str]:
    """Monotone counter yielding labels ``v1, v2, ...`` that avoid ``avoid``."""
    taken = set(avoid)
    counter = itertools.count(1)

    def fresh() -> str:
        while True:
            name = f"{prefix}{next(counter)}"
            if name not in taken:
                taken.add(name)
                return name

    return fresh


# --------------------------------------------------------------------------
# backward instances

def _moves(cfg: LogicConfig, cs: ConstantSpec, rule: RuleId, s: Sequent,
           universe: AnalyticityUniverse, fresh: Callable[[], str]) -> Iterator[Move]:
    R = RuleId
    ante_set = set(s.antecedent)
    labels = sorted(s.labels())
    rels = [it for it in s.antecedent if type(it) is Rel]
    evs = [it for it in s.antecedent if type(it) is Ev]

    def new(move: Move) -> bool:
        # condition (dagger): the antecedent of a premise gains no duplicate
        return all(all(a not in ante_set for a in add) for add, _ in move.adds)

    if rule in (R.L_NEG, R.L_AND, R.L_OR, R.L_IMP):
        kind = {R.L_NEG: Neg, R.L_AND: And, R.L_OR: Or, R.L_IMP: Imp}[rule]
        for it in dict.fromkeys(s.antecedent):
            if type(it) is Labeled and isinstance(it.formula, kind):
                yield make_move(rule, (it,))
    elif rule in (R.R_NEG, R.R_AND, R.R_OR, R.R_IMP):
        kind = {R.R_NEG: Neg, R.R_AND: And, R.R_OR: Or, R.R_IMP: Imp}[rule]
        for it in dict.fromkeys(s.succedent):
            if type(it) is Labeled and isinstance(it.formula, kind):
                yield make_move(rule, (it,))
    elif rule in (R.L_JUST, R.L_BOX):
        kind = Just if rule is R.L_JUST else Box
        for it in s.antecedent:
            if type(it) is Labeled and isinstance(it.formula, kind):
                for r in rels:
                    if r.src == it.label:
                        m = make_move(rule, (it, r))
                        if new(m):
                            yield m
    elif rule is R.R_JUST:
        for it in dict.fromkeys(s.succedent):
            if type(it) is Labeled and isinstance(it.formula, Just):
                e = Ev(it.label, it.formula.term, it.formula.body)
                if e in ante_set:
                    yield make_move(rule, (e, it), fresh())
    elif rule is R.R_BOX:
        for it in dict.fromkeys(s.succedent):
            if type(it) is Labeled and isinstance(it.formula, Box):
                yield make_move(rule, (it,), fresh())
    elif rule is R.E:
        for it in s.antecedent:
            if type(it) is Labeled and isinstance(it.formula, Just):
                m = make_move(rule, (it,))
                if new(m):
                    yield m
    elif rule is R.SE:
        for e in evs:
            m = make_move(rule, (e,))
            if new(m):
                yield m
    elif rule in (R.AN, R.IAN):
        for c, f in cs.evidence_pairs():
            for w in labels:
                m = make_move(rule, (), extra=Ev(w, c, f))
                if new(m):
                    yield m
    elif rule in (R.E_SUM_L, R.E_SUM_R):
        for e in evs:
            for st in universe.sums:
                if rule is R.E_SUM_L and st.right == e.term:
                    m = make_move(rule, (e,), extra=st.left)
                elif rule is R.E_SUM_R and st.left == e.term:
                    m = make_move(rule, (e,), extra=st.right)
                else:
                    continue
                if new(m):
                    yield m
    elif rule is R.E_APP:
        for st in universe.apps:
            for e1 in evs:
                if e1.term == st.left and isinstance(e1.formula, Imp):
                    e2 = Ev(e1.label, st.right, e1.formula.left)
                    if e2 in ante_set:
                        m = make_move(rule, (e1, e2))
                        if new(m):
                            yield m
    elif rule is R.E_BANG:
        for e in evs:
            if Bang(e.term) in universe.subterms:
                m = make_move(rule, (e,))
                if new(m):
                    yield m
    elif rule in (R.MON, R.ANTI_MON):
        for e in evs:
            for r in rels:
                if (rule is R.MON and r.src == e.label) or (rule is R.ANTI_MON and r.dst == e.label):
                    m = make_move(rule, (e, r))
                    if new(m):
                        yield m
    elif rule is R.REF:
        for w in labels:
            m = make_move(rule, (), extra=w)
            if new(m):
                yield m
    elif rule is R.SER:
        for w in labels:
            yield make_move(rule, (), fresh(), extra=w)
    elif rule in (R.SYM, R.EUCL_STAR):
        for r in rels:
            m = make_move(rule, (r,))
            if new(m):
                yield m
    elif rule in (R.TRANS, R.EUCL):
        for r1 in rels:
            for r2 in rels:
                if rule is R.TRANS and r1.dst != r2.src:
                    continue
                if rule is R.EUCL and r1.src != r2.src:
                    continue
                m = make_move(rule, (r1, r2))
                if new(m):
                    yield m
    elif rule in (R.E_Q, R.E_BARQ):
        terms = universe.queries if rule is R.E_Q else universe.barqueries
        for q in terms:
            for a in universe.sorted_subformulas:
                for w in labels:
                    m = make_move(rule, (), extra=(w, q.inner, a))
                    if all(add[0] not in ante_set for add, _ in m.adds):
                        yield m


def backward_instances(cfg: LogicConfig, cs: ConstantSpec, rule: RuleId, s: Sequent,
                       universe: Optional[AnalyticityUniverse] = None,
                       fresh: Optional[Callable[[], str]] = None) -> list[RuleInstance]:
    """All instances of ``rule`` with conclusion ``s``, read bottom-up."""
    if rule not in rules_for_logic(cfg):
        raise ConfigError(f"rule {rule.value} is not active in {cfg.name}")
    if rule in INITIAL_RULES:
        return []
    if universe is None:
        universe = AnalyticityUniverse.for_root(s, cs)
    if fresh is None:
        fresh = fresh_label_source(s.labels() | universe.root_labels)
    out = []
    for m in _moves(cfg, cs, rule, s, universe, fresh):
        out.append(RuleInstance(rule, s, tuple(premises_of(m, s)), m.principal, m.eigenlabel))
    return out


# --------------------------------------------------------------------------
# derivations

@dataclass(frozen=True)
class Derivation:
    sequent: Sequent
    rule: Optional[RuleId]
    principal: tuple = ()
    eigenlabel: Optional[str] = None
    premises: tuple = ()

    def height(self) -> int:
        best = 0
        stack = [(self, 0)]
        while stack:
            n, h = stack.pop()
            best = max(best, h)
            stack.extend((p, h + 1) for p in n.premises)
        return best

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def nodes(self, path: tuple = ()) -> Iterator[tuple[tuple, "Derivation"]]:
        """Pre-order traversal yielding ``(path, node)``."""
        stack = [(path, self)]
        while stack:
            p, n = stack.pop()
            yield p, n
            for i in reversed(range(len(n.premises))):
                stack.append((p + (i,), n.premises[i]))

    def rules_used(self) -> Counter:
        return Counter(n.rule for _, n in self.nodes() if n.rule is not None)


def fold_derivation(d: Derivation, up: Callable, down: Optional[Callable] = None, state=None):
    """Iterative fold over a derivation.

    ``down(node, state)`` computes the state handed to the premises; ``up(node, that_state, results)``
    combines the premises' results. Without ``down`` the state is passed through unchanged.
    """
    out: list = []
    stack: list = [(d, state, False)]
    while stack:
        n, st, done = stack.pop()
        if done:
            k = len(n.premises)
            res = out[len(out) - k:] if k else []
            del out[len(out) - k:]
            out.append(up(n, st, res))
            continue
        child = down(n, st) if down else st
        stack.append((n, child, True))
        for p in reversed(n.premises):
            stack.append((p, child, False))
    return out[0]


@dataclass
class CheckResult:
    ok: bool
    path: tuple = ()
    rule: Optional[str] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        where = "root" if not self.path else "root/" + "/".join(str(i) for i in self.path)
        return f"node {where} ({self.rule}): {self.message}"


def _diff(prem: Sequent, concl: Sequent) -> list[Item]:
    """Antecedent items of ``prem`` not accounted for in ``concl``, as a multiset difference."""
    pa = prem.antecedent
    sp = set(pa)
    if len(sp) == len(pa):
        return sorted(sp.difference(concl.antecedent), key=item_key)
    return list((Counter(pa) - Counter(concl.antecedent)).elements())


def _infer_extra(rule: RuleId, node: Derivation):
    R = RuleId
    if rule in (R.E_SUM_L, R.E_SUM_R, R.AN, R.IAN, R.REF, R.SER, R.E_Q, R.E_BARQ):
        _expect(len(node.premises) >= 1, "missing premise")
        added = _diff(node.premises[0].sequent, node.sequent)
        _expect(len(added) == 1, f"premise must add exactly one antecedent item, adds {len(added)}")
        a = added[0]
        if rule in (R.E_SUM_L, R.E_SUM_R):
            _expect(type(a) is Ev and isinstance(a.term, Sum), "added atom is not a sum evidence atom")
            return a.term.left if rule is R.E_SUM_L else a.term.right
        if rule in (R.AN, R.IAN):
            return a
        if rule in (R.REF, R.SER):
            _expect(type(a) is Rel, "added item is not a relational atom")
            return a.src
        if rule is R.E_Q:
            _expect(type(a) is Ev, "first premise must add an evidence atom")
            return (a.label, a.term, a.formula)
        _expect(type(a) is Labeled, "first premise must add a labeled formula")
        second = _diff(node.premises[-1].sequent, node.sequent)
        _expect(len(second) == 1 and type(second[0]) is Ev and isinstance(second[0].term, BarQuery),
                "second premise must add a ??-evidence atom")
        return (a.label, second[0].term.inner, a.formula)
    return None


def _check_node(cfg: LogicConfig, cs: ConstantSpec, active: frozenset, node: Derivation) -> Optional[str]:
    rule = node.rule
    if rule is None:
        return "open leaf"
    if rule not in active:
        return f"rule {rule.value} is not available in {cfg.name}"
    if rule in INITIAL_RULES:
        if node.premises:
            return "initial sequent with premises"
        if node.principal:
            if len(node.principal) != 1 or not _initial_ok(cfg, rule, node.sequent, node.principal[0]):
                return f"principal does not witness {rule.value}"
            return None
        w = initial_witness(cfg, node.sequent)
        if w is None or not any(_initial_ok(cfg, rule, node.sequent, it) for it in node.sequent.antecedent):
            return f"sequent is not an instance of {rule.value}"
        return None
    if len(node.premises) != rule.arity:
        return f"expected {rule.arity} premises, got {len(node.premises)}"
    if rule.has_eigenlabel != (node.eigenlabel is not None):
        return "eigenlabel present iff the rule has one"
    try:
        extra = _infer_extra(rule, node)
        move = make_move(rule, node.principal, node.eigenlabel, extra)
    except CheckError as exc:
        return str(exc)
    if node.eigenlabel is not None and node.eigenlabel in node.sequent.labels():
        return f"eigenlabel {node.eigenlabel} occurs in the conclusion"
    if not move_applies(move, node.sequent):
        return "principal items are not in the conclusion"
    if rule in (RuleId.AN, RuleId.IAN):
        e = move.adds[0][0][0]
        if Just(e.term, e.formula) not in cs:
            return f"constant specification violation: {e.term}:{format_formula(e.formula)} is not in CS"
    expected = premises_of(move, node.sequent)
    for i, (want, got) in enumerate(zip(expected, (p.sequent for p in node.premises))):
        if want != got:
            return f"premise {i} does not match the rule schema: expected {want}, found {got}"
    return None


def check_derivation(cfg: LogicConfig, cs: ConstantSpec, d: Derivation) -> CheckResult:
    """Verify every node of ``d`` against the calculus of ``cfg`` with ``cs``."""
    active = rules_for_logic(cfg)
    stack = [((), d)]
    while stack:
        path, node = stack.pop()
        err = _check_node(cfg, cs, active, node)
        if err is not None:
            return CheckResult(False, path, node.rule.value if node.rule else None, err)
        for i in reversed(range(len(node.premises))):
            stack.append((path + (i,), node.premises[i]))
    return CheckResult(True)


def node_from_move(move: Move, conclusion: Sequent, premises: Iterable[Derivation]) -> Derivation:
    return Derivation(conclusion, move.rule, move.principal, move.eigenlabel, tuple(premises))


def leaf(cfg: LogicConfig, s: Sequent) -> Derivation:
    w = initial_witness(cfg, s)
    if w is None:
        raise CheckError(f"not an initial sequent: {s}")
    return Derivation(s, w[0], (w[1],))


# --------------------------------------------------------------------------
# label substitution

def _rename_item(it: Item, m: dict) -> Item:
    if type(it) is Labeled:
        return Labeled(m.get(it.label, it.label), it.formula)
    if type(it) is Rel:
        return Rel(m.get(it.src, it.src), m.get(it.dst, it.dst))
    return Ev(m.get(it.label, it.label), it.term, it.formula)


def _rename_sequent(s: Sequent, m: dict) -> Sequent:
    return make_sequent((_rename_item(i, m) for i in s.antecedent), (_rename_item(i, m) for i in s.succedent))


def derivation_labels(d: Derivation) -> set[str]:
    out: set[str] = set()
    for _, n in d.nodes():
        out |= n.sequent.labels()
        if n.eigenlabel:
            out.add(n.eigenlabel)
    return out


def _apply_renaming(d: Derivation, m: dict, fresh: Callable[[], str], avoid: set) -> Derivation:
    def down(n: Derivation, st: dict) -> dict:
        if n.eigenlabel is not None and n.eigenlabel in avoid:
            return {**st, n.eigenlabel: fresh()}
        return st

    def up(n: Derivation, st: dict, subs: list) -> Derivation:
        # the eigenlabel never occurs in the conclusion, so the premise map serves both
        eigen = st.get(n.eigenlabel, n.eigenlabel) if n.eigenlabel is not None else None
        return Derivation(_rename_sequent(n.sequent, st), n.rule,
                          tuple(_rename_item(i, st) for i in n.principal), eigen, tuple(subs))

    return fold_derivation(d, up, down, dict(m))


def substitute_label(d: Derivation, v: str, w: str) -> Derivation:
    """Replace ``w`` by ``v`` throughout; clashing eigenlabels are renamed first."""
    if v == w:
        return d
    labels = derivation_labels(d)
    fresh = fresh_label_source(labels | {v, w})
    return _apply_renaming(d, {w: v}, fresh, {v, w})


# --------------------------------------------------------------------------
# generalized initial sequents

def generalized_axiom(cfg: LogicConfig, cs: ConstantSpec, w: str, a: Formula,
                      gamma: Iterable[Item] = (), delta: Iterable[Item] = ()) -> Derivation:
    """A derivation of ``w |= A, Gamma => Delta, w |= A`` by recursion on ``A``."""
    gamma, delta = list(gamma), list(delta)
    taken = {w}
    for it in gamma + delta:
        taken.update(item_labels(it))
    fresh = fresh_label_source(taken)
    return _gen_ax(cfg, w, a, gamma, delta, fresh)


def _apply(move: Move, s: Sequent, subs: list[Derivation]) -> Derivation:
    return node_from_move(move, s, subs)


def _gen_ax(cfg: LogicConfig, w: str, a: Formula, gamma: list, delta: list, fresh) -> Derivation:
    x = Labeled(w, a)
    s = make_sequent([x] + gamma, delta + [x])
    if isinstance(a, Prop):
        return Derivation(s, RuleId.AX, (x,))
    if isinstance(a, Bottom):
        return Derivation(s, RuleId.AX_BOT, (x,))
    if isinstance(a, Neg):
        b = Labeled(w, a.sub)
        # R~ then L~
        inner = _gen_ax(cfg, w, a.sub, gamma, delta, fresh)
        s1 = make_sequent([b, x] + gamma, delta)
        n1 = Derivation(s1, RuleId.L_NEG, (x,), None, (inner,))
        return Derivation(s, RuleId.R_NEG, (x,), None, (n1,))
    if isinstance(a, And):
        b, c = Labeled(w, a.left), Labeled(w, a.right)
        left = _gen_ax(cfg, w, a.left, gamma + [c], delta, fresh)
        right = _gen_ax(cfg, w, a.right, gamma + [b], delta, fresh)
        s1 = make_sequent([b, c] + gamma, delta + [x])
        n1 = Derivation(s1, RuleId.R_AND, (x,), None, (left, right))
        return Derivation(s, RuleId.L_AND, (x,), None, (n1,))
    if isinstance(a, Or):
        b, c = Labeled(w, a.left), Labeled(w, a.right)
        left = _gen_ax(cfg, w, a.left, gamma, delta + [c], fresh)
        right = _gen_ax(cfg, w, a.right, gamma, delta + [b], fresh)
        s1 = make_sequent([x] + gamma, delta + [b, c])
        n1 = Derivation(s1, RuleId.L_OR, (x,), None, (left, right))
        return Derivation(s, RuleId.R_OR, (x,), None, (n1,))
    if isinstance(a, Imp):
        b, c = Labeled(w, a.left), Labeled(w, a.right)
        left = _gen_ax(cfg, w, a.left, gamma, delta + [c], fresh)
        right = _gen_ax(cfg, w, a.right, gamma + [b], delta, fresh)
        s1 = make_sequent([b, x] + gamma, delta + [c])
        n1 = Derivation(s1, RuleId.L_IMP, (x,), None, (left, right))
        return Derivation(s, RuleId.R_IMP, (x,), None, (n1,))
    v = fresh()
    r = Rel(w, v)
    if isinstance(a, Just):
        e = Ev(w, a.term, a.body)
        # E, R:, L:
        inner = _gen_ax(cfg, v, a.body, [x, r, e] + gamma, delta, fresh)
        s2 = make_sequent([r, e, x] + gamma, delta + [Labeled(v, a.body)])
        n2 = Derivation(s2, RuleId.L_JUST, (x, r), None, (inner,))
        s1 = make_sequent([e, x] + gamma, delta + [x])
        n1 = Derivation(s1, RuleId.R_JUST, (e, x), v, (n2,))
        return Derivation(s, RuleId.E, (x,), None, (n1,))
    if isinstance(a, Box):
        if not cfg.modal_enabled:
            raise ConfigError(f"{cfg.name} has no modal rules")
        inner = _gen_ax(cfg, v, a.body, [x, r] + gamma, delta, fresh)
        s1 = make_sequent([r, x] + gamma, delta + [Labeled(v, a.body)])
        n1 = Derivation(s1, RuleId.L_BOX, (x, r), None, (inner,))
        return Derivation(s, RuleId.R_BOX, (x,), v, (n1,))
    raise TypeError(f"not a formula: {a!r}")


# --------------------------------------------------------------------------
# removing unused steps

_NON_CONSUMING = frozenset({
    RuleId.L_JUST, RuleId.L_BOX, RuleId.E, RuleId.SE, RuleId.E_SUM_L, RuleId.E_SUM_R, RuleId.E_APP,
    RuleId.E_BANG, RuleId.MON, RuleId.ANTI_MON, RuleId.AN, RuleId.IAN, RuleId.REF, RuleId.SER,
    RuleId.SYM, RuleId.TRANS, RuleId.EUCL, RuleId.EUCL_STAR,
})


def _simplify(d: Derivation) -> Derivation:
    # bottom-up: which steps add only items never used above them
    added: dict[int, list] = {}

    def used_up(n: Derivation, _st, subs: list) -> frozenset:
        used = frozenset(n.principal).union(*subs) if subs else frozenset(n.principal)
        if n.rule in _NON_CONSUMING and len(subs) == 1:
            new = _diff(n.premises[0].sequent, n.sequent)
            if not any(a in subs[0] for a in new):
                added[id(n)] = new
                return subs[0]
        return used

    fold_derivation(d, used_up)

    # top-down: skip dropped steps and erase their added items from everything above
    def down(n: Derivation, gone: tuple) -> tuple:
        return gone + tuple(added[id(n)]) if id(n) in added else gone

    def up(n: Derivation, gone: tuple, subs: list) -> Derivation:
        if id(n) in added:
            return subs[0]
        if not gone:
            return Derivation(n.sequent, n.rule, n.principal, n.eigenlabel, tuple(subs))
        ante = n.sequent.antecedent
        gone_set = frozenset(gone)
        if len(gone_set) == len(gone) and len(set(ante)) == len(ante):
            kept = [i for i in ante if i not in gone_set]
        else:
            kept = list((Counter(ante) - Counter(gone)).elements())
        return Derivation(make_sequent(kept, n.sequent.succedent), n.rule, n.principal, n.eigenlabel,
                          tuple(subs))

    return fold_derivation(d, up, down, ())


def simplify_derivation(cfg: LogicConfig, cs: ConstantSpec, d: Derivation) -> Derivation:
    """Drop non-branching steps whose added items are never used above them."""
    out = _simplify(d)
    if out.sequent != d.sequent or not check_derivation(cfg, cs, out):
        return d
    return out


# --------------------------------------------------------------------------
# pruning superfluous E-rule applications

E_RULES = frozenset({RuleId.E_SUM_L, RuleId.E_SUM_R, RuleId.E_APP, RuleId.E_BANG, RuleId.AN, RuleId.IAN})
_FAMILY_RULES = E_RULES | {RuleId.MON}
_JL_MINUS_FORBIDDEN = frozenset({RuleId.SE, RuleId.E_Q, RuleId.E_BARQ, RuleId.SYM, RuleId.EUCL,
                                 RuleId.EUCL_STAR, RuleId.ANTI_MON, RuleId.L_BOX, RuleId.R_BOX})


def _added(node: Derivation) -> list[Item]:
    return _diff(node.premises[0].sequent, node.sequent) if node.premises else []


def e_rule_has_subterm_property(node: Derivation, root_terms: set) -> bool:
    if node.rule not in E_RULES:
        return True
    (a,) = _added(node)
    if node.rule in (RuleId.AN, RuleId.IAN):
        consts = [a.term.name]
        inner, _ = split_cs_entry(a.formula)
        consts += inner
        return all(Const(c) in root_terms for c in consts)
    return a.term in root_terms


def _family_used(node: Derivation, fam: frozenset) -> bool:
    """Is a family atom principal in R: or AxE somewhere in ``node``'s subtree?"""
    stack = [(node, fam)]
    while stack:
        n, fam = stack.pop()
        if n.rule is RuleId.R_JUST and n.principal[0] in fam:
            return True
        if n.rule is RuleId.AX_E and n.principal and n.principal[0] in fam:
            return True
        if n.rule is RuleId.AX_E and not n.principal:
            if any(e in fam and e in n.sequent.succedent for e in n.sequent.antecedent):
                return True
        if n.rule in _FAMILY_RULES and any(p in fam for p in n.principal):
            fam = fam | frozenset(_added(n))
        stack.extend((p, fam) for p in n.premises)
    return False


def _cut_family(node: Derivation, fam: frozenset) -> Derivation:
    def in_family(n: Derivation, fam: frozenset) -> bool:
        return n.rule in _FAMILY_RULES and (any(p in fam for p in n.principal)
                                            or any(a in fam for a in _added(n)))

    def down(n: Derivation, fam: frozenset) -> frozenset:
        return fam | frozenset(_added(n)) if in_family(n, fam) else fam

    def up(n: Derivation, child_fam: frozenset, subs: list) -> Derivation:
        # child_fam contains the atoms a family step adds, so membership is unchanged by down
        if in_family(n, child_fam):
            return subs[0]
        ante = tuple(i for i in n.sequent.antecedent if i not in child_fam)
        return Derivation(Sequent(ante, n.sequent.succedent), n.rule, n.principal, n.eigenlabel,
                          tuple(subs))

    return fold_derivation(node, up, down, fam)


def _replace_at(d: Derivation, path: tuple, new: Derivation) -> Derivation:
    spine = [d]
    for i in path[:-1]:
        spine.append(spine[-1].premises[i])
    out = new
    for node, i in zip(reversed(spine), reversed(path)):
        prem = list(node.premises)
        prem[i] = out
        out = Derivation(node.sequent, node.rule, node.principal, node.eigenlabel, tuple(prem))
    return out


def prune_superfluous(d: Derivation) -> Derivation:
    """Remove E-rule applications lacking the subterm property, bottommost first."""
    for _, n in d.nodes():
        if n.rule in _JL_MINUS_FORBIDDEN:
            raise ValueError(f"pruning is defined for the six basic systems; found rule {n.rule.value}")
    root_terms = sequent_subterms(d.sequent)
    while True:
        target = None
        frontier = [((), d)]
        while frontier and target is None:
            nxt = []
            for path, n in frontier:
                if not e_rule_has_subterm_property(n, root_terms):
                    target = (path, n)
                    break
                nxt.extend((path + (i,), p) for i, p in enumerate(n.premises))
            frontier = nxt
        if target is None:
            return d
        path, n = target
        fam = frozenset(_added(n))
        if _family_used(n.premises[0], fam):
            raise ValueError(f"E-rule at {path} lacks the subterm property but is not superfluous")
        d = _replace_at(d, path, _cut_family(n.premises[0], fam))


# --------------------------------------------------------------------------
# JSON and LaTeX

def derivation_to_json(d: Derivation) -> dict:
    def up(n: Derivation, _st, subs: list) -> dict:
        return {
            "sequent": str(n.sequent),
            "rule": n.rule.value if n.rule else None,
            "principal": [str(i) for i in n.principal],
            "eigenlabel": n.eigenlabel,
            "premises": subs,
        }

    return fold_derivation(d, up)


def derivation_from_json(obj: dict) -> Derivation:
    # post-order over the JSON tree, building nodes bottom-up
    out: list = []
    stack: list = [(obj, False)]
    try:
        while stack:
            o, done = stack.pop()
            if not done:
                prem = o.get("premises", [])
                if not isinstance(prem, list):
                    raise TypeError("premises must be a list")
                stack.append((o, True))
                stack.extend((p, False) for p in reversed(prem))
                continue
            k = len(o.get("premises", []))
            premises = tuple(out[len(out) - k:]) if k else ()
            del out[len(out) - k:]
            seq = parse_sequent(o["sequent"])
            rule = RuleId.parse(o["rule"]) if o.get("rule") is not None else None
            principal = tuple(parse_item(p) for p in o.get("principal", []))
            out.append(Derivation(seq, rule, principal, o.get("eigenlabel"), premises))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed derivation JSON: {exc}") from None
    return out[0]


_LATEX_RULE = {
    "AxBot": r"Ax\bot", "AxEBot": r"AxE\bot", "L~": r"L\neg", "R~": r"R\neg", "L&": r"L\wedge",
    "R&": r"R\wedge", "L|": r"L\vee", "R|": r"R\vee", "L->": r"L\rightarrow", "R->": r"R\rightarrow",
    "E*": r"E\cdot", "E??": r"E\bar{?}", "L[]": r"L\Box", "R[]": r"R\Box", "Eucl*": r"Eucl^{*}",
    "AntiMon": r"Anti\text{-}Mon",
}


def latex_term(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, Sum):
        r = latex_term(t.right)
        return f"{latex_term(t.left)}+" + (f"({r})" if isinstance(t.right, Sum) else r)
    if isinstance(t, App):
        l, r = latex_term(t.left), latex_term(t.right)
        l = f"({l})" if isinstance(t.left, Sum) else l
        r = f"({r})" if isinstance(t.right, (Sum, App)) else r
        return f"{l}\\cdot {r}"
    op = {Bang: "!", Query: "?", BarQuery: r"\bar{?}"}[type(t)]
    inner = latex_term(t.inner)
    if isinstance(t.inner, (Sum, App)) or (type(t) is Query and isinstance(t.inner, (Query, BarQuery))):
        inner = f"({inner})"
    return op + inner


def latex_formula(a: Formula) -> str:
    if isinstance(a, Prop):
        return a.name
    if isinstance(a, Bottom):
        return r"\bot"
    if isinstance(a, (Neg, Box, Just)):
        body = a.sub if isinstance(a, Neg) else a.body
        inner = latex_formula(body)
        if isinstance(body, (And, Or, Imp)):
            inner = f"({inner})"
        if isinstance(a, Neg):
            return r"\neg " + inner
        if isinstance(a, Box):
            return r"\Box " + inner
        t = latex_term(a.term)
        if isinstance(a.term, (Sum, App)):
            t = f"({t})"
        return f"{t}:{inner}"
    prec = {Imp: 1, Or: 2, And: 3}
    p = prec[type(a)]
    l, r = latex_formula(a.left), latex_formula(a.right)
    lp, rp = prec.get(type(a.left), 4), prec.get(type(a.right), 4)
    if isinstance(a, Imp):
        l = f"({l})" if lp <= p else l
        r = f"({r})" if rp < p else r
    else:
        l = f"({l})" if lp < p else l
        r = f"({r})" if rp <= p else r
    sym = {Imp: r"\rightarrow", Or: r"\vee", And: r"\wedge"}[type(a)]
    return f"{l} {sym} {r}"


def latex_item(it: Item) -> str:
    if type(it) is Labeled:
        return rf"\mathsf{{{it.label}}} \Vdash {latex_formula(it.formula)}"
    if type(it) is Rel:
        return rf"\mathsf{{{it.src}}} R \mathsf{{{it.dst}}}"
    return rf"\mathsf{{{it.label}}} E({latex_term(it.term)}, {latex_formula(it.formula)})"


def latex_sequent(s: Sequent) -> str:
    left = ", ".join(latex_item(i) for i in s.antecedent)
    right = ", ".join(latex_item(i) for i in s.succedent)
    return f"{left} \\Rightarrow {right}".strip()


def derivation_to_latex(d: Derivation) -> str:
    """bussproofs source: one inference per node, premises above conclusion."""
    lines = [r"\begin{prooftree}"]

    def up(n: Derivation, _st, _subs: list) -> None:
        name = n.rule.value if n.rule else "?"
        label = _LATEX_RULE.get(name, name)
        if not n.premises:
            lines.append(r"\AxiomC{}")
            lines.append(rf"\RightLabel{{$({label})$}}")
            lines.append(rf"\UnaryInfC{{${latex_sequent(n.sequent)}$}}")
            return
        lines.append(rf"\RightLabel{{$({label})$}}")
        inf = {1: "UnaryInfC", 2: "BinaryInfC", 3: "TrinaryInfC"}[len(n.premises)]
        lines.append(rf"\{inf}{{${latex_sequent(n.sequent)}$}}")

    fold_derivation(d, up)
    lines.append(r"\end{prooftree}")
    return "\n".join(lines) + "\n"
