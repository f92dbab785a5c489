"""Reduction-tree proof search.

Each open branch cycles through the active stages in a fixed order. A stage
collects every eligible instance of its rule on the current top sequent and
applies them in turn; a branching instance splits the branch and the children
finish the stage independently. A branch closes as soon as its top sequent is
initial and is saturated after a full cycle of stages that changes nothing.

Branches are searched depth first. When every branch closes the recorded
moves are replayed into a :class:`~jseq.calculus.Derivation`; the first
saturated branch yields a countermodel (or ``Unknown`` for fragments where
saturation proves nothing).
"""

from __future__ import annotations

import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

from .calculus import (
    AnalyticityUniverse,
    Derivation,
    Move,
    _moves,
    check_derivation,
    fresh_label_source,
    leaf,
    make_sequent,
    node_from_move,
    premises_of,
)
from .logic_config import EMPTY_CS, ConstantSpec, LogicConfig, RuleId, rules_for_logic
from .models import FittingModel, check_conditions, default_universe, extract_countermodel, validates_sequent
from .syntax import (
    App,
    Bang,
    Bottom,
    Box,
    Ev,
    Formula,
    Just,
    Labeled,
    Prop,
    Rel,
    Sequent,
    Sum,
    Term,
    item_formulas,
    polarity_counts,
)

__all__ = [
    "DEFAULT_FUEL", "STAGE_ORDER", "Derivable", "NotDerivable", "SearchBudget", "SearchResult",
    "SearchStats", "Unknown", "compute_budgets", "search",
]

DEFAULT_FUEL = 10_000
DEFAULT_MAX_LABELS = 40
DEFAULT_TOTAL_FUEL = 400_000

R = RuleId
STAGE_ORDER = (
    R.L_NEG, R.R_NEG, R.L_AND, R.R_AND, R.L_OR, R.R_OR, R.L_IMP, R.R_IMP,
    R.L_JUST, R.L_BOX, R.R_JUST, R.R_BOX, R.E, R.AN, R.IAN, R.E_SUM_L, R.E_SUM_R, R.E_APP,
    R.E_BANG, R.MON, R.REF, R.SER, R.TRANS, R.SYM, R.EUCL, R.EUCL_STAR, R.ANTI_MON, R.SE,
    R.E_Q, R.E_BARQ,
)

INCOMPLETE = "incomplete-fragment"
FUEL = "fuel"


def default_fuel() -> int:
    try:
        return int(os.environ.get("JSEQ_FUEL", DEFAULT_FUEL))
    except ValueError:
        return DEFAULT_FUEL


# --------------------------------------------------------------------------
# budgets

def _term_ops(t: Term, c: Counter) -> None:
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Sum):
            c["+"] += 1
            stack += [x.left, x.right]
        elif isinstance(x, App):
            c["*"] += 1
            stack += [x.left, x.right]
        elif isinstance(x, Bang):
            c["!"] += 1
            stack.append(x.inner)
        elif hasattr(x, "inner"):
            stack.append(x.inner)


def _formula_ops(a: Formula, c: Counter) -> None:
    stack = [a]
    while stack:
        x = stack.pop()
        if isinstance(x, Just):
            _term_ops(x.term, c)
            stack.append(x.body)
        elif isinstance(x, Box):
            stack.append(x.body)
        elif hasattr(x, "sub"):
            stack.append(x.sub)
        elif hasattr(x, "left"):
            stack += [x.left, x.right]


@dataclass
class SearchBudget:
    l: int
    r: int
    e: int
    n_colon: int
    p_colon: int
    n_box: int
    p_box: int
    n_plus: int
    n_dot: int
    n_bang: int
    cs_size: int
    fuel: int = DEFAULT_FUEL
    total_fuel: int = DEFAULT_TOTAL_FUEL
    max_labels: int = DEFAULT_MAX_LABELS
    serial_once: bool = False
    rcolon_cap: Optional[int] = None
    rbox_cap: Optional[int] = None
    rule_caps: dict = field(default_factory=dict)

    def report(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "l", "r", "e", "n_colon", "p_colon", "n_box", "p_box", "n_plus", "n_dot", "n_bang",
            "cs_size", "fuel", "max_labels", "serial_once", "rcolon_cap", "rbox_cap")}
        out["rule_caps"] = {k.value: v for k, v in sorted(self.rule_caps.items(), key=lambda kv: kv[0].value)}
        return out


def compute_budgets(cfg: LogicConfig, cs: ConstantSpec, root: Sequent, fuel: Optional[int] = None,
                    serial_once: bool = False) -> SearchBudget:
    pc = polarity_counts(root)
    ops: Counter = Counter()
    for it in root.antecedent + root.succedent:
        for f in item_formulas(it):
            _formula_ops(f, ops)
        if type(it) is Ev:
            _term_ops(it.term, ops)
    b = SearchBudget(
        l=len(root.labels()),
        r=sum(1 for it in root.antecedent if type(it) is Rel),
        e=sum(1 for it in root.antecedent if type(it) is Ev),
        n_colon=pc.n_colon, p_colon=pc.p_colon, n_box=pc.n_box, p_box=pc.p_box,
        n_plus=ops["+"], n_dot=ops["*"], n_bang=ops["!"], cs_size=len(cs),
        fuel=default_fuel() if fuel is None else fuel, serial_once=serial_once,
    )
    rules = rules_for_logic(cfg)
    ev_atoms = b.e + b.n_colon + b.cs_size * (b.p_colon + b.l)
    only_j = not cfg.modal_enabled and not (cfg.jaxioms - {"jT"}) and not cfg.s4lpn_extras
    if only_j:
        if cfg.has("jT"):
            b.rule_caps[R.REF] = b.l + b.p_colon
            b.rule_caps[R.L_JUST] = b.n_colon * (2 * b.p_colon + b.r + b.l)
        else:
            b.rule_caps[R.L_JUST] = b.n_colon * (b.p_colon + b.r)
            b.rule_caps[R.IAN] = b.cs_size * (b.p_colon + b.l)
            b.rule_caps[R.E_SUM_L] = b.n_plus * ev_atoms
            b.rule_caps[R.E_SUM_R] = b.n_plus * ev_atoms
            b.rule_caps[R.E_APP] = b.n_dot * ev_atoms
            b.rule_caps[R.E] = b.n_colon
    if R.TRANS in rules:
        b.rcolon_cap = b.n_colon + b.n_box + 1
        b.rbox_cap = b.n_colon + b.n_box + 1
    return b


# --------------------------------------------------------------------------
# results

@dataclass
class SearchStats:
    stage_passes: int = 0
    branches: int = 0
    closed_branches: int = 0
    max_branch_passes: int = 0
    max_labels: int = 0
    max_rule_counts: Counter = field(default_factory=Counter)
    chain_blocked: bool = False

    def report(self) -> dict:
        return {
            "stage_passes": self.stage_passes,
            "branches": self.branches,
            "closed_branches": self.closed_branches,
            "max_branch_passes": self.max_branch_passes,
            "max_labels": self.max_labels,
            "max_rule_counts": {k.value: v for k, v in sorted(self.max_rule_counts.items(), key=lambda kv: kv[0].value)},
            "chain_blocked": self.chain_blocked,
        }


@dataclass
class Derivable:
    derivation: Derivation
    stats: SearchStats = field(default_factory=SearchStats)
    status = "derivable"


@dataclass
class NotDerivable:
    model: FittingModel
    interpretation: dict
    branch: Sequent
    stats: SearchStats = field(default_factory=SearchStats)
    status = "not-derivable"


@dataclass
class Unknown:
    reason: str
    stats: SearchStats = field(default_factory=SearchStats)
    detail: str = ""
    status = "unknown"


SearchResult = Union[Derivable, NotDerivable, Unknown]


class _OutOfFuel(Exception):
    pass


# --------------------------------------------------------------------------
# branch state

class _Branch:
    __slots__ = ("ante", "succ", "labels", "hist", "created", "event", "passes", "counts", "blocked")

    def __init__(self) -> None:
        self.ante: Counter = Counter()
        self.succ: Counter = Counter()
        self.labels: set = set()
        self.hist: set = set()
        self.created: dict = {}
        self.event = -1
        self.passes = 0
        self.counts: Counter = Counter()
        self.blocked = False

    def copy(self) -> "_Branch":
        b = _Branch()
        b.ante = self.ante.copy()
        b.succ = self.succ.copy()
        b.labels = set(self.labels)
        b.hist = set(self.hist)
        b.created = dict(self.created)
        b.event = self.event
        b.passes = self.passes
        b.counts = self.counts.copy()
        b.blocked = self.blocked
        return b

    def sequent(self) -> Sequent:
        return make_sequent(self.ante.elements(), self.succ.elements())


class _View:
    __slots__ = ("antecedent", "succedent", "_labels")

    def __init__(self, b: _Branch) -> None:
        self.antecedent = list(b.ante)
        self.succedent = list(b.succ)
        self._labels = b.labels

    def labels(self):
        return self._labels


def _closes(cfg: LogicConfig, b: _Branch, ante_new, succ_new) -> bool:
    for it in ante_new:
        t = type(it)
        if t is Labeled:
            f = it.formula
            if type(f) is Bottom:
                return True
            if type(f) is Prop and it in b.succ:
                return True
        else:
            if it in b.succ:
                return True
            if t is Ev and cfg.is_fk and type(it.formula) is Bottom:
                return True
    for it in succ_new:
        if type(it) is Labeled:
            if type(it.formula) is Prop and it in b.ante:
                return True
        elif it in b.ante:
            return True
    return False


def _history_key(m: Move):
    if m.rule in (R.L_JUST, R.L_BOX):
        it, r = m.principal
        return (m.rule, it.label, it.formula, r.dst)
    if m.rule is R.E_BARQ:
        return (m.rule,) + tuple(m.adds[1][0])
    return None


class _Engine:
    def __init__(self, cfg: LogicConfig, cs: ConstantSpec, root: Sequent, budget: SearchBudget) -> None:
        self.cfg = cfg
        self.cs = cs
        self.root = root
        self.budget = budget
        active = rules_for_logic(cfg)
        self.stages = [r for r in STAGE_ORDER if r in active]
        self.universe = AnalyticityUniverse.for_root(root, cs)
        self.fresh = fresh_label_source(root.labels())
        self.events: list = []  # (parent, move, premise index)
        self.stats = SearchStats()
        self.transitive = R.TRANS in active
        self.ser_created: set = set()
        self.label_age: dict = {w: 0 for w in root.labels()}

    # -- moves ---------------------------------------------------------------

    def _useful_query(self, m: Move) -> bool:
        """E? and E?? only for pairs whose negated justification occurs in the root."""
        ev = m.adds[1][0][0]
        return ev.formula in self.universe.subformulas

    def _query_rank(self, m: Move) -> tuple:
        w = m.adds[1][0][0].label
        return (w in self.ser_created, self.label_age.get(w, 0))

    def _chain(self, b: _Branch, w: str, f: Formula) -> int:
        n = 0
        x = w
        while x in b.created:
            parent, g = b.created[x]
            if g == f:
                n += 1
            x = parent
        return n

    def _eligible(self, b: _Branch, m: Move) -> bool:
        for it in m.consumed_ante:
            if b.ante[it] < 1:
                return False
        for it in m.consumed_succ:
            if b.succ[it] < 1:
                return False
        for it in m.needs_ante:
            if b.ante[it] < 1:
                return False
        rule = m.rule
        if rule in (R.E_Q, R.E_BARQ):
            if any(add[0] in b.ante for add, _ in m.adds):
                return False
        elif not m.consumed_ante and not m.consumed_succ:
            if any(a in b.ante for a in m.adds[0][0]):
                return False
        key = _history_key(m)
        if key is not None and key in b.hist:
            return False
        if rule is R.SER and self.budget.serial_once:
            w = m.adds[0][0][0].src
            if w in self.ser_created or any(r.src == w for r in b.ante if type(r) is Rel):
                return False
        if self.transitive and rule in (R.R_JUST, R.R_BOX):
            it = m.principal[-1]
            cap = self.budget.rcolon_cap if rule is R.R_JUST else self.budget.rbox_cap
            if cap is not None and self._chain(b, it.label, it.formula) >= cap:
                b.blocked = True
                return False
        return True

    def _apply(self, b: _Branch, m: Move, j: int) -> bool:
        """Apply premise ``j`` of ``m`` to ``b``; return True if it closes."""
        for it in m.consumed_ante:
            b.ante[it] -= 1
            if not b.ante[it]:
                del b.ante[it]
        for it in m.consumed_succ:
            b.succ[it] -= 1
            if not b.succ[it]:
                del b.succ[it]
        ante_new, succ_new = m.adds[j]
        for it in ante_new:
            b.ante[it] += 1
        for it in succ_new:
            b.succ[it] += 1
        closes = _closes(self.cfg, b, ante_new, succ_new)
        key = _history_key(m)
        if key is not None:
            b.hist.add(key)
        if m.eigenlabel is not None:
            b.labels.add(m.eigenlabel)
            self.label_age.setdefault(m.eigenlabel, len(self.label_age))
            if m.rule in (R.R_JUST, R.R_BOX):
                it = m.principal[-1]
                b.created[m.eigenlabel] = (it.label, it.formula)
            elif m.rule is R.SER:
                self.ser_created.add(m.eigenlabel)
        b.counts[m.rule] += 1
        self.events.append((b.event, m, j))
        b.event = len(self.events) - 1
        return closes

    # -- driver --------------------------------------------------------------

    def _finish_branch(self, b: _Branch) -> None:
        st = self.stats
        st.max_branch_passes = max(st.max_branch_passes, b.passes)
        st.max_labels = max(st.max_labels, len(b.labels))
        for k, v in b.counts.items():
            if v > st.max_rule_counts[k]:
                st.max_rule_counts[k] = v

    def run(self) -> SearchResult:
        root_b = _Branch()
        for it in self.root.antecedent:
            root_b.ante[it] += 1
        for it in self.root.succedent:
            root_b.succ[it] += 1
        root_b.labels = set(self.root.labels())
        closed: list = []
        if _closes(self.cfg, root_b, list(root_b.ante), ()):
            return self._derivable([root_b.event])
        n = len(self.stages)
        stack = [(root_b, 0, None, 0)]
        self.stats.branches = 1
        while stack:
            b, pos, pending, idle = stack.pop()
            outcome = None
            while outcome is None:
                if pending is None:
                    if idle >= n:
                        outcome = "saturated"
                        break
                    b.passes += 1
                    self.stats.stage_passes += 1
                    if b.passes > self.budget.fuel or self.stats.stage_passes > self.budget.total_fuel:
                        self._finish_branch(b)
                        return Unknown(FUEL, self.stats, "stage-pass budget exhausted")
                    if len(b.labels) > self.budget.max_labels:
                        self._finish_branch(b)
                        return Unknown(FUEL, self.stats, "label budget exhausted")
                    rule = self.stages[pos]
                    pending = list(_moves(self.cfg, self.cs, rule, _View(b), self.universe, self.fresh))
                    if rule in (R.E_Q, R.E_BARQ):
                        pending = [m for m in pending if self._useful_query(m)]
                        pending.sort(key=self._query_rank)
                    pending.reverse()
                    changed = False
                else:
                    changed = True  # resumed after a split
                while pending:
                    m = pending.pop()
                    if not self._eligible(b, m):
                        continue
                    if len(m.adds) > 1:
                        kids = []
                        for j in range(len(m.adds)):
                            c = b.copy() if j < len(m.adds) - 1 else b
                            kids.append((c, self._apply(c, m, j)))
                        self.stats.branches += len(kids) - 1
                        for c, shut in reversed(kids):
                            if shut:
                                closed.append(c.event)
                                self.stats.closed_branches += 1
                                self._finish_branch(c)
                            else:
                                rest = [] if rule in (R.E_Q, R.E_BARQ) else list(pending)
                                stack.append((c, pos, rest, 0))
                        outcome = "split"
                        break
                    changed = True
                    if self._apply(b, m, 0):
                        outcome = "closed"
                        break
                if outcome is not None:
                    break
                pending = None
                idle = 0 if changed else idle + 1
                pos = (pos + 1) % n
            if outcome == "closed":
                closed.append(b.event)
                self.stats.closed_branches += 1
                self._finish_branch(b)
            elif outcome == "saturated":
                self._finish_branch(b)
                return self._saturated(b)
        return self._derivable(closed)

    def _derivable(self, closed: list) -> Derivable:
        children: dict = {}
        for i, (parent, _, _) in enumerate(self.events):
            children.setdefault(parent, []).append(i)

        def build(s: Sequent, ev: int) -> Derivation:
            kids = children.get(ev)
            if not kids:
                return leaf(self.cfg, s)
            m = self.events[kids[0]][1]
            prem = premises_of(m, s)
            kids = sorted(kids, key=lambda k: self.events[k][2])
            return node_from_move(m, s, [build(prem[self.events[k][2]], k) for k in kids])

        d = build(self.root, -1)
        res = check_derivation(self.cfg, self.cs, d)
        assert res.ok, "search produced an invalid derivation: " + res.describe()
        return Derivable(d, self.stats)

    def _saturated(self, b: _Branch) -> SearchResult:
        cfg = self.cfg
        if cfg.has("jB") or cfg.has("j5") or cfg.s4lpn_extras:
            return Unknown(INCOMPLETE, self.stats, "saturated branch in a fragment without a countermodel construction")
        top = b.sequent()
        extra = ()
        heuristic = False
        if R.SER in self.stages and self.budget.serial_once:
            has_succ = {r.src for r in b.ante if type(r) is Rel}
            extra = tuple((w, w) for w in sorted(b.labels) if w not in has_succ)
            heuristic = bool(extra)
        self.stats.chain_blocked = b.blocked
        m = extract_countermodel([top], self.root, cfg, self.cs, verify=False, extra_rel=extra)
        ok = not validates_sequent(m, None, self.root) and check_conditions(m, default_universe(m, self.root)).ok
        if ok:
            return NotDerivable(m, {w: w for w in sorted(m.worlds)}, top, self.stats)
        if b.blocked or heuristic:
            return Unknown(FUEL, self.stats, "bounded branch did not yield a verified countermodel")
        raise AssertionError("saturated branch yields no countermodel for " + str(self.root))


def search(cfg: LogicConfig, cs: ConstantSpec = EMPTY_CS, root: Sequent = None,
           budget: Optional[SearchBudget] = None, *, fuel: Optional[int] = None,
           serial_once: bool = False) -> SearchResult:
    """Search for a derivation of ``root`` or a countermodel to it."""
    if budget is None:
        budget = compute_budgets(cfg, cs, root, fuel=fuel, serial_once=serial_once)
    engine = _Engine(cfg, cs, root, budget)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20_000))
    try:
        return engine.run()
    except RecursionError:
        return Unknown(FUEL, engine.stats, "recursion limit reached")
    finally:
        sys.setrecursionlimit(old)
