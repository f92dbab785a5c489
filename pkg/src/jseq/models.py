"""Finite Fitting models: evidence closures, forcing, condition audits, countermodels.

The evidence function of a model is computed from its finite base assignment.
Logics without j5 use the generated closure: recursion on the term, with
monotone propagation along the accessibility relation when j4 is present.
Logics with j5 use the rank-gated inductive construction followed by the
closure variant of their family (plain, monotone, anti-monotone or stable).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .logic_config import EMPTY_CS, ConstantSpec, LogicConfig, preset
from .syntax import (
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
    jl_subformulas,
    parse_formula,
    parse_term,
    sequent_subformulas,
    sequent_subterms,
    subterms,
)

__all__ = [
    "ConditionReport", "EvidenceUniverse", "FittingModel", "Interpretation", "ModelError",
    "check_conditions", "closure_membership", "default_universe", "extract_countermodel", "forces",
    "inductive_closure_membership", "model_from_json", "model_to_json", "validates_sequent",
]

GENERATED = "generated"
INDUCTIVE = "inductive"
BASE = "base"


class ModelError(ValueError):
    pass


def _close(s: frozenset, succ: Mapping[str, frozenset]) -> frozenset:
    out = set(s)
    todo = list(s)
    while todo:
        w = todo.pop()
        for v in succ.get(w, ()):
            if v not in out:
                out.add(v)
                todo.append(v)
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class FittingModel:
    worlds: frozenset
    rel: frozenset
    base_evidence: Mapping  # (Term, Formula) -> frozenset of worlds
    valuation: Mapping  # prop name -> frozenset of worlds
    logic: LogicConfig
    cs: ConstantSpec = EMPTY_CS
    closure: Optional[str] = None
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "worlds", frozenset(self.worlds))
        object.__setattr__(self, "rel", frozenset(tuple(p) for p in self.rel))
        object.__setattr__(self, "base_evidence",
                           {k: frozenset(v) for k, v in self.base_evidence.items() if v})
        object.__setattr__(self, "valuation", {k: frozenset(v) for k, v in self.valuation.items()})
        if self.closure is None:
            object.__setattr__(self, "closure", INDUCTIVE if self.logic.has("j5") else GENERATED)
        for a, b in self.rel:
            if a not in self.worlds or b not in self.worlds:
                raise ModelError(f"relation pair ({a}, {b}) leaves the set of worlds")
        for (t, f), ws in self.base_evidence.items():
            if not ws <= self.worlds:
                raise ModelError(f"evidence for {format_term(t)} names unknown worlds")
        for p, ws in self.valuation.items():
            if not ws <= self.worlds:
                raise ModelError(f"valuation of {p} names unknown worlds")

    # -- frame ---------------------------------------------------------------

    @property
    def succ(self) -> dict:
        if "succ" not in self._memo:
            d: dict = {w: set() for w in self.worlds}
            for a, b in self.rel:
                d[a].add(b)
            self._memo["succ"] = {w: frozenset(v) for w, v in d.items()}
        return self._memo["succ"]

    @property
    def pred(self) -> dict:
        if "pred" not in self._memo:
            d: dict = {w: set() for w in self.worlds}
            for a, b in self.rel:
                d[b].add(a)
            self._memo["pred"] = {w: frozenset(v) for w, v in d.items()}
        return self._memo["pred"]

    def is_euclidean(self) -> bool:
        return all((v, u) in self.rel for (w, v) in self.rel for u in self.succ[w])

    # -- evidence ------------------------------------------------------------

    def base(self, t: Term, f: Formula) -> frozenset:
        return self.base_evidence.get((t, f), frozenset())

    def _e0(self, t: Term, f: Formula) -> frozenset:
        if (self.logic.has("jB") and isinstance(t, BarQuery) and isinstance(f, Neg)
                and isinstance(f.sub, Just) and f.sub.term == t.inner):
            return self.worlds
        return self.base(t, f)

    def _imp_support(self, t: Term, raw: bool) -> frozenset:
        """Implications F with a nonempty evidence set for ``t``."""
        key = ("imps", raw, t)
        if key in self._memo:
            return self._memo[key]
        out = {f for (s, f) in self.base_evidence if s == t and isinstance(f, Imp)}
        if isinstance(t, Sum):
            out |= self._imp_support(t.left, raw) | self._imp_support(t.right, raw)
        elif isinstance(t, App):
            for g in self._imp_support(t.left, raw):
                if isinstance(g.right, Imp) and self._raw_or_gen(t.right, g.left, raw):
                    out.add(g.right)
        res = frozenset(out)
        self._memo[key] = res
        return res

    def _raw_or_gen(self, t: Term, f: Formula, raw: bool) -> frozenset:
        return self._ebar(t, f) if raw else self._generated(t, f)

    def _generated(self, t: Term, f: Formula) -> frozenset:
        key = ("gen", t, f)
        if key in self._memo:
            return self._memo[key]
        s = set(self._e0(t, f))
        if isinstance(t, Sum):
            s |= self._generated(t.left, f) | self._generated(t.right, f)
        elif isinstance(t, App):
            for g in self._imp_support(t.left, False):
                if g.right == f:
                    s |= self._generated(t.left, g) & self._generated(t.right, g.left)
        elif isinstance(t, Bang) and self.logic.has("j4"):
            if isinstance(f, Just) and f.term == t.inner:
                s |= self._generated(t.inner, f.body)
        res = frozenset(s)
        if self.logic.has("j4"):
            res = _close(res, self.succ)
        if self.logic.s4lpn_extras:
            res = _close(_close(res, self.pred), self.succ)
        self._memo[key] = res
        return res

    def _ebar(self, t: Term, f: Formula) -> frozenset:
        key = ("ebar", t, f)
        if key in self._memo:
            return self._memo[key]
        s = set(self._e0(t, f))
        if isinstance(t, Sum):
            s |= self._ebar(t.left, f) | self._ebar(t.right, f)
        elif isinstance(t, App):
            for g in self._imp_support(t.left, True):
                if g.right == f:
                    s |= self._ebar(t.left, g) & self._ebar(t.right, g.left)
        elif isinstance(t, Bang) and self.logic.has("j4"):
            if isinstance(f, Just) and f.term == t.inner:
                s |= self._ebar(t.inner, f.body)
        elif isinstance(t, Query) and self.logic.has("j5"):
            if isinstance(f, Neg) and isinstance(f.sub, Just) and f.sub.term == t.inner:
                s |= self.worlds - self._ebar(t.inner, f.sub.body)
        res = frozenset(s)
        self._memo[key] = res
        return res

    def _inductive(self, t: Term, f: Formula) -> frozenset:
        key = ("ind", t, f)
        if key in self._memo:
            return self._memo[key]
        bar = self._ebar(t, f)
        mono, anti = self.logic.has("j4"), self.logic.has("j5")
        s = bar
        if mono:
            s = _close(bar, self.succ)
        if anti:
            s = s | _close(bar, self.pred)
        self._memo[key] = s
        return s

    def evidence(self, t: Term, f: Formula) -> frozenset:
        """The set of worlds in the model's evidence function for ``(t, f)``."""
        if self.closure == BASE:
            return self.base(t, f)
        if self.closure == INDUCTIVE:
            if self.logic.has("j5") and not self.is_euclidean():
                raise ModelError("the inductive evidence function for j5 logics needs a Euclidean relation")
            return self._inductive(t, f)
        if self.logic.has("j5"):
            raise ModelError("the generated evidence function is not defined for j5 logics")
        return self._generated(t, f)

    def with_closure(self, closure: str) -> "FittingModel":
        return FittingModel(self.worlds, self.rel, self.base_evidence, self.valuation, self.logic, self.cs, closure)

    def with_rel(self, rel: Iterable) -> "FittingModel":
        return FittingModel(self.worlds, rel, self.base_evidence, self.valuation, self.logic, self.cs, self.closure)

    # -- forcing -------------------------------------------------------------

    def forces(self, w: str, a: Formula) -> bool:
        key = ("force", w, a)
        memo = self._memo
        if key in memo:
            return memo[key]
        if isinstance(a, Prop):
            r = w in self.valuation.get(a.name, ())
        elif isinstance(a, Bottom):
            r = False
        elif isinstance(a, Neg):
            r = not self.forces(w, a.sub)
        elif isinstance(a, And):
            r = self.forces(w, a.left) and self.forces(w, a.right)
        elif isinstance(a, Or):
            r = self.forces(w, a.left) or self.forces(w, a.right)
        elif isinstance(a, Imp):
            r = (not self.forces(w, a.left)) or self.forces(w, a.right)
        elif isinstance(a, Just):
            r = w in self.evidence(a.term, a.body) and all(self.forces(v, a.body) for v in self.succ[w])
        elif isinstance(a, Box):
            r = all(self.forces(v, a.body) for v in self.succ[w])
        else:
            raise TypeError(f"not a formula: {a!r}")
        memo[key] = r
        return r


Interpretation = Mapping[str, str]


def closure_membership(m: FittingModel, w: str, t: Term, f: Formula) -> bool:
    if m.logic.has("j5"):
        raise ModelError("closure_membership is defined for logics without j5; use inductive_closure_membership")
    return w in m._generated(t, f)


def inductive_closure_membership(m: FittingModel, w: str, t: Term, f: Formula) -> bool:
    if m.logic.has("j5") and not m.is_euclidean():
        raise ModelError("the inductive evidence function for j5 logics needs a Euclidean relation")
    return w in m._inductive(t, f)


def forces(m: FittingModel, w: str, a: Formula) -> bool:
    if w not in m.worlds:
        raise ModelError(f"unknown world {w}")
    return m.forces(w, a)


def validates_item(m: FittingModel, interp: Optional[Interpretation], it: Item) -> bool:
    f = (lambda x: x) if interp is None else (lambda x: interp[x])
    if type(it) is Labeled:
        return m.forces(f(it.label), it.formula)
    if type(it) is Rel:
        return (f(it.src), f(it.dst)) in m.rel
    return f(it.label) in m.evidence(it.term, it.formula)


def validates_sequent(m: FittingModel, interp: Optional[Interpretation], s: Sequent) -> bool:
    """True iff all antecedent items hold implies some succedent item holds."""
    if interp is not None:
        missing = s.labels() - set(interp)
        if missing:
            raise ModelError(f"interpretation misses labels {sorted(missing)}")
    if not all(validates_item(m, interp, it) for it in s.antecedent):
        return True
    return any(validates_item(m, interp, it) for it in s.succedent)


# --------------------------------------------------------------------------
# condition audit

@dataclass(frozen=True)
class EvidenceUniverse:
    pairs: frozenset

    @property
    def terms(self) -> frozenset:
        return frozenset(t for t, _ in self.pairs)

    @property
    def formulas(self) -> frozenset:
        return frozenset(f for _, f in self.pairs)


def default_universe(m: FittingModel, s: Optional[Sequent] = None) -> EvidenceUniverse:
    """Terms and formulas of ``s``, the base support and the CS, paired up."""
    terms: set = set()
    fms: set = set()
    for t, f in m.base_evidence:
        terms |= subterms(t)
        fms |= jl_subformulas(f)
    if s is not None:
        terms |= sequent_subterms(s)
        fms |= sequent_subformulas(s)
    for e in m.cs:
        fms |= jl_subformulas(e)
        if isinstance(e, Just):
            terms.add(e.term)
    return EvidenceUniverse(frozenset((t, f) for t in terms for f in fms))


@dataclass
class ConditionReport:
    violations: list = field(default_factory=list)
    checked: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def names(self) -> set:
        return {n for n, _ in self.violations}

    def describe(self) -> str:
        if self.ok:
            return "all conditions hold (" + ", ".join(self.checked) + ")"
        return "\n".join(f"{n} violated: {w}" for n, w in self.violations)


def _pair(t: Term, f: Formula) -> str:
    return f"({format_term(t)}, {format_formula(f)})"


def check_conditions(m: FittingModel, universe: Optional[EvidenceUniverse] = None,
                     limit: int = 20) -> ConditionReport:
    """Audit frame and evidence conditions of ``m``'s logic over ``universe``."""
    cfg = m.logic
    u = universe if universe is not None else default_universe(m)
    rep = ConditionReport()
    W = sorted(m.worlds)
    succ = m.succ

    def bad(name: str, witness: str) -> None:
        if sum(1 for n, _ in rep.violations if n == name) < limit:
            rep.violations.append((name, witness))

    ax = cfg.jaxioms | cfg.maxioms
    if ax & {"jT", "T"}:
        rep.checked.append("reflexive")
        for w in W:
            if (w, w) not in m.rel:
                bad("reflexive", w)
    if (("jD" in ax and not cfg.is_fk) or "D" in ax):
        rep.checked.append("serial")
        for w in W:
            if not succ[w]:
                bad("serial", w)
    if ax & {"j4", "4"}:
        rep.checked.append("transitive")
        for w, v in sorted(m.rel):
            for x in sorted(succ[v]):
                if (w, x) not in m.rel:
                    bad("transitive", f"{w} R {v} R {x}")
    if ax & {"jB", "B"}:
        rep.checked.append("symmetric")
        for w, v in sorted(m.rel):
            if (v, w) not in m.rel:
                bad("symmetric", f"{w} R {v}")
    if "5" in ax:
        rep.checked.append("euclidean")
        for w, v in sorted(m.rel):
            for x in sorted(succ[w]):
                if (v, x) not in m.rel:
                    bad("euclidean", f"{w} R {v}, {w} R {x}")

    pairs = sorted(u.pairs, key=lambda p: (format_term(p[0]), format_formula(p[1])))
    terms = sorted(u.terms, key=format_term)
    fms = sorted(u.formulas, key=format_formula)
    E = m.evidence
    try:
        rep.checked += ["E1", "E2"]
        for t, f in pairs:
            if isinstance(t, App):
                for g in fms:
                    if isinstance(g, Imp) and g.right == f:
                        missing = (E(t.left, g) & E(t.right, g.left)) - E(t, f)
                        if missing:
                            bad("E1", f"{sorted(missing)[0]} at {_pair(t, f)} via {format_formula(g.left)}")
            if isinstance(t, Sum):
                missing = (E(t.left, f) | E(t.right, f)) - E(t, f)
                if missing:
                    bad("E2", f"{sorted(missing)[0]} at {_pair(t, f)}")
        if cfg.has("j4"):
            rep.checked += ["E3", "E4"]
            for t, f in pairs:
                ev = E(t, f)
                for w in sorted(ev):
                    for v in sorted(succ[w]):
                        if v not in ev:
                            bad("E3", f"{w} R {v} at {_pair(t, f)}")
                missing = ev - E(Bang(t), Just(t, f))
                if missing:
                    bad("E4", f"{sorted(missing)[0]} at {_pair(t, f)}")
        if cfg.has("jB"):
            rep.checked.append("E5")
            for t in terms:
                for a in fms:
                    ev = E(BarQuery(t), Neg(Just(t, a)))
                    for w in W:
                        if not m.forces(w, a) and w not in ev:
                            bad("E5", f"{w} at {_pair(BarQuery(t), Neg(Just(t, a)))}")
        if cfg.has("j5"):
            rep.checked.append("E6")
            for t, f in pairs:
                missing = (m.worlds - E(t, f)) - E(Query(t), Neg(Just(t, f)))
                if missing:
                    bad("E6", f"{sorted(missing)[0]} at {_pair(t, f)}")
        if cfg.has("j5") or cfg.s4lpn_extras:
            rep.checked.append("E7")
            for t, f in pairs:
                for w in sorted(E(t, f)):
                    if not m.forces(w, Just(t, f)):
                        bad("E7", f"{w} at {_pair(t, f)}")
        if cfg.s4lpn_extras:
            rep.checked.append("anti-monotone")
            for t, f in pairs:
                ev = E(t, f)
                for w, v in sorted(m.rel):
                    if v in ev and w not in ev:
                        bad("anti-monotone", f"{w} R {v} at {_pair(t, f)}")
        if cfg.is_fk:
            rep.checked.append("consistent evidence")
            for t in terms:
                if E(t, Bottom()):
                    bad("consistent evidence", f"{_pair(t, Bottom())}")
        rep.checked.append("CS respect")
        for e in m.cs:
            if isinstance(e, Just):
                missing = m.worlds - E(e.term, e.body)
                if missing:
                    bad("CS respect", f"{sorted(missing)[0]} at {_pair(e.term, e.body)}")
    except ModelError as exc:
        bad("frame", str(exc))
    return rep


# --------------------------------------------------------------------------
# countermodels

def extract_countermodel(branch: Iterable[Sequent], root: Sequent, cfg: LogicConfig,
                         cs: ConstantSpec = EMPTY_CS, verify: bool = True,
                         extra_rel: Iterable = ()) -> FittingModel:
    """Read a model off the antecedents of a saturated branch."""
    worlds: set = set()
    rel: set = set(extra_rel)
    base: dict = {}
    val: dict = {}
    for s in branch:
        worlds |= s.labels()
        for it in s.antecedent:
            if type(it) is Rel:
                rel.add((it.src, it.dst))
            elif type(it) is Ev:
                base.setdefault((it.term, it.formula), set()).add(it.label)
            elif isinstance(it.formula, Prop):
                val.setdefault(it.formula.name, set()).add(it.label)
    worlds |= root.labels()
    m = FittingModel(frozenset(worlds), frozenset(rel), base, val, cfg, cs)
    if verify:
        assert not validates_sequent(m, None, root), "extracted model validates the root sequent"
        rep = check_conditions(m, default_universe(m, root))
        assert rep.ok, "extracted model violates " + rep.describe()
    return m


def model_to_json(m: FittingModel) -> dict:
    ev = [
        {"term": format_term(t), "formula": format_formula(f), "worlds": sorted(ws)}
        for (t, f), ws in m.base_evidence.items()
    ]
    ev.sort(key=lambda e: (e["term"], e["formula"]))
    return {
        "worlds": sorted(m.worlds),
        "rel": [list(p) for p in sorted(m.rel)],
        "evidence": ev,
        "valuation": {p: sorted(ws) for p, ws in sorted(m.valuation.items()) if ws},
        "logic": m.logic.name,
    }


def model_from_json(obj: dict, cfg: Optional[LogicConfig] = None, cs: ConstantSpec = EMPTY_CS) -> FittingModel:
    try:
        logic = cfg if cfg is not None else preset(obj["logic"])
        base = {}
        for e in obj.get("evidence", []):
            key = (parse_term(e["term"]), parse_formula(e["formula"]))
            base[key] = frozenset(base.get(key, frozenset()) | frozenset(e["worlds"]))
        return FittingModel(
            frozenset(obj["worlds"]),
            frozenset(tuple(p) for p in obj.get("rel", [])),
            base,
            {k: frozenset(v) for k, v in obj.get("valuation", {}).items()},
            logic,
            cs,
        )
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model JSON: {exc}") from None


def dumps(m: FittingModel) -> str:
    return json.dumps(model_to_json(m), indent=2, sort_keys=True)
