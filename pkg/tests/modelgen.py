"""Random finite Fitting models over small, closed term and formula pools."""

from __future__ import annotations

import itertools
import random

from jseq.logic_config import preset
from jseq.models import FittingModel, EvidenceUniverse
from jseq.syntax import App, Bang, BarQuery, Just, Neg, Query, Sum, Var, jl_subformulas, parse_formula

WORLDS = ("w", "v", "u")
VARS = (Var("x"), Var("y"))
SEEDS = ("P", "Q", "P -> Q", "Q -> P", "P -> (P -> Q)", "(P -> Q) -> Q")


def base_formulas() -> list:
    out: set = set()
    for s in SEEDS:
        out |= jl_subformulas(parse_formula(s))
    return sorted(out, key=str)


def term_pool(logic: str) -> list:
    cfg = preset(logic)
    x, y = VARS
    terms = [x, y, Sum(x, y), Sum(y, x), App(x, y), App(y, x), App(App(x, y), x), Sum(App(x, y), y)]
    if cfg.has("j4"):
        terms += [Bang(x), Bang(y)]
    if cfg.has("jB"):
        terms += [BarQuery(x), BarQuery(y)]
    if cfg.has("j5"):
        terms += [Query(x), Query(y)]
    return terms


def formula_pool(logic: str) -> list:
    cfg = preset(logic)
    f0 = base_formulas()
    out = list(f0)
    if cfg.has("j4") or cfg.has("jB") or cfg.has("j5"):
        out += [Just(t, a) for t in VARS for a in f0]
    if cfg.has("jB") or cfg.has("j5"):
        out += [Neg(Just(t, a)) for t in VARS for a in f0]
    return out


def random_rel(rng: random.Random, worlds, logic: str) -> set:
    cfg = preset(logic)
    rel = {(a, b) for a in worlds for b in worlds if rng.random() < 0.35}
    if cfg.has("jT"):
        rel |= {(a, a) for a in worlds}
    if cfg.has("jD"):
        rel |= {(a, rng.choice(worlds)) for a in worlds if not any(p == a for p, _ in rel)}
    changed = True
    while changed:
        changed = False
        new = set(rel)
        if cfg.has("j4"):
            new |= {(a, c) for a, b in rel for b2, c in rel if b == b2}
        if cfg.has("jB"):
            new |= {(b, a) for a, b in rel}
        if cfg.has("j5"):
            new |= {(b, c) for a, b in rel for a2, c in rel if a == a2}
        if new != rel:
            rel, changed = new, True
    return rel


def random_model(rng: random.Random, logic: str) -> FittingModel:
    worlds = WORLDS[:rng.randint(1, 3)]
    rel = random_rel(rng, worlds, logic)
    terms = [t for t in term_pool(logic) if t in VARS or rng.random() < 0.2]
    f0 = base_formulas()
    base = {}
    for _ in range(rng.randint(0, 4)):
        key = (rng.choice(terms), rng.choice(f0))
        ws = frozenset(w for w in worlds if rng.random() < 0.5)
        if ws:
            base[key] = ws
    val = {p: frozenset(w for w in worlds if rng.random() < 0.5) for p in ("P", "Q")}
    return FittingModel(frozenset(worlds), frozenset(rel), base, val, preset(logic))


def audit_universe(logic: str) -> EvidenceUniverse:
    return EvidenceUniverse(frozenset(itertools.product(term_pool(logic), formula_pool(logic))))
