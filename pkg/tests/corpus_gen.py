"""Deterministic random sequent corpus shared by the test suites."""

from __future__ import annotations

import random

from jseq.logic_config import ConstantSpec, parse_cs_entry, preset
from jseq.syntax import (
    And, App, Bottom, Box, Ev, Imp, Just, Labeled, Neg, Or, Prop, Rel, Sequent, Sum, Var,
)

CORPUS_LOGICS = ("J", "JT", "LP", "K", "T", "S4", "KJ", "TJT", "S4LP")
PROPS = ("P", "Q")
VARS = ("x", "y", "z")

# constant specification candidates per axiom family; each is downward closed
CS_POOL = {
    "J": ["a:(P -> P)", "b:(P -> Q -> P)", "a:(x:(P -> Q) -> y:P -> (x*y):Q)"],
    "JT": ["a:(P -> P)", "b:(x:P -> P)", "a:(P & Q -> P)"],
    "LP": ["a:(P -> P)", "b:(x:P -> P)", "c:(x:P -> !x:x:P)"],
    "KJ": ["a:(P -> P)", "b:(x:P -> []P)"],
    "TJT": ["a:(P -> P)", "b:(x:P -> P)"],
    "S4LP": ["a:(P -> P)", "b:(x:P -> []P)", "c:(x:P -> !x:x:P)"],
}


def _term(rng: random.Random, depth: int):
    if depth <= 0 or rng.random() < 0.6:
        return Var(rng.choice(VARS))
    left, right = _term(rng, depth - 1), _term(rng, depth - 1)
    return Sum(left, right) if rng.random() < 0.5 else App(left, right)


def _formula(rng: random.Random, depth: int, kind: str):
    if depth <= 0 or rng.random() < 0.2:
        return Bottom() if rng.random() < 0.05 else Prop(rng.choice(PROPS))
    r = rng.random()
    if r < 0.15:
        return Neg(_formula(rng, depth - 1, kind))
    if r < 0.55:
        op = rng.choice((And, Or, Imp, Imp))
        return op(_formula(rng, depth - 1, kind), _formula(rng, depth - 1, kind))
    body = _formula(rng, depth - 1, kind)
    use_box = kind == "modal" or (kind == "both" and rng.random() < 0.5)
    return Box(body) if use_box else Just(_term(rng, 1), body)


def _kind(logic: str) -> str:
    cfg = preset(logic)
    if not cfg.modal_enabled:
        return "just"
    return "both" if cfg.jaxioms else "modal"


def random_sequent(rng: random.Random, logic: str) -> Sequent:
    kind = _kind(logic)
    labels = ["w"] if rng.random() < 0.6 else ["w", "v"]
    ante, succ = [], []
    if len(labels) == 2:
        ante.append(Rel("w", "v"))
    for _ in range(rng.randint(0, 1)):
        ante.append(Labeled(rng.choice(labels), _formula(rng, 2, kind)))
    for _ in range(rng.randint(1, 2)):
        succ.append(Labeled(rng.choice(labels), _formula(rng, 3, kind)))
    if kind != "modal" and rng.random() < 0.2:
        ante.append(Ev(rng.choice(labels), Var(rng.choice(VARS)), Prop(rng.choice(PROPS))))
    return Sequent.of(ante, succ)


def random_cs(rng: random.Random, logic: str) -> ConstantSpec:
    pool = CS_POOL.get(logic)
    if not pool:
        return ConstantSpec(())
    k = rng.randint(0, 2)
    picked = rng.sample(pool, k)
    return ConstantSpec(tuple(parse_cs_entry(e) for e in picked))


def corpus(logic: str, n: int = 500, seed: int = 2024) -> list[tuple[Sequent, ConstantSpec]]:
    rng = random.Random(f"{seed}-{logic}")
    return [(random_sequent(rng, logic), random_cs(rng, logic)) for _ in range(n)]
