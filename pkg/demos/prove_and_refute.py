"""Prove a few goals and print countermodels for the ones that fail."""

from jseq.calculus import simplify_derivation
from jseq.cli import derivation_text, model_text
from jseq.logic_config import EMPTY_CS, preset
from jseq.search import Derivable, NotDerivable, search
from jseq.syntax import parse_goal

GOALS = [
    ("J", "x:(P -> Q) -> y:P -> (x*y):Q"),
    ("J", "x:P -> P"),
    ("JT", "x:P -> P"),
    ("LP", "x:P -> !x:x:P"),
    ("J4", "x:(y:A -> A) -> z:A"),
    ("S4LP", "x:P -> []P"),
]

for logic, text in GOALS:
    cfg = preset(logic)
    res = search(cfg, EMPTY_CS, parse_goal(text))
    print(f"== {logic}: {text} -> {res.status}")
    if isinstance(res, Derivable):
        print(derivation_text(simplify_derivation(cfg, EMPTY_CS, res.derivation)))
    elif isinstance(res, NotDerivable):
        print(model_text(res.model))
    print()
