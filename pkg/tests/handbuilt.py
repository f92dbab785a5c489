"""Hand-written derivations, assembled bottom-up from rule names and principal items."""

from __future__ import annotations

from jseq.calculus import Derivation, leaf, make_move, premises_of
from jseq.logic_config import RuleId, parse_cs, preset
from jseq.syntax import parse_item, parse_sequent, parse_term, parse_formula

R = RuleId


def chain(cfg, root, steps, tops=None):
    """Apply single-premise ``steps`` upward from ``root`` and close with an initial sequent.

    A step is ``(rule, principal texts, eigenlabel, extra)``; a two-premise step must be
    last and ``tops`` then holds one step list per premise.
    """
    seq = [root]
    moves = []
    for rule, principal, eigen, extra in steps:
        m = make_move(rule, tuple(parse_item(p) for p in principal), eigen, extra)
        moves.append(m)
        prems = premises_of(m, seq[-1])
        if len(prems) > 1:
            subs = tuple(chain(cfg, p, t) for p, t in zip(prems, tops))
            break
        seq.append(prems[0])
    else:
        subs = (leaf(cfg, seq[-1]),)
        seq.pop()
    node = None
    for s, m in zip(reversed(seq), reversed(moves)):
        node = Derivation(s, m.rule, m.principal, m.eigenlabel, subs if node is None else (node,))
    return node if node is not None else subs[0]


def j4_sum_example():
    """G3J4 derivation of w |= x:P => w |= (x+y):P with a superfluous E! and Mon."""
    cfg = preset("J4")
    root = parse_sequent("w |= x:P => w |= (x+y):P")
    d = chain(cfg, root, [
        (R.E, ["w |= x:P"], None, None),
        (R.E_SUM_R, ["w E(x, P)"], None, parse_term("y")),
        (R.E_BANG, ["w E(x+y, P)"], None, None),
        (R.R_JUST, ["w E(x+y, P)", "w |= (x+y):P"], "v", None),
        (R.MON, ["w E(!(x+y), (x+y):P)", "w R v"], None, None),
        (R.L_JUST, ["w |= x:P", "w R v"], None, None),
    ])
    return cfg, d


EXAMPLE_CS = "c:(~t:s:P -> (Q -> Q))"


def j5_negative_example():
    """G3J5 derivation whose E? step introduces ~t:s:P, absent from the endsequent."""
    cfg = preset("J5")
    cs = parse_cs(EXAMPLE_CS)
    root = parse_sequent("w R v, v R u => u |= P, w E(c*?t, Q -> Q)")
    extra = ("w", parse_term("t"), parse_formula("s:P"))
    d = chain(cfg, root, [(R.E_Q, [], None, extra)], tops=[
        [
            (R.SE, ["w E(t, s:P)"], None, None),
            (R.L_JUST, ["w |= t:s:P", "w R v"], None, None),
            (R.L_JUST, ["v |= s:P", "v R u"], None, None),
        ],
        [
            (R.IAN, [], None, parse_item("w E(c, ~t:s:P -> (Q -> Q))")),
            (R.E_APP, ["w E(c, ~t:s:P -> (Q -> Q))", "w E(?t, ~t:s:P)"], None, None),
        ],
    ])
    return cfg, cs, d


def jb_negative_example(with_cs: bool = False):
    """G3JB derivations whose E?? step introduces s:P and ~t:s:P."""
    cfg = preset("JB")
    extra = ("w", parse_term("t"), parse_formula("s:P"))
    left = [(R.L_JUST, ["w |= s:P", "w R v"], None, None)]
    if not with_cs:
        root = parse_sequent("w R v => v |= P, w E(??t, ~t:s:P)")
        return cfg, parse_cs(""), chain(cfg, root, [(R.E_BARQ, [], None, extra)], tops=[left, []])
    cs = parse_cs(EXAMPLE_CS)
    root = parse_sequent("w R v => v |= P, w E(c*??t, Q -> Q)")
    right = [
        (R.IAN, [], None, parse_item("w E(c, ~t:s:P -> (Q -> Q))")),
        (R.E_APP, ["w E(c, ~t:s:P -> (Q -> Q))", "w E(??t, ~t:s:P)"], None, None),
    ]
    return cfg, cs, chain(cfg, root, [(R.E_BARQ, [], None, extra)], tops=[left, right])


def not_in_endsequent(d, formula_text: str) -> bool:
    f = parse_formula(formula_text)
    items = d.sequent.antecedent + d.sequent.succedent
    return all(getattr(it, "formula", None) != f for it in items)

