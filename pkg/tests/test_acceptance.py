"""Acceptance criteria, one group of tests per criterion.

Each test carries ``@pytest.mark.criterion(n)``; conftest prints one PASS/FAIL line per criterion.
"""

import itertools
import random
import time
from collections import Counter

import pytest

from jseq.calculus import backward_instances, check_derivation, prune_superfluous
from jseq.cli import RunConfig, prove_report
from jseq.logic_config import EMPTY_CS, PRESETS, preset, rules_for_logic
from jseq.models import FittingModel, check_conditions, default_universe, validates_sequent
from jseq.search import Derivable, NotDerivable, Unknown, compute_budgets, search
from jseq.syntax import Just, Labeled, Neg, Prop, Query, Rel, Sequent, Var, parse_goal, parse_sequent

from corpus_gen import CORPUS_LOGICS, corpus
from handbuilt import j4_sum_example, j5_negative_example, jb_negative_example, not_in_endsequent
from modelgen import audit_universe, formula_pool, random_model, term_pool
from oracles import derivation_sublabel_ok, e_rule_terms_ok, evidence_fixpoint, is_labeled_subformula, naive_forces

criterion = pytest.mark.criterion
JL_MINUS_CORPUS = ("J", "JT", "LP")


# -- shared corpus run ------------------------------------------------------------

@pytest.fixture(scope="module")
def corpus_runs():
    """Search every corpus item once; results feed criteria 4, 5, 6 and 9."""
    runs = {}
    for logic in CORPUS_LOGICS:
        cfg = preset(logic)
        items = []
        start = time.perf_counter()
        for s, cs in corpus(logic):
            b = compute_budgets(cfg, cs, s)
            items.append((s, cs, b, search(cfg, cs, s, b)))
        runs[logic] = (items, time.perf_counter() - start)
    return runs


# -- 1. axiom matrix --------------------------------------------------------------

AXIOMS = {
    "jK": "x:(P -> Q) -> y:P -> (x*y):Q",
    "SumL": "x:P -> (x+y):P",
    "SumR": "x:P -> (y+x):P",
    "jT": "x:P -> P",
    "jD": "~x:false",
    "j4": "x:P -> !x:x:P",
    "jB": "~P -> ??x:~x:P",
    "j5": "~x:P -> ?x:~x:P",
    "K": "[](P -> Q) -> []P -> []Q",
    "T": "[]P -> P",
    "D": "~[]false",
    "4": "[]P -> [][]P",
    "B": "P -> []~[]~P",
    "5": "~[]P -> []~[]P",
    "conn": "x:P -> []P",
}
JUST_FAMILY = {"jK", "SumL", "SumR", "jT", "jD", "j4", "jB", "j5"}


def axiom_status(cfg, ax):
    """('axiom' | 'entailed' | 'lacking' | None) for a preset; None means outside its language."""
    j, m = cfg.jaxioms, cfg.maxioms
    justified = bool(j) or cfg.connection_axiom
    if ax in JUST_FAMILY and not (justified or not cfg.modal_enabled):
        return None
    if ax not in JUST_FAMILY and ax != "conn" and not cfg.modal_enabled:
        return None
    if ax == "conn":
        return "axiom" if cfg.connection_axiom else (None if not justified or not cfg.modal_enabled else "lacking")
    if ax in ("jK", "SumL", "SumR", "K"):
        return "axiom"
    if ax in JUST_FAMILY:
        if ax in j:
            return "axiom"
        # frame facts: serial+symmetric+(transitive|euclidean) is reflexive; reflexive is serial
        if ax == "jT" and {"jD", "jB"} <= j and j & {"j4", "j5"}:
            return "entailed"
        if ax == "jD" and "jT" in j:
            return "entailed"
        return "lacking"
    if ax in m:
        return "axiom"
    if ax == "D" and "T" in m:
        return "entailed"
    if ax in ("4", "B") and {"T", "5"} <= m:
        return "entailed"
    return "lacking"


def _matrix_cells():
    for name in sorted(PRESETS):
        for ax in AXIOMS:
            st = axiom_status(PRESETS[name], ax)
            if st is not None:
                yield name, ax, st


@criterion(1)
@pytest.mark.parametrize("name", sorted(PRESETS))
def test_axiom_matrix(name):
    cfg = preset(name)
    for _, ax, st in (c for c in _matrix_cells() if c[0] == name):
        start = time.perf_counter()
        code, rep, d = prove_report(AXIOMS[ax], RunConfig(cfg))
        elapsed = time.perf_counter() - start
        if st == "axiom":
            assert code == 0, (name, ax, rep["status"])
            assert elapsed < 1.0, (name, ax, elapsed)
            assert check_derivation(cfg, EMPTY_CS, d).ok
        elif st == "lacking":
            assert code in (1, 2), (name, ax, rep["status"])


# -- 2. regression derivations ----------------------------------------------------

REGRESSIONS = [
    ("J5", "w E(t,A), w R v => v |= A"),
    ("J5", "w |= ~t:A => w E(?t, ~t:A)"),
    ("J4", "w |= x:P => w |= (x+y):P"),
    ("JT", "w |= x:P => w |= P"),
]


@criterion(2)
@pytest.mark.parametrize("logic,text", REGRESSIONS)
def test_regression_derivations(logic, text):
    cfg = preset(logic)
    r = search(cfg, EMPTY_CS, parse_sequent(text))
    assert isinstance(r, Derivable)
    assert check_derivation(cfg, EMPTY_CS, r.derivation).ok


# -- 3. Loeb countermodel ---------------------------------------------------------

@criterion(3)
def test_loeb_countermodel_exact():
    cfg = preset("J4")
    start = time.perf_counter()
    code, rep, m = prove_report("x:(y:A->A)->z:A", RunConfig(cfg))
    assert time.perf_counter() - start < 1.0
    assert code == 1
    assert rep["model"]["worlds"] == ["w"] and rep["model"]["rel"] == []
    assert rep["model"]["evidence"] == [{"term": "x", "formula": "y:A -> A", "worlds": ["w"]}]
    assert not any(m.valuation.values())
    root = parse_goal("x:(y:A->A)->z:A")
    assert check_conditions(m, default_universe(m, root)).ok
    assert validates_sequent(m, None, root) is False


# -- 4. termination ---------------------------------------------------------------

@criterion(4)
def test_corpus_terminates_within_budgets(corpus_runs):
    total = 0.0
    for logic, (items, seconds) in corpus_runs.items():
        total += seconds
        assert len(items) == 500
        for s, _, b, r in items:
            assert not isinstance(r, Unknown), (logic, str(s), r.reason)
            for rule, cap in b.rule_caps.items():
                assert r.stats.max_rule_counts[rule] <= cap, (logic, str(s), rule.value)
    assert total < 60.0


# -- 5. exclusivity ---------------------------------------------------------------

def _interpretations(labels, worlds):
    labels = sorted(labels)
    for image in itertools.product(sorted(worlds), repeat=len(labels)):
        yield dict(zip(labels, image))


@criterion(5)
@pytest.mark.parametrize("logic", CORPUS_LOGICS)
def test_prover_model_checker_exclusive(corpus_runs, logic):
    items, _ = corpus_runs[logic]
    models = []
    for s, cs, _, r in items:
        if isinstance(r, NotDerivable):
            assert not validates_sequent(r.model, r.interpretation, s)
            assert check_conditions(r.model, default_universe(r.model, s)).ok
            models.append((r.model, set(cs.entries)))
    derivable = [(s, set(cs.entries)) for s, cs, _, r in items if isinstance(r, Derivable)]
    for s, cs in derivable:
        labels = s.labels()
        assert len(labels) <= 3
        for m, mcs in models:
            if not cs <= mcs:
                continue
            for interp in _interpretations(labels, m.worlds):
                assert validates_sequent(m, interp, s), (str(s), interp)


# -- 6. structural admissibility --------------------------------------------------

def _derivable(cfg, cs, s):
    r = search(cfg, cs, s)
    assert not isinstance(r, Unknown), str(s)
    return isinstance(r, Derivable)


def _fresh_items(s):
    w = sorted(s.labels())[0]
    return [Labeled(w, Prop("Fresh")), Rel(w, "u9")]


@criterion(6)
@pytest.mark.parametrize("logic", CORPUS_LOGICS)
def test_weakening(corpus_runs, logic):
    cfg = preset(logic)
    for s, cs, _, r in corpus_runs[logic][0]:
        if isinstance(r, Derivable):
            for it in _fresh_items(s):
                assert _derivable(cfg, cs, Sequent.of(s.antecedent + (it,), s.succedent)), (str(s), str(it))


@criterion(6)
@pytest.mark.parametrize("logic", CORPUS_LOGICS)
def test_invertibility(corpus_runs, logic):
    cfg = preset(logic)
    rules = sorted(rules_for_logic(cfg), key=lambda r: r.value)
    for s, cs, _, r in corpus_runs[logic][0]:
        if not isinstance(r, Derivable):
            continue
        for rule in rules:
            for inst in backward_instances(cfg, cs, rule, s):
                for p in inst.premises:
                    assert _derivable(cfg, cs, p), (str(s), rule.value, str(p))


def _cut_pairs(corpus_runs, logic, rng, want):
    cfg = preset(logic)
    items = corpus_runs[logic][0]
    left = [(s, cs) for s, cs, _, r in items if isinstance(r, Derivable) and not cs.entries]
    others = [s for s, cs, _, r in items if not cs.entries]
    pairs = []
    attempts = 0
    while len(pairs) < want and attempts < 40 * want:
        attempts += 1
        s1, _ = rng.choice(left)
        phis = [it for it in s1.succedent if type(it) is Labeled]
        if not phis:
            continue
        phi = rng.choice(phis)
        s2 = rng.choice(others)
        right = Sequent.of(s2.antecedent + (phi,), s2.succedent)
        if _derivable(cfg, EMPTY_CS, right):
            pairs.append((s1, phi, right))
    return pairs


@criterion(6)
def test_cut(corpus_runs):
    rng = random.Random("cut")
    pairs = []
    for logic in CORPUS_LOGICS:
        for s1, phi, s2 in _cut_pairs(corpus_runs, logic, rng, 12):
            pairs.append((logic, s1, phi, s2))
    pairs = pairs[:100]
    assert len(pairs) == 100
    for logic, s1, phi, s2 in pairs:
        succ = list(s1.succedent)
        succ.remove(phi)
        ante = list(s2.antecedent)
        ante.remove(phi)
        concl = Sequent.of(tuple(s1.antecedent) + tuple(ante), tuple(succ) + tuple(s2.succedent))
        assert _derivable(preset(logic), EMPTY_CS, concl), (logic, str(s1), str(s2))


# -- 7. evidence closure laws -----------------------------------------------------

AUDIT_CONDITIONS = {"J": {"E1", "E2"}, "J4": {"E1", "E2", "E3", "E4"}, "JB": {"E1", "E2", "E5"},
                    "JB4": {"E1", "E2", "E3", "E4", "E5"}, "LP": {"E1", "E2", "E3", "E4"}}


@criterion(7)
@pytest.mark.parametrize("logic", sorted(AUDIT_CONDITIONS))
def test_closure_laws_against_oracle(logic):
    rng = random.Random(f"acceptance-closure-{logic}")
    terms, fms = term_pool(logic), formula_pool(logic)
    uni = audit_universe(logic)
    for _ in range(200):
        m = random_model(rng, logic)
        cfg = m.logic
        E = evidence_fixpoint(m.worlds, m.rel, m.base_evidence, terms, fms, j4=cfg.has("j4"), jb=cfg.has("jB"))
        for (t, f), ws in E.items():
            assert m.evidence(t, f) == frozenset(ws), (t, f)
        rep = check_conditions(m, uni)
        assert AUDIT_CONDITIONS[logic] <= set(rep.checked)
        assert rep.ok, rep.describe()


def _euclidean_j5_models(logic, rng, n):
    """Random models on Euclidean frames whose base evidence is forced in the generated model."""
    out = []
    while len(out) < n:
        m = random_model(rng, logic)
        if all(naive_forces(m.worlds, m.rel, m.valuation, m.evidence, w, Just(t, f))
               for (t, f), ws in m.base_evidence.items() for w in ws):
            out.append(m)
    return out


@criterion(7)
@pytest.mark.parametrize("logic", ["J5", "J45", "JT5", "JT45"])
def test_j5_inductive_closure_strong_evidence(logic):
    rng = random.Random(f"acceptance-j5-{logic}")
    uni = audit_universe(logic)
    violations = Counter()
    first = None
    for m in _euclidean_j5_models(logic, rng, 200):
        assert m.is_euclidean()
        names = set(check_conditions(m, uni).names())
        # independent E7 audit with the naive evaluator
        for t, f in uni.pairs:
            for w in m.evidence(t, f):
                if not naive_forces(m.worlds, m.rel, m.valuation, m.evidence, w, Just(t, f)):
                    names.add("E7")
                    first = first or (sorted(m.rel), dict(m.base_evidence), w, str(t), str(f))
        violations.update(names)
    assert not violations, f"models violating: {dict(violations)} of 200; first E7 witness {first}"


@criterion(7)
def test_j5_minimal_strong_evidence_witness():
    # Euclidean frame w R w, v R w; base evidence x:Q at w is forced there
    x, q = Var("x"), Prop("Q")
    m = FittingModel(frozenset({"w", "v"}), frozenset({("w", "w"), ("v", "w")}), {(x, q): {"w"}},
                     {"Q": {"w"}}, preset("J5"))
    assert m.forces("w", Just(x, q))
    neg = Neg(Just(x, q))
    assert m.evidence(Query(x), neg) == {"v"}
    assert m.forces("v", Just(Query(x), neg)), "E7 fails: v is in E(?x, ~x:Q) but v R w and w forces x:Q"


# -- 8. pruning -------------------------------------------------------------------

def _pruning_inputs():
    yield "J4-example", *j4_sum_example()[::-1], EMPTY_CS
    for logic in ("J", "J4", "JD", "JD4", "JT", "LP"):
        cfg = preset(logic)
        for s, cs in corpus(logic, n=150, seed=8):
            r = search(cfg, cs, s, serial_once=cfg.has("jD"))
            if isinstance(r, Derivable):
                yield logic, r.derivation, cfg, cs


@criterion(8)
def test_pruning_restores_subterm_property():
    seen = set()
    for logic, d, cfg, cs in _pruning_inputs():
        p = prune_superfluous(d)
        assert p.sequent == d.sequent
        assert e_rule_terms_ok(p), (logic, str(d.sequent))
        res = check_derivation(cfg, cs, p)
        assert res.ok, (logic, res.describe())
        seen.add(logic)
    assert seen == {"J4-example", "J", "J4", "JD", "JD4", "JT", "LP"}


# -- 9. analyticity ---------------------------------------------------------------

@criterion(9)
@pytest.mark.parametrize("logic", CORPUS_LOGICS)
def test_sublabel_and_subformula(corpus_runs, logic):
    jl_minus = logic in JL_MINUS_CORPUS
    for s, _, _, r in corpus_runs[logic][0]:
        if not isinstance(r, Derivable):
            continue
        assert derivation_sublabel_ok(r.derivation), str(s)
        if jl_minus:
            for _, n in r.derivation.nodes():
                for it in n.sequent.antecedent + n.sequent.succedent:
                    if type(it) is Labeled:
                        assert is_labeled_subformula(it, s), (str(s), str(it))


@criterion(9)
def test_sublabel_on_axiom_matrix():
    for name, ax, st in _matrix_cells():
        if st != "axiom":
            continue
        r = search(preset(name), EMPTY_CS, parse_goal(AXIOMS[ax]))
        assert derivation_sublabel_ok(r.derivation), (name, ax)


def _non_subformula_items(d):
    out = set()
    for _, n in d.nodes():
        for it in n.sequent.antecedent + n.sequent.succedent:
            if type(it) is Labeled and not is_labeled_subformula(it, d.sequent):
                out.add(str(it))
    return out


@criterion(9)
def test_negative_examples_accepted():
    cfg, cs, d = j5_negative_example()
    assert check_derivation(cfg, cs, d).ok
    assert not_in_endsequent(d, "~t:s:P")
    assert _non_subformula_items(d) == {"w |= t:s:P", "v |= s:P"}
    for with_cs in (False, True):
        cfg, cs, d = jb_negative_example(with_cs)
        assert check_derivation(cfg, cs, d).ok
        assert _non_subformula_items(d) == {"w |= s:P"}
