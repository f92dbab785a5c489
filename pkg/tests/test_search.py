import pytest

from jseq.calculus import check_derivation, simplify_derivation
from jseq.logic_config import EMPTY_CS, RuleId, parse_cs, preset
from jseq.models import check_conditions, default_universe, validates_sequent
from jseq.search import STAGE_ORDER, Derivable, NotDerivable, Unknown, compute_budgets, default_fuel, search
from jseq.syntax import Labeled, parse_goal, parse_sequent

from corpus_gen import corpus
from oracles import derivation_sublabel_ok, e_rule_terms_ok, is_labeled_subformula, oracle_polarity_counts

R = RuleId
LOEB = "x:(y:A -> A) -> z:A"


# -- budgets ----------------------------------------------------------------------

def test_budget_single_positive_colon():
    b = compute_budgets(preset("J"), EMPTY_CS, parse_goal("t:P"))
    assert (b.p_colon, b.n_colon) == (1, 0)
    assert b.rule_caps[R.L_JUST] == 0


def test_budget_loeb_polarity_from_oracle():
    root = parse_goal(LOEB)
    b = compute_budgets(preset("J4"), EMPTY_CS, root)
    want = oracle_polarity_counts(root)
    assert (b.n_colon, b.p_colon) == (want["n_colon"], want["p_colon"]) == (1, 2)


def test_budget_lp_chain_cap():
    b = compute_budgets(preset("LP"), EMPTY_CS, parse_goal("x:P -> !x:x:P"))
    assert b.rcolon_cap == b.n_colon + b.n_box + 1 == 2


def test_budget_jt_caps():
    b = compute_budgets(preset("JT"), EMPTY_CS, parse_sequent("w |= x:P, w R v => v |= P"))
    assert set(b.rule_caps) == {R.REF, R.L_JUST}
    assert b.rule_caps[R.REF] == b.l + b.p_colon


def test_fuel_env(monkeypatch):
    monkeypatch.setenv("JSEQ_FUEL", "77")
    assert default_fuel() == 77
    monkeypatch.delenv("JSEQ_FUEL")
    assert default_fuel() == 10_000


def test_j_e_cap_counterexample():
    # x:P reaches two labels, so a saturated branch needs three E steps with n(:) = 2
    root = parse_sequent("w |= y:x:P, w R v, w R u => v |= Q")
    b = compute_budgets(preset("J"), EMPTY_CS, root)
    r = search(preset("J"), EMPTY_CS, root, b)
    assert isinstance(r, NotDerivable)
    assert b.rule_caps[R.E] == 2
    assert r.stats.max_rule_counts[R.E] == 3


# -- search results ---------------------------------------------------------------

def test_stage_order():
    assert STAGE_ORDER.index(R.L_JUST) < STAGE_ORDER.index(R.L_BOX) < STAGE_ORDER.index(R.R_JUST)
    assert STAGE_ORDER[-2:] == (R.E_Q, R.E_BARQ)


def test_jd_consistency():
    cfg = preset("JD")
    r = search(cfg, parse_cs("c:(x:false -> false)"), parse_goal("x:false -> false"))
    assert isinstance(r, Derivable)
    d = simplify_derivation(cfg, EMPTY_CS, r.derivation)
    assert [n.rule for _, n in d.nodes()] == [R.R_IMP, R.SER, R.L_JUST, R.AX_BOT]


def test_loeb_not_derivable():
    r = search(preset("J4"), EMPTY_CS, parse_goal(LOEB))
    assert isinstance(r, NotDerivable)
    assert r.model.worlds == {"w"} and not r.model.rel


def test_jd_fuel_and_serial_once():
    r = search(preset("JD"), EMPTY_CS, parse_goal("P"), fuel=100)
    assert isinstance(r, Unknown) and r.reason == "fuel"
    r = search(preset("JD"), EMPTY_CS, parse_goal("P"), serial_once=True)
    assert isinstance(r, NotDerivable)
    m = r.model
    assert len(m.worlds) == 2
    (v,) = m.worlds - {"w"}
    assert m.rel == {("w", v), (v, v)}
    assert check_conditions(m, default_universe(m, parse_goal("P"))).ok


def test_j5_se_then_l_just():
    r = search(preset("J5"), EMPTY_CS, parse_sequent("w E(t,A), w R v => v |= A"))
    assert isinstance(r, Derivable)
    assert [n.rule for _, n in r.derivation.nodes()] == [R.SE, R.L_JUST, R.AX]


def test_jt_vs_j():
    goal = parse_goal("x:P -> P")
    assert isinstance(search(preset("JT"), EMPTY_CS, goal), Derivable)
    assert isinstance(search(preset("J"), EMPTY_CS, goal), NotDerivable)


def test_incomplete_fragment_reports_unknown():
    r = search(preset("JB"), EMPTY_CS, parse_goal("P"))
    assert isinstance(r, Unknown) and r.reason == "incomplete-fragment"


def test_search_deterministic():
    a = search(preset("LP"), EMPTY_CS, parse_goal("x:P -> !x:x:P"))
    b = search(preset("LP"), EMPTY_CS, parse_goal("x:P -> !x:x:P"))
    assert a.derivation == b.derivation


@pytest.mark.parametrize("logic", ["J", "JT", "LP", "K", "S4", "TJT"])
def test_corpus_sample_results_verified(logic):
    cfg = preset(logic)
    jl_minus = not cfg.modal_enabled
    for s, cs in corpus(logic, n=80, seed=11):
        r = search(cfg, cs, s)
        assert not isinstance(r, Unknown), str(s)
        if isinstance(r, Derivable):
            d = r.derivation
            assert d.sequent == s
            assert check_derivation(cfg, cs, d).ok
            assert derivation_sublabel_ok(d)
            if jl_minus:
                assert e_rule_terms_ok(d, constants=False)
                for _, n in d.nodes():
                    for it in n.sequent.antecedent + n.sequent.succedent:
                        if type(it) is Labeled:
                            assert is_labeled_subformula(it, s)
        else:
            assert not validates_sequent(r.model, r.interpretation, s)
            assert check_conditions(r.model, default_universe(r.model, s)).ok
