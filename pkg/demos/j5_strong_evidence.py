"""The inductively generated evidence function for J5 on a two-world Euclidean frame.

The base evidence x:Q at w is forced at w, yet ?x ends up as evidence for ~x:Q at v
although v sees w, where x:Q holds. The audit reports the strong evidence condition E7.
"""

from jseq.logic_config import preset
from jseq.models import FittingModel, check_conditions, default_universe
from jseq.syntax import Just, Neg, Prop, Query, Var, parse_goal

x, q = Var("x"), Prop("Q")
m = FittingModel(frozenset({"w", "v"}), frozenset({("w", "w"), ("v", "w")}), {(x, q): {"w"}},
                 {"Q": {"w"}}, preset("J5"))
neg = Neg(Just(x, q))
print("E(x, Q)       =", sorted(m.evidence(x, q)))
print("E(?x, ~x:Q)   =", sorted(m.evidence(Query(x), neg)))
print("w forces x:Q  :", m.forces("w", Just(x, q)))
print("v forces ?x:~x:Q :", m.forces("v", Just(Query(x), neg)))
print(check_conditions(m, default_universe(m, parse_goal("~x:Q -> ?x:~x:Q"))).describe())
