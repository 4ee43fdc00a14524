"""
Longest recovery under a selective loss
=======================================

One responder answers, but its first response never reaches the
requester.  The search finds that chain, states its recovery time as an
expression, and the simulator agrees for concrete values.
"""

# %%
from fractions import Fraction

from stress_tsm import SimConfig, TimerPolicy, build_tsm, run, synthesize_response_time
from stress_tsm.fotg import trace_dump
from stress_tsm.vlan import DelayMatrix

res = synthesize_response_time(build_tsm(1, 2), 2)
print(res.time, [str(d) for d in res.loss_pattern])
print(trace_dump(res.sequence))

# %%
# Side conditions the values must meet.
for c in res.side_constraints:
    print(c)

# %%
a = {"d_Q_1": Fraction(30), "d_1_Q": Fraction(40), "Exp_1": Fraction(20), "Exp_Q": Fraction(150)}
m = run(DelayMatrix.from_assignment(2, a, 1),
        SimConfig(TimerPolicy.fixed([a["Exp_1"]], exp_q=a["Exp_Q"]), loss_pattern=res.loss_pattern, max_rounds=2))
print(m.recovery_time, res.time.evaluate(a))
