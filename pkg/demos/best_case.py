"""
A topology where one response silences everyone
===============================================

Deterministic distance-based timers make each responder wait in
proportion to its distance from the requester.  Best mode asks for delays
under which responder 1 fires and every other responder hears it in time.
"""

# %%
from stress_tsm import SimConfig, TimerPolicy, run, synthesize_topology

for n in (3, 5, 10):
    policy = TimerPolicy.from_spec("deterministic", n)
    best = synthesize_topology(policy, "best", n)
    worst = synthesize_topology(policy, "worst", n)
    print(n, run(best.delays, SimConfig(policy)).responses, run(worst.delays, SimConfig(policy)).responses)

# %%
# The constraints behind the single-response case for n = 3.
for c in synthesize_topology(TimerPolicy.from_spec("deterministic", 3), "best", 3).constraints:
    print(c)
