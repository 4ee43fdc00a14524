"""
Worst-case delays for the fixed-timer fixture
=============================================

Three responders, the first with a response timer in [100, 200] and the
others in [200, 400].  Every requester link is pinned to 100.  We ask for
delays under which no responder can suppress another, then confirm it by
simulation.
"""

# %%
from stress_tsm import SimConfig, TimerPolicy, run, synthesize_topology

policy = TimerPolicy.from_spec("wb-fixed", 3)
result = synthesize_topology(policy, "worst", 3)
for c in result.constraints:
    print(c)

# %%
# The solver sits one unit above each bound.
for row in result.delays.d:
    print([int(x) for x in row])

# %%
# Any draw of the timers inside their ranges now gives three responses.
for seed in range(5):
    m = run(result.delays, SimConfig(policy, seed=seed))
    print(seed, m.responses, m.suppressed, float(m.recovery_time))
