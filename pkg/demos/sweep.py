"""
Sweeping policies over synthesized topologies
=============================================

The worst-case delays for deterministic timers are replayed under
randomized timers to see how much suppression the randomness buys back.
"""

# %%
from stress_tsm import TimerPolicy, synthesize_topology
from stress_tsm.sim import metrics_table, sweep

cases = []
for n in (3, 5, 10, 20):
    cases.append((f"n={n}", synthesize_topology(TimerPolicy.from_spec("deterministic", n), "worst", n).delays))

# %%
rows = []
for label, D in cases:
    n = D.n_responders
    policies = [TimerPolicy.from_spec("deterministic", n), TimerPolicy.from_spec("distance:1,1", n)]
    rows += sweep([(label, D)], policies, repetitions=20, seed=1)
print(metrics_table(rows))
