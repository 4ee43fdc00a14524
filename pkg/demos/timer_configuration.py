"""
Choosing timers for a range of delays
=====================================

When only a delay range is known, each condition has to hold at its least
favourable end.  The result is one relative bound between timers.
"""

# %%
from stress_tsm import configure_timers
from stress_tsm.vlan import DelayMatrix, Interval

for lo, hi in ((5, 50), (2, 200)):
    cfg = configure_timers(Interval(lo, hi), "worst", 3)
    print(f"[{lo},{hi}]", cfg.generic, dict(cfg.witness))

# %%
# With exact delays every pair gets its own condition.
D = DelayMatrix.uniform(3, 100).replace(1, 2, 10).replace(2, 1, 10)
for line in configure_timers(D, "worst", 2).lines():
    print(line)
