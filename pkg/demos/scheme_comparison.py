"""General prizes versus group-specific prizes, n = 20 uniform agents.

A: one general winner-take-all prize, target output per target agent.
B: one prize for the best target-group agent, same measure.
C: B scaled by the target share, for comparison on a common budget footing.
"""
import numpy as np

from groupcontest.design import compare_schemes
from groupcontest.dist import Uniform

mus = np.linspace(0.01, 0.99, 99)
cmp = compare_schemes(20, mus, Uniform(), Uniform())
for mu, a, b, c in list(zip(mus, cmp.general, cmp.group, cmp.scaled_group))[::14]:
    print(f"mu={mu:.2f}  A={a:.5f}  B={b:.5f}  C={c:.5f}")
print(f"A and B cross at mu* = {cmp.crossing:.6f}")
# Above mu* the group prize yields more per target agent; A always beats C.
