"""Where should a designer cut off general prizes?

Four populations, each with a target group whose total output the designer
cares about. For each, the best schedule pays equal prizes to the top k*
agents; the script prints k* and the value of the designer's objective.
"""
from groupcontest.design import optimal_general_design
from groupcontest.scenario import bundled_path, load_scenario

for name in ["weaker_target_n10", "stronger_target_n50", "concentrated_target_n50", "dispersed_target_n50"]:
    sc = load_scenario(bundled_path(name))
    res = optimal_general_design(sc.population, sc.n)
    print(f"{name:26s} n={sc.n:3d}  mu={sc.mu:.3f}  k*={res.k_star:3d}  "
          f"objective={res.objective_value:.6f}  total output={res.total_output:.6f}")

# A weaker target group pushes the cutoff almost to the bottom: k* = n - 2.
# Stronger or more concentrated target groups favour fewer, larger prizes.
