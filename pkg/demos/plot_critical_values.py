"""
Critical values and the standardized statistic
==============================================

Simulated 95% critical values shrink as the sample grows, and the
centered and scaled null statistic is close to standard normal.
"""

import numpy as np

from klgof.experiments import ExperimentSpec, run_critical_values, run_standardized_diagnostics

spec = ExperimentSpec(kind="critical_values", s=(2.0,), n=(100, 200, 500, 1000),
                      m=(2, 3), k=(1, 3), replications=400, seed=5)
table = run_critical_values(spec).tables["s2"]
print("  ".join(f"{h:>8s}" for h in map(str, table[0])))
for row in table[1:]:
    print(f"{row[0]:>8d}  " + "  ".join(f"{v:8.4f}" for v in row[1:]))

diag = run_standardized_diagnostics(
    ExperimentSpec(kind="diagnostics", m=(2,), n=(500,), k=(1,), replications=500, seed=5)
)
cell = diag.cells[0]
z = np.asarray(cell["extra"]["z"])
print(f"\nKS distance of Z from N(0,1): {cell['extra']['ks_distance']:.4f}")
print(f"skewness of Z: {np.mean(z ** 3):+.3f}")

# Q-Q pairs, a few of them
qq = diag.tables["m2_N500_k1_qq"][1:]
for theo, emp in qq[:: len(qq) // 6]:
    print(f"  normal {theo:+.3f}   empirical {emp:+.3f}")
