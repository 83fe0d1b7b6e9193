"""
A small power study
===================

Rejection rates against generalized Gaussian and Student-t alternatives.
The generalized Gaussian with shape s=2 is the Gaussian itself, so its
row estimates the size of the test.
"""

from klgof.experiments import ExperimentSpec, run_power

spec = ExperimentSpec(
    kind="power",
    m=(2,),
    n=(250, 500),
    s=(1.0, 2.0, 4.0),
    nu=(3.0, 10.0),
    replications=200,
    bootstrap_b=500,
    seed=11,
)
report = run_power(spec)

print(f"{'alternative':>12s} {'N':>5s} {'power':>7s} {'mean T':>8s}")
for cell in report.cells:
    c = cell["cell"]
    name = ("gg s=" if c["family"] == "generalized_gaussian" else "t nu=") + f"{c['parameter']:g}"
    print(f"{name:>12s} {c['N']:5d} {cell['extra']['power']:7.3f} {cell['mean']:8.4f}")
