"""
How quantum hitting times grow with graph size
==============================================

For each family the walker starts on a weak pendant and we record the first
time the far pendant holds probability 0.9.  A log-log fit gives the growth
exponent, which we set beside the classical random walk's.
"""

# %%
from trexwalk import graphs, hitting

sizes = {
    "path": [21, 31, 41, 55],
    "cycle": [24, 56, 120, 248],
    "complete": [16, 32, 64, 128],
    "rook": [121, 169, 225, 289],
    "barbell": [41, 51, 61, 67],
}
for family, Ns in sizes.items():
    fit = hitting.scaling_fit(family, Ns)
    print(f"{family:9s} slope {fit.slope:6.3f} (from predictions {fit.predicted_slope:6.3f})")

# %%
# classical side: commute times between the same endpoints
for family, Ns in (("path", [21, 41]), ("cycle", [24, 56]), ("complete", [16, 32])):
    for N in Ns:
        g = graphs.generate(family, N)
        a, b = graphs.endpoints(family, N)
        C = hitting.commute_times(g)
        print(family, N, "commute", round(C[a - 1, b - 1], 1))

# %%
# the per-size table the CLI writes; delta is NaN because the clique
# quotient is singular and uses the resonant route at fixed eps
report = hitting.hitting_report("complete", [16, 32, 64, 128])
for row in report.rows():
    print(row)

# %%
# search with a pendant edge as the oracle: the walker starts on a pendant
# at the probe vertex and is read out on the oracle's pendant
g = graphs.generate("complete", 12)
for probe in (2, 9):
    found, t = hitting.edge_oracle_search(g, 2, probe, 0.02)
    print("probe", probe, "found" if found else "missed", "at t =", round(t, 1))
