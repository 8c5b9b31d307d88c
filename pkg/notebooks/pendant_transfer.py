"""
Transfer along a long path with weak pendant arms
=================================================

A unit-hopping path on 55 vertices moves an excitation between its ends
poorly.  Hanging a weak edge off each end and starting the walker on one of
the pendants changes that.
"""

# %%
from trexwalk import graphs, spectral
from trexwalk.feshbach import TrexAttachment
from trexwalk.protocols import run_transfer

base = graphs.generate("path", 55)
att = TrexAttachment(base, 1, 55, 0.05)
rep = run_transfer(att)
print(rep.route, "prediction:", round(rep.predicted_time, 2), "peak at", round(rep.measured_peak_time, 2))
print("transfer probability", round(rep.transfer_probability, 4))

# %%
# the same geometry with every hopping equal to 1
bare = spectral.fidelity_trace(spectral.eigendecompose(graphs.generate("path", 57)), 1, 57, rep.trace.times)
print("uniform chain, best over the same window:", round(bare.peak_value**2, 4))

# %%
# a coarse text plot of both traces
for t, armed, plain in zip(rep.trace.times[::100], rep.trace.values[::100], bare.values[::100]):
    print(f"{t:8.1f} {'#' * int(40 * armed**2):<40} {'.' * int(40 * plain**2)}")

# %%
# an even path is nonsingular, so the 2x2 reduction applies instead;
# delta is a quarter of the smallest |eigenvalue| of the unit-norm base
P24 = graphs.generate("path", 24)
unit, _ = spectral.normalize(P24.matrix)
delta = 0.25 * spectral.eigendecompose(unit).min_abs()
r = run_transfer(TrexAttachment.build(P24, 1, 24, delta, normalize=True))
print(r.route, "time ratio", round(r.time_ratio, 4), "fidelity", round(r.measured_peak_fidelity, 4))
