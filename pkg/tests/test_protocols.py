import math
import warnings

import numpy as np
import pytest

from trexwalk import graphs, spectral
from trexwalk.errors import AsymmetricOverlap, CouplingTooStrong, DegenerateKernel, InvalidParameters, ZeroOverlap
from trexwalk.feshbach import TrexAttachment, trex_effective
from trexwalk.protocols import (
    ResonantSetup,
    effective_vs_full,
    resonant_effective,
    rows_to_csv,
    run_resonant,
    run_transfer,
    strong_potential_bounds,
)

K2 = graphs.generate("complete", 2)


def test_transfer_k2():
    rep = run_transfer(TrexAttachment(K2, 1, 2, 0.1))
    assert rep.route == "feshbach"
    assert rep.measured_peak_fidelity >= 0.98
    assert 0.9 <= rep.time_ratio <= 1.1
    assert rep.meets_prediction()


def test_fig1_layout():
    # unit-hopping P55 with arms of weight 0.05: singular base, resonant route
    att = TrexAttachment(graphs.generate("path", 55), 1, 55, 0.05)
    rep = run_transfer(att)
    assert rep.route == "resonant"
    assert rep.measured_peak_fidelity >= 0.95
    assert rep.transfer_probability >= 0.95
    bare = spectral.fidelity_trace(spectral.eigendecompose(graphs.generate("path", 57)), 1, 57, rep.trace.times)
    assert bare.peak_value**2 < 0.40


@pytest.mark.parametrize("N", [14, 24, 34])
def test_time_ratio_regression(N):
    # even paths (nonsingular), delta*kappa = 0.25 on the unit-norm base
    base = graphs.generate("path", N)
    sd = spectral.eigendecompose(base)
    att = TrexAttachment(base, 1, N, 0.25 * sd.min_abs())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = run_transfer(att)
    assert abs(rep.time_ratio - 1) <= 0.15
    assert rep.effective.coupling_strength == pytest.approx(0.25)
    assert rep.measured_peak_fidelity >= rep.predicted_fidelity - 4 * 0.25


@pytest.mark.parametrize("base,a,b", [
    (graphs.generate("path", 15), 1, 15),
    (graphs.generate("path", 25), 1, 25),
    (graphs.generate("path", 35), 1, 35),
    (graphs.quotient("complete", 16), 1, 3),
    (graphs.quotient("complete", 64), 1, 3),
])
@pytest.mark.parametrize("eps", [0.05, 0.25])
def test_time_ratio_resonant_suite(base, a, b, eps):
    rep = run_resonant(ResonantSetup.from_graph(base, a, b, eps))
    assert abs(rep.time_ratio - 1) <= 0.15
    assert rep.measured_peak_fidelity >= rep.predicted_fidelity - 4 * eps


def test_effective_vs_full_small_delta():
    att = TrexAttachment(K2, 1, 2, 1e-3)
    tau = (math.pi / 2) / 1e-6
    assert effective_vs_full(att, np.linspace(0, 1.5 * tau, 400)) <= 0.01
    assert effective_vs_full(att, [0.0]) == pytest.approx(0.0, abs=1e-15)


def test_effective_vs_full_p4():
    att = TrexAttachment.build(graphs.generate("path", 4), 1, 4, 0.02)
    tau = (math.pi / 2) / (0.02**2 * abs(np.linalg.inv(att.base.matrix)[0, 3]))
    assert effective_vs_full(att, np.linspace(0, tau, 500)) <= 0.1


def test_resonant_clique_overlap():
    setup = ResonantSetup.from_graph(graphs.quotient("complete", 16), 1, 3, 0.02)
    ra, rb = setup.overlaps
    assert ra == pytest.approx(1 / math.sqrt(2)) and rb == pytest.approx(-1 / math.sqrt(2))
    eff = resonant_effective(setup)
    assert eff.predicted_time == pytest.approx((math.pi / math.sqrt(2)) / (setup.eps * setup.gap * abs(ra)))
    M = eff.matrix
    assert np.all(np.diag(M) == 0) and M[0, 2] == 0


@pytest.mark.parametrize("N", [5, 21, 55])
def test_odd_path_overlap(N):
    setup = ResonantSetup.from_graph(graphs.generate("path", N), 1, N, 0.02)
    assert abs(setup.overlaps[0]) == pytest.approx(math.sqrt(2 / (N + 1)))


def test_barbell_kernel_pattern():
    N = 9
    setup = ResonantSetup.from_graph(graphs.quotient("barbell", N), 1, N + 4, 0.02)
    rho = setup.rho
    # kernel of the quotient: zero on even positions, equal magnitude
    # sqrt(2/(N+5)) with alternating sign on the odd ones
    odd = rho[0::2]
    assert np.max(np.abs(rho[1::2])) <= 1e-12
    inner = odd[1:-1]
    np.testing.assert_allclose(np.abs(inner), math.sqrt(2 / (N + 5)), rtol=1e-10)
    assert np.all(np.sign(inner[1:]) == -np.sign(inner[:-1]))


def test_run_resonant_clique():
    setup = ResonantSetup.from_graph(graphs.quotient("complete", 16), 1, 3, 0.02)
    rep = run_resonant(setup)
    assert rep.measured_peak_fidelity >= 0.9
    assert rep.measured_peak_time <= 1.5 * rep.predicted_time


def test_run_resonant_path():
    setup = ResonantSetup.from_graph(graphs.generate("path", 21), 1, 21, 0.02)
    rep = run_resonant(setup)
    pred = (math.pi / math.sqrt(2)) / (setup.pendant_weight * math.sqrt(2 / 22))
    assert rep.predicted_time == pytest.approx(pred)
    assert rep.measured_peak_fidelity >= 0.9 and rep.measured_peak_time <= 1.5 * pred


def test_sign_flip_gauge():
    base = graphs.quotient("complete", 16)
    setup = ResonantSetup.from_graph(base, 1, 3, 0.02)
    att = setup.attachment()
    H = att.hamiltonian()
    D = np.eye(H.shape[0])
    D[att.pendant_b - 1, att.pendant_b - 1] = -1.0
    ts = np.linspace(0, 1.5 * resonant_effective(setup).predicted_time, 300)
    f1 = spectral.fidelity(spectral.eigendecompose(H), att.pendant_a, att.pendant_b, ts)
    f2 = spectral.fidelity(spectral.eigendecompose(D @ H @ D), att.pendant_a, att.pendant_b, ts)
    assert np.max(np.abs(f1 - f2)) <= 1e-12


def test_resonant_errors():
    with pytest.raises(DegenerateKernel):
        ResonantSetup.from_graph(graphs.generate("star", 5), 2, 5, 0.02)
    with pytest.raises(ZeroOverlap):
        ResonantSetup.from_graph(graphs.generate("path", 5), 1, 2, 0.02)
    with pytest.raises(InvalidParameters):
        ResonantSetup.from_graph(graphs.generate("path", 4), 1, 4, 0.02)
    setup = ResonantSetup.from_graph(graphs.generate("path", 5), 1, 5, 2.0)
    with pytest.raises(CouplingTooStrong):
        resonant_effective(setup)


def test_asymmetric_overlap_warning():
    g = graphs.jacobi([0, 0, 0], [1.0, 2.0])
    setup = ResonantSetup.from_graph(g, 1, 3, 0.02)
    with pytest.warns(AsymmetricOverlap):
        eff = resonant_effective(setup)
    ra, rb = setup.overlaps
    assert eff.predicted_fidelity == pytest.approx(2 * abs(ra * rb) / (ra**2 + rb**2))
    assert eff.predicted_fidelity == pytest.approx(1 / math.sqrt(1 + eff.gamma**2))


def test_strong_potential_bounds():
    Q, t0 = strong_potential_bounds(2, 3, 5, 0.1)
    assert Q == pytest.approx(16 * math.sqrt(10) * 4)
    assert Q == pytest.approx(202.386, abs=1e-3)
    assert t0 == pytest.approx(2 * math.pi * (Q + 2) ** 2)
    assert strong_potential_bounds(3, 1, 4, 0.2)[1] == pytest.approx(2 * math.pi)
    Q1, _ = strong_potential_bounds(2, 3, 5, 1 - 1e-12)
    assert Q1 == pytest.approx(16 * 2**2, rel=1e-9)
    Qi, _ = strong_potential_bounds(2, 4, math.inf, 0.1)
    assert Qi == pytest.approx(16 / 0.1**0.5 * 2**1.5)
    for bad in ((0, 1, 1, 0.1), (2, 3, 2, 0.1), (2, 3, 5, 1.0), (2, 3, 5, 0.0)):
        with pytest.raises(InvalidParameters):
            strong_potential_bounds(*bad)


def test_strong_potential_exponent_identity():
    Q, t_a = strong_potential_bounds(2, 3, math.inf, 0.1)
    _, t_b = strong_potential_bounds(2, 5, math.inf, 0.1)
    assert t_b / (2 * math.pi) == pytest.approx((t_a / (2 * math.pi)) ** 2, rel=1e-12)


def test_weak_versus_strong_growth():
    Ns = [6, 10, 14, 18]
    weak, strong = [], []
    for N in Ns:
        base = graphs.generate("path", N)
        sd = spectral.eigendecompose(base)
        att = TrexAttachment(base, 1, N, 0.25 * sd.min_abs())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            weak.append(trex_effective(att).predicted_time)
        strong.append(strong_potential_bounds(2, N - 1, math.inf, 0.1)[1])
    slope = np.polyfit(np.log(Ns), np.log(weak), 1)[0]
    assert slope <= 2.5
    # log t0 is linear in the distance
    ratios = np.diff(np.log(strong)) / np.diff(Ns)
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_rows_to_csv_format():
    text = rows_to_csv(["a", "b"], [[1, 0.1], ["x", 1 / 3]], ["k=v"])
    assert text == "# k=v\na,b\n1,0.10000000000000001\nx,0.33333333333333331\n"
