import math

import numpy as np
import pytest

from trexwalk import graphs, spectral
from trexwalk.errors import DimensionMismatch, EmptyGrid, InvalidVertex, NotSymmetric, OnSpectrum, Singular, ZeroMatrix

from conftest import random_symmetric

K2 = graphs.generate("complete", 2)


def test_k2_decomposition():
    sd = spectral.eigendecompose(K2)
    np.testing.assert_allclose(sd.eigenvalues, [-1, 1])
    v = sd.eigenvectors
    np.testing.assert_allclose(np.abs(v), np.full((2, 2), 1 / math.sqrt(2)))
    assert v[0, 0] * v[1, 0] < 0


def test_p3_and_zero():
    np.testing.assert_allclose(spectral.eigendecompose(graphs.generate("path", 3)).eigenvalues,
                               [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-12)
    sd = spectral.eigendecompose(np.zeros((4, 4)))
    assert np.all(sd.eigenvalues == 0)


def test_reconstruction_and_orthogonality(rng):
    for n in (1, 5, 12, 40):
        H = random_symmetric(rng, n)
        sd = spectral.eigendecompose(H)
        assert np.linalg.norm(sd.reconstruct() - H, 2) <= 1e-10 * max(1, np.linalg.norm(H, 2))
        assert np.linalg.norm(sd.eigenvectors.T @ sd.eigenvectors - np.eye(n)) <= 1e-10
        assert np.all(np.diff(sd.eigenvalues) >= 0)


def test_not_symmetric():
    with pytest.raises(NotSymmetric):
        spectral.eigendecompose(np.array([[0.0, 1.0], [0.5, 0.0]]))


def test_normalize():
    _, s = spectral.normalize(graphs.generate("hypercube", 5).matrix)
    assert s == pytest.approx(5)
    _, s = spectral.normalize(graphs.generate("complete", 9).matrix)
    assert s == pytest.approx(8)
    H1, _ = spectral.normalize(graphs.generate("path", 6).matrix)
    H2, s2 = spectral.normalize(H1)
    assert abs(s2 - 1) <= 1e-12 and np.max(np.abs(H2 - H1)) <= 1e-12
    with pytest.raises(ZeroMatrix):
        spectral.normalize(np.zeros((3, 3)))


def test_condition_number():
    assert spectral.condition_number(spectral.eigendecompose(K2)) == pytest.approx(1.0)
    golden = (1 + math.sqrt(5)) / 2
    p4 = spectral.eigendecompose(graphs.generate("path", 4))
    assert spectral.condition_number(p4) == pytest.approx(golden**2, rel=1e-12)
    with pytest.raises(Singular):
        spectral.condition_number(spectral.eigendecompose(graphs.generate("path", 3)))


def test_propagate_k2():
    sd = spectral.eigendecompose(K2)
    e1 = spectral.basis(2, 1)
    np.testing.assert_allclose(spectral.propagate(sd, e1, 0.0), e1)
    np.testing.assert_allclose(spectral.propagate(sd, e1, math.pi / 2), [0, -1j], atol=1e-12)
    with pytest.raises(DimensionMismatch):
        spectral.propagate(sd, np.ones(3), 1.0)


def test_propagate_unitary_and_group_law(rng):
    H = random_symmetric(rng, 9)
    sd = spectral.eigendecompose(H)
    psi = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    psi /= np.linalg.norm(psi)
    for t in (0.3, 7.0, 1234.5):
        assert abs(np.linalg.norm(spectral.propagate(sd, psi, t)) - 1) <= 1e-10
    s, t = 0.7, 2.9
    two = spectral.propagate(sd, spectral.propagate(sd, psi, s), t)
    assert np.max(np.abs(two - spectral.propagate(sd, psi, s + t))) <= 1e-9


def test_k2_fidelity_closed_form():
    sd = spectral.eigendecompose(K2)
    ts = np.linspace(0, 10, 101)
    np.testing.assert_allclose(spectral.fidelity(sd, 1, 2, ts), np.abs(np.sin(ts)), atol=1e-12)
    assert spectral.fidelity(sd, 1, 1, 0.0) == pytest.approx(1.0)
    assert spectral.fidelity(sd, 1, 2, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_fidelity_symmetric(rng):
    sd = spectral.eigendecompose(random_symmetric(rng, 8))
    ts = np.linspace(0, 20, 50)
    assert np.max(np.abs(spectral.fidelity(sd, 2, 7, ts) - spectral.fidelity(sd, 7, 2, ts))) <= 1e-12


def test_trace_peak_refinement():
    sd = spectral.eigendecompose(K2)
    tr = spectral.fidelity_trace(sd, 1, 2, np.linspace(0, 3, 7))
    assert tr.peak_time == pytest.approx(math.pi / 2, rel=1e-6)
    assert tr.peak_value >= tr.values.max()
    assert np.all(tr.values <= 1 + 1e-12)


def test_trace_errors():
    sd = spectral.eigendecompose(K2)
    with pytest.raises(EmptyGrid):
        spectral.fidelity_trace(sd, 1, 2, [])
    with pytest.raises(EmptyGrid):
        spectral.fidelity_trace(sd, 1, 2, [1.0, 0.5])
    with pytest.raises(InvalidVertex):
        spectral.fidelity_trace(sd, 1, 3, [0.0, 1.0])


def test_trace_csv_round_trip():
    sd = spectral.eigendecompose(graphs.generate("path", 5))
    tr = spectral.fidelity_trace(sd, 1, 5, np.linspace(0, 8, 33))
    text = tr.to_csv(["family=path"])
    assert text.splitlines()[0] == "# family=path" and text.splitlines()[1] == "t,fidelity"
    back = spectral.FidelityTrace.from_csv(text)
    np.testing.assert_array_equal(back.times, tr.times)
    np.testing.assert_array_equal(back.values, tr.values)
    assert back.peak_time == tr.peak_time and back.peak_value == tr.peak_value


def test_resolvent_k2():
    sd = spectral.eigendecompose(K2)
    e1, e2 = spectral.basis(2, 1), spectral.basis(2, 2)
    # (2I - X)^{-1} = [[2, 1], [1, 2]] / 3
    assert spectral.resolvent_entry(sd, e1, e2, 2.0) == pytest.approx(1 / 3)
    # R(0) = -A^{-1} = -X
    assert spectral.resolvent_entry(sd, e1, e2, 0.0) == pytest.approx(-1.0)
    with pytest.raises(OnSpectrum):
        spectral.resolvent_entry(sd, e1, e2, 1.0)


def test_resolvent_matches_inverse(rng):
    H = random_symmetric(rng, 7)
    sd = spectral.eigendecompose(H)
    z = 0.37 + 0.2j
    np.testing.assert_allclose(spectral.resolvent(sd, z), np.linalg.inv(z * np.eye(7) - H), atol=1e-10)
