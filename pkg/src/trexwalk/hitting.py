"""Classical hitting and commute times, quantum hitting times, scaling fits.

Classical quantities are for the discrete-time walk that steps along an edge
with probability proportional to its weight.  The quantum hitting time is the
first time the pendant-to-pendant transfer probability |<b|e^{-iHt}|a>|^2
reaches a threshold rho.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import spectral
from .errors import Disconnected, InsufficientData, InvalidParameters, InvalidWeight
from .feshbach import TrexAttachment
from .graphs import FamilyKind, WeightedGraph, as_kind, endpoints, generate, quotient
from .protocols import GRID_POINTS, HORIZON_FACTOR, ResonantSetup, predict, resonant_effective

RHO_DEFAULT = 0.9
EPS_DEFAULT = 0.05
COUPLING_BUDGET = 0.25


# -- classical ----------------------------------------------------------------

def transition_matrix(g: WeightedGraph) -> np.ndarray:
    A = g.weights + np.diag(g.loops)
    if np.any(A < 0):
        raise InvalidWeight("random walk needs nonnegative weights")
    if not g.is_connected():
        raise Disconnected("graph is not connected")
    deg = A.sum(axis=1)
    return A / deg[:, None]


def stationary(g: WeightedGraph) -> np.ndarray:
    deg = (g.weights + np.diag(g.loops)).sum(axis=1)
    return deg / deg.sum()


def expected_hitting_times(g: WeightedGraph) -> np.ndarray:
    """E[a, b] = expected steps from a to first reach b (0-based array indices)."""
    P = transition_matrix(g)
    n = P.shape[0]
    E = np.zeros((n, n))
    for b in range(n):
        keep = np.arange(n) != b
        M = np.eye(n - 1) - P[np.ix_(keep, keep)]
        E[keep, b] = np.linalg.solve(M, np.ones(n - 1))
    return E


def hitting_times_fundamental(g: WeightedGraph) -> np.ndarray:
    """Same matrix from the fundamental matrix Z = (I - P + 1 pi^T)^{-1}."""
    P = transition_matrix(g)
    pi = stationary(g)
    n = P.shape[0]
    Z = np.linalg.inv(np.eye(n) - P + np.outer(np.ones(n), pi))
    E = (np.diag(Z)[None, :] - Z) / pi[None, :]
    np.fill_diagonal(E, 0.0)
    return E


def _hitting(g, method):
    if method == "solve":
        return expected_hitting_times(g)
    if method == "fundamental":
        return hitting_times_fundamental(g)
    if method == "auto":
        return expected_hitting_times(g) if g.order <= 150 else hitting_times_fundamental(g)
    raise InvalidParameters(f"unknown method {method!r}")


def average_hitting_time(g: WeightedGraph, method: str = "auto", E=None) -> float:
    """sum_{a,b} pi_a pi_b E_a[T_b]."""
    E = _hitting(g, method) if E is None else E
    pi = stationary(g)
    return float(pi @ E @ pi)


def commute_times(g: WeightedGraph, method: str = "auto", E=None) -> np.ndarray:
    E = _hitting(g, method) if E is None else E
    return E + E.T


def max_commute_time(g: WeightedGraph, method: str = "auto", E=None) -> float:
    return float(np.max(commute_times(g, method, E)))


def _alias_tables(P: np.ndarray):
    """Walker alias tables, one row per vertex, for O(1) sampling of the next step."""
    n = P.shape[0]
    keep = np.ones((n, n))
    alias = np.tile(np.arange(n), (n, 1))
    for i in range(n):
        q = P[i] * n
        small = [j for j in range(n) if q[j] < 1.0]
        large = [j for j in range(n) if q[j] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            keep[i, s], alias[i, s] = q[s], l
            q[l] -= 1.0 - q[s]
            (small if q[l] < 1.0 else large).append(l)
        # leftovers are 1 up to rounding
        for j in small + large:
            keep[i, j] = 1.0
    return keep, alias


def monte_carlo_hitting(g: WeightedGraph, walks: int = 100_000, seed: int = 0,
                        max_steps: int = 1_000_000, starts=None):
    """Sample mean and standard error of E_a[T_b] from simulated walks.

    From each start a, ``walks`` independent walks run until every vertex
    has been visited; the first visit step of each target is recorded.
    ``starts`` (1-based) limits the simulated rows; the others are NaN.
    """
    P = transition_matrix(g)
    n = P.shape[0]
    keep_prob, alias = _alias_tables(P)
    rng = np.random.default_rng(seed)
    mean = np.full((n, n), np.nan)
    sem = np.full((n, n), np.nan)
    rows = range(n) if starts is None else [int(v) - 1 for v in starts]
    for a in rows:
        if not 0 <= a < n:
            raise InvalidParameters(f"start {a + 1} is not in 1..{n}")
        first = np.full((walks, n), -1, dtype=np.int64)
        first[:, a] = 0
        # only walks that still have unvisited vertices are stepped
        live = np.arange(walks)
        pos = np.full(walks, a)
        left = np.full(walks, n - 1)
        step = 0
        while live.size:
            step += 1
            if step > max_steps:
                raise InvalidParameters("walks did not cover the graph within max_steps")
            u = rng.random(live.size) * n
            col = u.astype(np.intp)
            stay = (u - col) < keep_prob[pos, col]
            pos = np.where(stay, col, alias[pos, col])
            new = first[live, pos] < 0
            first[live[new], pos[new]] = step
            left -= new
            keep = left > 0
            live, pos, left = live[keep], pos[keep], left[keep]
        mean[a] = first.mean(axis=0)
        sem[a] = first.std(axis=0, ddof=1) / math.sqrt(walks)
    return mean, sem


# -- quantum ------------------------------------------------------------------

def first_crossing(sd: spectral.SpectralData, a: int, b: int, rho: float, horizon: float,
                   grid_points: int = GRID_POINTS) -> float:
    """Smallest t in [0, horizon] with |<b|e^{-iHt}|a>|^2 >= rho, or +inf."""
    if not 0 < rho < 1:
        raise InvalidParameters("rho must lie in (0, 1)")
    grid = np.linspace(0.0, horizon, grid_points)
    prob = np.abs(spectral.amplitudes(sd, a, b, grid)) ** 2
    hit = np.nonzero(prob >= rho)[0]
    if hit.size == 0:
        return math.inf
    k = int(hit[0])
    if k == 0:
        return 0.0

    def excess(t):
        return spectral.fidelity(sd, a, b, t) ** 2 - rho

    return float(brentq(excess, grid[k - 1], grid[k], xtol=1e-12 * max(1.0, grid[k]), rtol=1e-12))


def quantum_hitting_time(att, rho_threshold: float = RHO_DEFAULT,
                         horizon_factor: float = HORIZON_FACTOR,
                         grid_points: int = GRID_POINTS, force: bool = False):
    """(tau_Q, predicted_time) for a TrexAttachment or a ResonantSetup."""
    if isinstance(att, ResonantSetup):
        eff = resonant_effective(att, force=force)
        att = att.attachment()
    else:
        eff, _ = predict(att, force=force)
    sd = spectral.eigendecompose(att.hamiltonian())
    tau = first_crossing(sd, att.pendant_a, att.pendant_b, rho_threshold,
                         horizon_factor * eff.predicted_time, grid_points)
    return tau, eff.predicted_time


def bare_hitting_time(H, a: int, b: int, rho_threshold: float, horizon: float,
                      grid_points: int = GRID_POINTS) -> float:
    return first_crossing(spectral.eigendecompose(H), a, b, rho_threshold, horizon, grid_points)


# -- scaling ------------------------------------------------------------------

def family_instance(kind, N: int):
    """(base, alpha, beta, route) used for the quantum hitting time of a family.

    path, rook and the generic fallback use the raw adjacency matrix; cycle
    uses its antipodal quotient; complete uses the clique quotient divided
    by sqrt(N-2); barbell uses its quotient divided by N.
    """
    kind = as_kind(kind)
    if kind is FamilyKind.CYCLE:
        base = quotient(kind, N)
        return base, 1, base.order
    if kind is FamilyKind.COMPLETE:
        base = quotient(kind, N).scaled(1.0 / math.sqrt(N - 2))
        return base, 1, 3
    if kind is FamilyKind.BARBELL:
        base = quotient(kind, N).scaled(1.0 / N)
        return base, 1, base.order
    base = generate(kind, N)
    a, b = endpoints(kind, N)
    return base, a, b


def instance_attachment(kind, N: int, delta: Optional[float], eps: float = EPS_DEFAULT):
    """TrexAttachment or ResonantSetup for one family member.

    A singular base uses the resonant route with fixed ``eps``; otherwise the
    Feshbach route with pendant weight ``delta``.
    """
    base, a, b = family_instance(kind, N)
    sd = spectral.eigendecompose(base.matrix)
    if sd.is_singular():
        return ResonantSetup.from_graph(base, a, b, eps)
    if delta is None:
        delta = COUPLING_BUDGET * sd.min_abs()
    return TrexAttachment(base, a, b, delta)


def default_delta(kind, sizes) -> Optional[float]:
    """Fixed delta with delta * kappa <= 0.25 at the largest nonsingular size."""
    for N in sorted(sizes, reverse=True):
        base, _, _ = family_instance(kind, N)
        sd = spectral.eigendecompose(base.matrix)
        if not sd.is_singular():
            return COUPLING_BUDGET * sd.min_abs()
    return None


@dataclass(frozen=True)
class ScalingResult:
    family: str
    sizes: tuple
    times: tuple
    predicted: tuple
    slope: float
    residual: float
    predicted_slope: float
    delta: Optional[float]
    eps: float
    rho: float

    def to_dict(self) -> dict:
        return {"family": self.family, "slope": self.slope, "residual": self.residual,
                "points": [[int(N), float(t)] for N, t in zip(self.sizes, self.times)]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def loglog_slope(sizes, times):
    x, y = np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float))
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(math.sqrt(res[0] / len(x))) if res.size else 0.0
    return float(coef[0]), resid


def scaling_fit(family, sizes: Sequence[int], delta: Optional[float] = None,
                rho_threshold: float = RHO_DEFAULT, eps: float = EPS_DEFAULT,
                horizon_factor: float = HORIZON_FACTOR, grid_points: int = GRID_POINTS,
                time_fn=None) -> ScalingResult:
    """Least-squares slope of log tau_Q against log N at a fixed coupling rule."""
    kind = as_kind(family)
    sizes = [int(N) for N in sizes]
    if len(sizes) < 4 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InsufficientData("need at least 4 strictly increasing sizes")
    if delta is None:
        delta = default_delta(kind, sizes)
    run = time_fn or (lambda N: quantum_hitting_time(instance_attachment(kind, N, delta, eps),
                                                     rho_threshold, horizon_factor, grid_points))
    pairs = [run(N) for N in sizes]
    times = [p[0] for p in pairs]
    preds = [p[1] for p in pairs]
    if not all(math.isfinite(t) and t > 0 for t in times):
        raise InsufficientData("threshold not reached for every size")
    slope, resid = loglog_slope(sizes, times)
    pslope, _ = loglog_slope(sizes, preds)
    return ScalingResult(kind.value, tuple(sizes), tuple(times), tuple(preds), slope, resid,
                         pslope, delta, eps, rho_threshold)


@dataclass(frozen=True, eq=False)
class HittingReport:
    family: FamilyKind
    sizes: np.ndarray
    tau_star: np.ndarray
    tau_0: np.ndarray
    tau_Q: np.ndarray
    rho_threshold: float
    delta: Optional[float]
    fitted_exponents: dict = field(default_factory=dict)

    def rows(self):
        for N, ts, t0, tq in zip(self.sizes, self.tau_star, self.tau_0, self.tau_Q):
            yield [self.family.value, int(N), float(ts), float(t0), float(tq),
                   math.nan if self.delta is None else float(self.delta), self.rho_threshold]


HITTING_COLUMNS = ["family", "N", "tau_star", "tau_0", "tau_Q", "delta", "rho"]


def hitting_report(family, sizes, delta: Optional[float] = None,
                   rho_threshold: float = RHO_DEFAULT, eps: float = EPS_DEFAULT,
                   horizon_factor: float = HORIZON_FACTOR) -> HittingReport:
    kind = as_kind(family)
    sizes = [int(N) for N in sizes]
    if delta is None:
        delta = default_delta(kind, sizes)
    ts, t0, tq = [], [], []
    for N in sizes:
        g = generate(kind, N)
        E = _hitting(g, "auto")
        ts.append(max_commute_time(g, E=E))
        t0.append(average_hitting_time(g, E=E))
        tq.append(quantum_hitting_time(instance_attachment(kind, N, delta, eps),
                                       rho_threshold, horizon_factor)[0])
    exps = {}
    if len(sizes) >= 2:
        for label, vals in (("tau_star", ts), ("tau_0", t0), ("tau_Q", tq)):
            if all(math.isfinite(v) and v > 0 for v in vals):
                exps[label] = loglog_slope(sizes, vals)[0]
    return HittingReport(kind, np.array(sizes), np.array(ts), np.array(t0), np.array(tq),
                         rho_threshold, delta, exps)


# -- search -------------------------------------------------------------------

def edge_oracle_search(g: WeightedGraph, oracle_v: int, probe_v: int, delta: float,
                       rho_threshold: float = RHO_DEFAULT,
                       horizon_factor: float = HORIZON_FACTOR, force: bool = False):
    """(success, time) for pendant-to-pendant transfer between oracle and probe.

    The caller asserts that ``g`` is vertex-transitive, so the result does not
    depend on where the oracle sits.  Equal placement succeeds at time 0.
    """
    if oracle_v == probe_v:
        if not 1 <= oracle_v <= g.order:
            raise InvalidParameters(f"vertex {oracle_v} is not in 1..{g.order}")
        return True, 0.0
    att = TrexAttachment(g, probe_v, oracle_v, delta)
    tau, _ = quantum_hitting_time(att, rho_threshold, horizon_factor, force=force)
    return math.isfinite(tau), tau
