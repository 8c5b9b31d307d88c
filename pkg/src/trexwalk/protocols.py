"""Transfer protocols: build an attachment, predict, simulate, compare.

Two routes lead to a prediction.  A nonsingular base goes through the 2x2
Feshbach-Schur effective Hamiltonian; a base with a simple zero eigenvalue
goes through the 3x3 resonant Hamiltonian in the {a, rho, b} basis, where rho
is the kernel vector.  :func:`run_transfer` picks the route automatically.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import spectral
from .errors import (
    AsymmetricOverlap,
    CouplingTooStrong,
    DegenerateKernel,
    InvalidParameters,
    InvalidVertex,
    SingularBase,
    ZeroOverlap,
)
from .feshbach import EffectiveHamiltonian, TrexAttachment, trex_effective
from .graphs import WeightedGraph

HORIZON_FACTOR = 1.5
GRID_POINTS = 2000
FIDELITY_SLACK = 0.05
KERNEL_SIGN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TransferReport:
    predicted_time: float
    predicted_fidelity: float
    measured_peak_time: float
    measured_peak_fidelity: float
    time_ratio: float
    trace: spectral.FidelityTrace
    route: str = "feshbach"
    effective: Optional[EffectiveHamiltonian] = None

    @property
    def transfer_probability(self) -> float:
        """Squared peak amplitude |<b|exp(-iHt)|a>|^2."""
        return self.measured_peak_fidelity**2

    def meets_prediction(self, slack: float = FIDELITY_SLACK) -> bool:
        return self.measured_peak_fidelity >= self.predicted_fidelity - slack

    def to_dict(self) -> dict:
        return {
            "route": self.route,
            "predicted_time": self.predicted_time,
            "predicted_fidelity": self.predicted_fidelity,
            "measured_peak_time": self.measured_peak_time,
            "measured_peak_fidelity": self.measured_peak_fidelity,
            "time_ratio": self.time_ratio,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _simulate(H, a: int, b: int, predicted_time: float, horizon_factor: float,
              grid_points: int, refine: bool = True):
    if not horizon_factor > 0:
        raise InvalidParameters("horizon_factor must be positive")
    sd = spectral.eigendecompose(H)
    grid = np.linspace(0.0, horizon_factor * predicted_time, grid_points)
    return spectral.fidelity_trace(sd, a, b, grid, refine=refine)


def _report(eff: EffectiveHamiltonian, trace, route) -> TransferReport:
    return TransferReport(
        predicted_time=eff.predicted_time,
        predicted_fidelity=eff.predicted_fidelity,
        measured_peak_time=trace.peak_time,
        measured_peak_fidelity=min(trace.peak_value, 1.0),
        time_ratio=trace.peak_time / eff.predicted_time,
        trace=trace,
        route=route,
        effective=eff,
    )


# -- resonant route ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResonantSetup:
    """Singular base with a simple kernel vector ``rho``.

    Pendant edges of weight ``eps * gap`` are hung on alpha and beta, where
    ``gap`` is the smallest nonzero |eigenvalue| of the base.
    """

    base: WeightedGraph
    rho: np.ndarray
    alpha: int
    beta: int
    eps: float
    gap: float

    def __post_init__(self):
        n = self.base.order
        for v in (self.alpha, self.beta):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 1 <= v <= n:
                raise InvalidVertex(f"vertex {v!r} is not in 1..{n}")
        if self.alpha == self.beta:
            raise InvalidParameters("alpha and beta must differ")
        if not self.eps > 0:
            raise InvalidParameters("eps must be positive")
        if np.linalg.norm(self.base.matrix @ self.rho) > 1e-9 * max(1.0, np.linalg.norm(self.base.matrix, 2)):
            raise DegenerateKernel("rho is not in the kernel of the base")
        if abs(self.rho[self.alpha - 1]) < 1e-12 or abs(self.rho[self.beta - 1]) < 1e-12:
            raise ZeroOverlap("kernel vector vanishes on an attachment vertex")

    @classmethod
    def from_graph(cls, base, alpha: int, beta: int, eps: float) -> "ResonantSetup":
        if not isinstance(base, WeightedGraph):
            base = WeightedGraph.from_matrix(base)
        sd = spectral.eigendecompose(base.matrix)
        absl = np.abs(sd.eigenvalues)
        zero = absl <= spectral.SINGULAR_TOL * max(sd.source_norm, 1e-300)
        if zero.sum() == 0:
            raise InvalidParameters("base is nonsingular; use the Feshbach route")
        if zero.sum() > 1:
            raise DegenerateKernel(f"zero eigenvalue has multiplicity {int(zero.sum())}")
        rho = sd.eigenvectors[:, np.argmax(zero)].copy()
        for v in (alpha, beta):
            if not 1 <= v <= base.order:
                raise InvalidVertex(f"vertex {v!r} is not in 1..{base.order}")
        if rho[alpha - 1] < 0:
            rho = -rho
        return cls(base, rho, alpha, beta, eps, float(absl[~zero].min()))

    @property
    def overlaps(self) -> tuple[float, float]:
        return float(self.rho[self.alpha - 1]), float(self.rho[self.beta - 1])

    @property
    def pendant_weight(self) -> float:
        return self.eps * self.gap

    def attachment(self) -> TrexAttachment:
        return TrexAttachment(self.base, self.alpha, self.beta, self.pendant_weight)


def resonant_effective(setup: ResonantSetup, force: bool = False) -> EffectiveHamiltonian:
    """eps*gap * tridiag(<alpha|rho>, <beta|rho>) in the {a, rho, b} basis.

    The walk a -> b has period-half pi / Omega with
    Omega = eps*gap*sqrt(ra^2 + rb^2) and amplitude 2|ra rb| / (ra^2 + rb^2).
    ``gamma`` is the value for which 1/sqrt(1+gamma^2) equals that amplitude.
    """
    if setup.eps >= 1 and not force:
        raise CouplingTooStrong(f"eps = {setup.eps} >= 1")
    ra, rb = setup.overlaps
    if abs(abs(ra) - abs(rb)) > KERNEL_SIGN_TOL:
        warnings.warn(f"|<alpha|rho>| = {abs(ra):.6g} differs from |<beta|rho>| = {abs(rb):.6g}",
                      AsymmetricOverlap, stacklevel=2)
    w = setup.pendant_weight
    matrix = w * np.array([[0.0, ra, 0.0], [ra, 0.0, rb], [0.0, rb, 0.0]])
    omega = w * math.hypot(ra, rb)
    gamma = abs(ra * ra - rb * rb) / (2 * abs(ra * rb))
    return EffectiveHamiltonian(
        matrix=matrix,
        gamma=gamma,
        omega0=omega,
        predicted_time=math.pi / omega,
        predicted_fidelity=2 * abs(ra * rb) / (ra * ra + rb * rb),
        route="resonant",
        coupling_strength=setup.eps,
        extras={"gap": setup.gap, "overlaps": (ra, rb)},
    )


def run_resonant(setup: ResonantSetup, horizon_factor: float = HORIZON_FACTOR,
                 grid_points: int = GRID_POINTS, force: bool = False) -> TransferReport:
    eff = resonant_effective(setup, force=force)
    att = setup.attachment()
    trace = _simulate(att.hamiltonian(), att.pendant_a, att.pendant_b, eff.predicted_time,
                      horizon_factor, grid_points)
    return _report(eff, trace, "resonant")


# -- dispatch -----------------------------------------------------------------

def predict(att: TrexAttachment, force: bool = False):
    """Effective Hamiltonian for ``att`` on whichever route applies.

    A singular base is reinterpreted as a resonant setup whose pendant weight
    equals ``att.delta``.
    """
    try:
        return trex_effective(att, force=force), None
    except SingularBase:
        sd = spectral.eigendecompose(att.base.matrix)
        nonzero = np.abs(sd.eigenvalues)
        gap = nonzero[nonzero > spectral.SINGULAR_TOL * sd.source_norm].min()
        setup = ResonantSetup.from_graph(att.base, att.alpha, att.beta, att.delta / gap)
        return resonant_effective(setup, force=force), setup


def run_transfer(att: TrexAttachment, horizon_factor: float = HORIZON_FACTOR,
                 grid_points: int = GRID_POINTS, force: bool = False) -> TransferReport:
    """Simulate pendant a -> pendant b and compare with the route's prediction."""
    eff, _ = predict(att, force=force)
    trace = _simulate(att.hamiltonian(), att.pendant_a, att.pendant_b, eff.predicted_time,
                      horizon_factor, grid_points)
    return _report(eff, trace, eff.route)


def effective_amplitudes(eff: EffectiveHamiltonian, t_grid) -> np.ndarray:
    """|<b|exp(-ith)|a>| for the reduced Hamiltonian (a first, b last)."""
    sd = spectral.eigendecompose(eff.matrix)
    k = eff.matrix.shape[0]
    return np.abs(spectral.amplitudes(sd, 1, k, t_grid))


def effective_vs_full(att: TrexAttachment, t_grid, force: bool = False) -> float:
    """max_t | |<b|e^{-itH}|a>| - |<b|e^{-ith}|a>| | over ``t_grid``."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    eff, _ = predict(att, force=force)
    sd = spectral.eigendecompose(att.hamiltonian())
    full = np.abs(spectral.amplitudes(sd, att.pendant_a, att.pendant_b, t_grid))
    return float(np.max(np.abs(full - effective_amplitudes(eff, t_grid))))


# -- strong-potential comparison ---------------------------------------------

def strong_potential_bounds(m: int, d: int, c, eps: float) -> tuple[float, float]:
    """Loop weight Q and transfer time bound t0 for the strong-potential method.

    ``m`` is the maximum degree, ``d`` the distance between the endpoints and
    ``c`` their cospectrality (``math.inf`` allowed).
    """
    if m < 1 or d < 1:
        raise InvalidParameters("m and d must be positive")
    if not c >= d:
        raise InvalidParameters("cospectrality c must be at least the distance d")
    if not 0 < eps < 1:
        raise InvalidParameters("eps must lie in (0, 1)")
    span = c - d + 1
    alpha = min(2.0, span)
    beta = max(0.5, d / span)
    Q = 16.0 / eps ** (1.0 / alpha) * m ** (1.0 + beta)
    t0 = 2 * math.pi * (Q + m) ** (d - 1)
    return Q, t0


COMPARISON_COLUMNS = ["family", "N", "delta", "predicted_time", "measured_time",
                      "predicted_fidelity", "measured_fidelity"]


def comparison_row(family: str, N: int, delta: float, report: TransferReport) -> list:
    return [family, N, delta, report.predicted_time, report.measured_peak_time,
            report.predicted_fidelity, report.measured_peak_fidelity]


def format_float(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def rows_to_csv(columns, rows, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_float(x) for x in row])
    return buf.getvalue()
