"""Feshbach-Schur reduction onto a degenerate eigenspace.

For ``H = H0 + delta*W`` and an eigenspace ``P0`` of ``H0`` (eigenvalue
``lam0``) the map

    F(lam) = lam0 + delta*W_P0 + delta^2 * W01 (lam - H_P1)^{-1} W10

has ``lam`` as an eigenvalue exactly when ``lam`` is an eigenvalue of ``H``;
the eigenvector is recovered by the lift ``Q(lam)``.  Everything below works
in coordinates: ``P0`` is represented by an orthonormal basis ``U0`` and its
complement by ``U1``.

The pendant-arm specialisation hangs two pendant vertices a, b on vertices alpha,
beta of a base graph; the zero eigenspace of ``base (+) O_2`` is span{a, b}
and ``F(0)`` reduces to a 2x2 matrix of base resolvent entries.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from . import spectral
from .errors import (
    AssumptionViolated,
    CouplingTooStrong,
    DimensionMismatch,
    InvalidParameters,
    InvalidVertex,
    InvalidWeight,
    InverseTooSmall,
    SingularBase,
    SingularRestriction,
    SplitGapWarning,
    WeakCouplingWarning,
    WindowOnSpectrum,
    ZeroCrossCoupling,
)
from .graphs import WeightedGraph

WEAK_COUPLING_CAP = 1.0
WEAK_COUPLING_WARN = 0.25
STRONG_INVERSE_FLOOR = 10.0
LIFT_RESIDUAL_TOL = 1e-8
ASSUMPTION_TOL = 1e-12
EIGVEC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProjectionSplit:
    """Orthonormal basis (columns) of the unperturbed eigenspace N0.

    ``eigenvalue`` is the H0 eigenvalue lam0 on N0.  The complement P1 is
    implicit; :meth:`complement` builds an orthonormal basis for it.
    """

    p0_basis: np.ndarray
    eigenvalue: float = 0.0

    def __post_init__(self):
        U = np.array(self.p0_basis, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        gram = U.T @ U
        if np.max(np.abs(gram - np.eye(U.shape[1]))) > 1e-10:
            raise InvalidParameters("P0 basis columns are not orthonormal")
        U.flags.writeable = False
        object.__setattr__(self, "p0_basis", U)

    @property
    def dim(self) -> int:
        return self.p0_basis.shape[1]

    @property
    def order(self) -> int:
        return self.p0_basis.shape[0]

    @classmethod
    def from_vertices(cls, n: int, vertices, eigenvalue: float = 0.0) -> "ProjectionSplit":
        U = np.zeros((n, len(vertices)))
        for c, v in enumerate(vertices):
            if not 1 <= v <= n:
                raise InvalidVertex(f"vertex {v} is not in 1..{n}")
            U[v - 1, c] = 1.0
        return cls(U, eigenvalue)

    @classmethod
    def eigenspace(cls, H0, eigenvalue: float = 0.0, tol: float = 1e-9) -> "ProjectionSplit":
        sd = spectral.eigendecompose(H0)
        sel = np.abs(sd.eigenvalues - eigenvalue) <= tol * max(sd.source_norm, 1.0)
        if not sel.any():
            raise InvalidParameters(f"{eigenvalue} is not an eigenvalue of H0")
        return cls(sd.eigenvectors[:, sel], eigenvalue)

    def complement(self) -> np.ndarray:
        return null_space(self.p0_basis.T)

    def projector(self) -> np.ndarray:
        return self.p0_basis @ self.p0_basis.T

    def check_eigenspace(self, H0) -> None:
        H0 = np.asarray(H0, dtype=float)
        U = self.p0_basis
        res = np.linalg.norm(H0 @ U - self.eigenvalue * U, axis=0)
        if np.any(res > EIGVEC_TOL * max(1.0, np.linalg.norm(H0, 2))):
            raise InvalidParameters("P0 basis vectors are not eigenvectors of H0 for the stated eigenvalue")


def _restricted_inverse(block: np.ndarray, lam: float, scale: float) -> np.ndarray:
    """(lam - block)^{-1} for a symmetric block, with an on-spectrum check."""
    if block.size == 0:
        return block.copy()
    sd = spectral.eigendecompose(block)
    dist = float(np.min(np.abs(sd.eigenvalues - lam)))
    if dist <= spectral.RESOLVENT_TOL * max(scale, 1.0):
        raise SingularRestriction(f"lam={lam} is within {dist:.3g} of the spectrum of H restricted to P1")
    V = sd.eigenvectors
    return (V / (lam - sd.eigenvalues)) @ V.T


def _check_coupling_form(W, split: ProjectionSplit, U1) -> None:
    U0 = split.p0_basis
    scale = max(1.0, float(np.max(np.abs(W))))
    if abs(split.eigenvalue) > ASSUMPTION_TOL:
        raise AssumptionViolated("zero-eigenvalue", f"lam0 = {split.eigenvalue}, shift H0 first")
    w00 = np.max(np.abs(U0.T @ W @ U0), initial=0.0)
    w11 = np.max(np.abs(U1.T @ W @ U1), initial=0.0)
    if max(w00, w11) > ASSUMPTION_TOL * scale:
        raise AssumptionViolated("off-diagonal", f"|W00| = {w00:.3g}, |W11| = {w11:.3g}")


def feshbach_map(H0, W, delta: float, split: ProjectionSplit, lam: float,
                 require_form: bool = True) -> np.ndarray:
    """F(lam) in the coordinates of ``split.p0_basis`` (a d x d matrix).

    With ``require_form`` the map refuses inputs where W acts inside
    P0 or P1, or lam0 is not zero.  The formula itself is exact without them.
    """
    H0 = np.asarray(H0, dtype=float)
    W = np.asarray(W, dtype=float)
    if H0.shape != W.shape or H0.shape[0] != split.order:
        raise DimensionMismatch("H0, W and the split must share one dimension")
    U0, U1 = split.p0_basis, split.complement()
    if require_form:
        _check_coupling_form(W, split, U1)
    H = H0 + delta * W
    d = split.dim
    if delta == 0:
        return split.eigenvalue * np.eye(d)
    R1 = _restricted_inverse(U1.T @ H @ U1, lam, np.linalg.norm(H, 2))
    W01 = U0.T @ W @ U1
    F = split.eigenvalue * np.eye(d) + delta * (U0.T @ W @ U0) + delta**2 * (W01 @ R1 @ W01.T)
    return (F + F.T) / 2


def feshbach_general(H, split: ProjectionSplit, lam: float) -> np.ndarray:
    """[H + H P1 (lam - H_P1)^{-1} P1 H]_P0 for an arbitrary symmetric H."""
    H = np.asarray(H, dtype=float)
    U0, U1 = split.p0_basis, split.complement()
    R1 = _restricted_inverse(U1.T @ H @ U1, lam, np.linalg.norm(H, 2))
    H01 = U0.T @ H @ U1
    F = U0.T @ H @ U0 + H01 @ R1 @ H01.T
    return (F + F.T) / 2


def lift_eigvec(H0, W, delta: float, split: ProjectionSplit, lam: float, psi) -> np.ndarray:
    """Psi = Q(lam) psi = psi + delta P1 (lam - H_P1)^{-1} W10 psi.

    ``psi`` may be given as d coordinates in the P0 basis or as a full-space
    vector (it is then projected onto P0).
    """
    H0 = np.asarray(H0, dtype=float)
    W = np.asarray(W, dtype=float)
    U0, U1 = split.p0_basis, split.complement()
    psi = np.asarray(psi)
    if psi.shape == (split.dim,):
        c = psi
    elif psi.shape == (split.order,):
        c = U0.T @ psi
    else:
        raise DimensionMismatch(f"psi has shape {psi.shape}")
    H = H0 + delta * W
    R1 = _restricted_inverse(U1.T @ H @ U1, lam, np.linalg.norm(H, 2))
    return U0 @ c + delta * (U1 @ (R1 @ (U1.T @ W @ (U0 @ c))))


def lift_residual(H, Psi, lam: float) -> float:
    H = np.asarray(H, dtype=float)
    return float(np.linalg.norm(H @ Psi - lam * Psi))


def split_eigenpairs(H, split: ProjectionSplit):
    """Eigenpairs of H whose squared P0 overlap exceeds 1/2."""
    sd = spectral.eigendecompose(H)
    U0 = split.p0_basis
    overlap = np.sum((U0.T @ sd.eigenvectors) ** 2, axis=0)
    idx = np.nonzero(overlap > 0.5)[0]
    return sd.eigenvalues[idx], sd.eigenvectors[:, idx]


def fixed_point_residuals(H, split: ProjectionSplit):
    """[(zeta_k, ||F(zeta_k) psi_k - zeta_k psi_k||), ...] for dominant-P0 eigenpairs."""
    zetas, vecs = split_eigenpairs(H, split)
    out = []
    U0 = split.p0_basis
    for z, Psi in zip(zetas, vecs.T):
        c = U0.T @ Psi
        c = c / np.linalg.norm(c)
        F = feshbach_general(H, split, z)
        out.append((float(z), float(np.linalg.norm(F @ c - z * c))))
    return out


def second_order_eigenvalues(H0, W, delta: float, split: ProjectionSplit) -> np.ndarray:
    """lam0 + delta * spec(M), M = W_P0 + delta [W01 R(lam0, (H0)_P1) W10]_P0."""
    H0 = np.asarray(H0, dtype=float)
    W = np.asarray(W, dtype=float)
    U0, U1 = split.p0_basis, split.complement()
    R1 = _restricted_inverse(U1.T @ H0 @ U1, split.eigenvalue, np.linalg.norm(H0, 2))
    W01 = U0.T @ W @ U1
    M = U0.T @ W @ U0 + delta * (W01 @ R1 @ W01.T)
    return np.sort(split.eigenvalue + delta * np.linalg.eigvalsh((M + M.T) / 2))


def perturbative_diagnostics(H0, W, delta: float, split: ProjectionSplit) -> dict:
    """Sizes that the effective-Hamiltonian argument bounds by powers of delta*kappa.

    relative
        max_k ||psi_k^perp|| / ||psi_k||
    orthogonality
        max_{k != l} |<psi~_k|psi~_l>|
    tail
        max over P0 basis states e of the weight of e outside the split
        eigenvectors, 1 - sum_k |<Psi_k|e>|^2
    split_gap
        min |zeta_k - zeta_l| among the split eigenvalues
    """
    H = np.asarray(H0, dtype=float) + delta * np.asarray(W, dtype=float)
    zetas, vecs = split_eigenpairs(H, split)
    U0 = split.p0_basis
    P0 = split.projector()
    rel, normed = [], []
    for Psi in vecs.T:
        psi = P0 @ Psi
        perp = Psi - psi
        rel.append(np.linalg.norm(perp) / np.linalg.norm(psi))
        normed.append(U0.T @ psi / np.linalg.norm(psi))
    normed = np.array(normed).reshape(len(rel), split.dim)
    gram = normed @ normed.T
    off = gram - np.diag(np.diag(gram))
    captured = np.sum((vecs.T @ U0) ** 2, axis=0) if len(rel) else np.zeros(split.dim)
    gaps = np.diff(np.sort(zetas))
    return {
        "count": len(rel),
        "relative": float(max(rel, default=0.0)),
        "orthogonality": float(np.max(np.abs(off), initial=0.0)),
        "tail": float(np.max(1.0 - captured, initial=0.0)),
        "split_gap": float(gaps.min()) if gaps.size else math.inf,
        "eigenvalues": zetas,
    }


def _vector(sd, v) -> np.ndarray:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        if not 1 <= v <= sd.order:
            raise InvalidVertex(f"vertex {v} is not in 1..{sd.order}")
        return spectral.basis(sd.order, int(v))
    v = np.asarray(v, dtype=float)
    if v.shape != (sd.order,):
        raise DimensionMismatch("vector does not match the base order")
    return v


def gamma_cospectrality(base: spectral.SpectralData, alpha, beta,
                        eta: Optional[float] = None, samples: int = 11) -> float:
    """sup over lam in (-eta, eta) of |R_aa(lam) - R_bb(lam)| / |R_ab(lam)|.

    ``alpha``/``beta`` are vertices (1-based) or unit vectors.  The default
    window is half the distance from 0 to the spectrum.  The return value is
    the cospectrality ratio itself; the fidelity parameter gamma of the 2x2
    effective Hamiltonian is half of it.
    """
    if samples < 3:
        raise InvalidParameters("need at least 3 samples")
    d0 = base.min_abs()
    if eta is None:
        eta = d0 / 2
    if eta >= d0:
        raise WindowOnSpectrum(f"window eta={eta} reaches the spectrum (distance {d0:.3g})")
    a, b = _vector(base, alpha), _vector(base, beta)
    worst = 0.0
    for lam in np.linspace(-eta, eta, samples):
        gab = spectral.resolvent_entry(base, a, b, lam)
        if abs(gab) < 1e-14:
            raise ZeroCrossCoupling(f"<alpha|R({lam:.3g})|beta> vanishes")
        gaa = spectral.resolvent_entry(base, a, a, lam)
        gbb = spectral.resolvent_entry(base, b, b, lam)
        worst = max(worst, abs(gaa - gbb) / abs(gab))
    return worst


@dataclass(frozen=True, eq=False)
class TrexAttachment:
    """Base graph plus two pendant vertices hung on alpha and beta.

    Pendant edges carry total weight ``delta``; in ``H = H0 + delta*W`` the
    coupling W has unit entries.  The pendants are appended after the base
    vertices, so ``pendant_a = n+1`` and ``pendant_b = n+2``.
    """

    base: WeightedGraph
    alpha: int
    beta: int
    delta: float

    def __post_init__(self):
        n = self.base.order
        for v in (self.alpha, self.beta):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 1 <= v <= n:
                raise InvalidVertex(f"vertex {v!r} is not in 1..{n}")
        if self.alpha == self.beta:
            raise InvalidParameters("alpha and beta must differ")
        if not self.delta > 0:
            raise InvalidWeight(f"delta must be positive, got {self.delta}")

    @classmethod
    def build(cls, base, alpha: int, beta: int, delta: float, normalize: bool = True) -> "TrexAttachment":
        """Attach to ``base`` (graph or matrix), rescaling it to unit spectral norm first."""
        if not isinstance(base, WeightedGraph):
            base = WeightedGraph.from_matrix(base)
        if normalize:
            _, s = spectral.normalize(base.matrix)
            base = base.scaled(1.0 / s)
        return cls(base, alpha, beta, delta)

    @property
    def pendant_a(self) -> int:
        return self.base.order + 1

    @property
    def pendant_b(self) -> int:
        return self.base.order + 2

    @property
    def order(self) -> int:
        return self.base.order + 2

    def unperturbed(self) -> np.ndarray:
        n = self.base.order
        H0 = np.zeros((n + 2, n + 2))
        H0[:n, :n] = self.base.matrix
        return H0

    def coupling(self) -> np.ndarray:
        n = self.base.order
        W = np.zeros((n + 2, n + 2))
        W[n, self.alpha - 1] = W[self.alpha - 1, n] = 1.0
        W[n + 1, self.beta - 1] = W[self.beta - 1, n + 1] = 1.0
        return W

    def hamiltonian(self) -> np.ndarray:
        return self.unperturbed() + self.delta * self.coupling()

    def split(self) -> ProjectionSplit:
        return ProjectionSplit.from_vertices(self.order, [self.pendant_a, self.pendant_b])


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """Small reduced Hamiltonian and the transfer it predicts.

    For the 2x2 route ``matrix`` is F(0) after subtracting ``shift`` (the mean
    of its diagonal), i.e. delta^2 omega0 (gamma Z +- X).  For the resonant
    3x3 route it is the tridiagonal matrix in the {a, rho, b} basis.
    """

    matrix: np.ndarray
    gamma: float
    omega0: float
    predicted_time: float
    predicted_fidelity: float
    route: str = "feshbach"
    shift: float = 0.0
    gamma_window: Optional[float] = None
    coupling_strength: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "gamma": float(self.gamma),
            "omega0": float(self.omega0),
            "predicted_time": float(self.predicted_time),
            "predicted_fidelity": float(self.predicted_fidelity),
            "matrix": [[float(x) for x in row] for row in np.asarray(self.matrix)],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def coupling_strength(sd: spectral.SpectralData, delta: float) -> float:
    """delta * kappa for a unit-norm base; delta / min|lambda| in general."""
    return delta / sd.min_abs()


def trex_effective(att: TrexAttachment, force: bool = False) -> EffectiveHamiltonian:
    """2x2 effective Hamiltonian F(0) for a nonsingular base.

    Raises :class:`SingularBase` for a singular base and
    :class:`CouplingTooStrong` when delta*kappa >= 1 (unless ``force``).
    """
    sd = spectral.eigendecompose(att.base.matrix)
    if sd.is_singular():
        raise SingularBase("base adjacency matrix is singular; use the resonant route")
    kappa = spectral.condition_number(sd)
    eps = coupling_strength(sd, att.delta)
    if eps >= WEAK_COUPLING_CAP and not force:
        raise CouplingTooStrong(f"delta*kappa = {eps:.3g} >= {WEAK_COUPLING_CAP} (weak-coupling hypothesis)")
    if eps > WEAK_COUPLING_WARN:
        warnings.warn(f"delta*kappa = {eps:.3g} is not small", WeakCouplingWarning, stacklevel=2)

    n = att.base.order
    a, b = spectral.basis(n, att.alpha), spectral.basis(n, att.beta)
    gaa = spectral.resolvent_entry(sd, a, a, 0.0)
    gbb = spectral.resolvent_entry(sd, b, b, 0.0)
    gab = spectral.resolvent_entry(sd, a, b, 0.0)
    omega0 = abs(gab)
    if omega0 < 1e-300:
        raise ZeroCrossCoupling("<alpha|A^-1|beta> vanishes")
    norm = sd.source_norm
    # dimensionless form of |<alpha|A^-1|beta>| >> delta^2 kappa^3 for a unit-norm base
    if omega0 * norm < STRONG_INVERSE_FLOOR * (att.delta / norm) ** 2 * kappa**3:
        warnings.warn("|<alpha|A^-1|beta>| is not >> delta^2 kappa^3", InverseTooSmall, stacklevel=2)

    d2 = att.delta**2
    F0 = d2 * np.array([[gaa, gab], [gab, gbb]])
    shift = float(np.trace(F0) / 2)
    matrix = F0 - shift * np.eye(2)
    gamma = abs(gaa - gbb) / (2 * omega0)
    try:
        gamma_window = gamma_cospectrality(sd, att.alpha, att.beta) / 2
    except ZeroCrossCoupling:
        gamma_window = math.inf
    return EffectiveHamiltonian(
        matrix=matrix,
        gamma=gamma,
        omega0=omega0,
        predicted_time=(math.pi / 2) / (d2 * omega0),
        predicted_fidelity=1.0 / math.sqrt(1.0 + gamma**2),
        route="feshbach",
        shift=shift,
        gamma_window=gamma_window,
        coupling_strength=eps,
        extras={"kappa": kappa},
    )


def check_split_gap(zetas, tol: float = 1e-12) -> float:
    """Smallest spacing of the split eigenvalues; warns when they may coincide."""
    zetas = np.sort(np.asarray(zetas, dtype=float))
    gap = float(np.min(np.diff(zetas))) if zetas.size > 1 else math.inf
    if gap < tol:
        warnings.warn(f"split eigenvalues are not distinct (gap {gap:.3g})", SplitGapWarning, stacklevel=2)
    return gap
