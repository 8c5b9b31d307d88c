"""Exact symmetric eigendecomposition and what is built on it.

Propagators, fidelity traces and resolvents are all evaluated from one
:class:`SpectralData`, never by series expansion, so unitarity holds to the
orthogonality error of the eigenvectors.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    DimensionMismatch,
    EmptyGrid,
    InvalidVertex,
    NotSymmetric,
    OnSpectrum,
    Singular,
    ZeroMatrix,
)

SINGULAR_TOL = 1e-10
RESOLVENT_TOL = 1e-8
SYMMETRY_TOL = 1e-12
PEAK_RTOL = 1e-6


def _as_matrix(H) -> np.ndarray:
    if hasattr(H, "matrix") and not isinstance(H, np.ndarray):
        H = H.matrix
    return np.asarray(H, dtype=float)


@dataclass(frozen=True, eq=False)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_norm: float

    @property
    def order(self) -> int:
        return self.eigenvalues.shape[0]

    def min_abs(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    def is_singular(self) -> bool:
        return self.min_abs() <= SINGULAR_TOL * max(self.source_norm, 1e-300)

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def eigendecompose(H) -> SpectralData:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix.

    Accepts a numpy array or anything with a ``matrix`` attribute
    (e.g. :class:`~trexwalk.graphs.WeightedGraph`).
    """
    H = _as_matrix(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {H.shape}")
    scale = max(np.max(np.abs(H)) if H.size else 0.0, 1.0)
    if np.max(np.abs(H - H.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric")
    lam, V = np.linalg.eigh((H + H.T) / 2)
    norm = float(np.max(np.abs(lam))) if lam.size else 0.0
    lam.flags.writeable = False
    V.flags.writeable = False
    return SpectralData(lam, V, norm)


def normalize(H):
    """Return ``(H / ||H||, ||H||)`` for the spectral norm."""
    H = _as_matrix(H)
    scale = float(np.linalg.norm(H, 2))
    if scale == 0.0:
        raise ZeroMatrix("cannot normalize the zero matrix")
    return H / scale, scale


def condition_number(sd: SpectralData) -> float:
    """kappa = max|lambda| / min|lambda|."""
    absl = np.abs(sd.eigenvalues)
    lo = absl.min()
    if lo <= SINGULAR_TOL * sd.source_norm or lo == 0.0:
        raise Singular(f"matrix is singular (min |eigenvalue| = {lo:.3g})")
    return float(absl.max() / lo)


def basis(n: int, v: int) -> np.ndarray:
    """Characteristic vector of vertex ``v`` (1-based)."""
    e = np.zeros(n)
    e[v - 1] = 1.0
    return e


def propagate(sd: SpectralData, state, t: float) -> np.ndarray:
    """exp(-iHt) applied to ``state``."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (sd.order,):
        raise DimensionMismatch(f"state has shape {state.shape}, expected ({sd.order},)")
    V = sd.eigenvectors
    coeffs = V.T @ state
    return V @ (np.exp(-1j * sd.eigenvalues * t) * coeffs)


def _check_vertex(sd, v) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 1 <= v <= sd.order:
        raise InvalidVertex(f"vertex {v!r} is not in 1..{sd.order}")
    return int(v) - 1


def amplitudes(sd: SpectralData, a: int, b: int, times) -> np.ndarray:
    """<b|exp(-iHt)|a> over an array of times (1-based vertices)."""
    i, j = _check_vertex(sd, a), _check_vertex(sd, b)
    w = sd.eigenvectors[i] * sd.eigenvectors[j]
    keep = np.abs(w) > 0
    lam, w = sd.eigenvalues[keep], w[keep]
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty(times.shape[0], dtype=complex)
    step = max(1, 2_000_000 // max(lam.size, 1))
    for s in range(0, times.shape[0], step):
        out[s:s + step] = np.exp(-1j * np.outer(times[s:s + step], lam)) @ w
    return out


def fidelity(sd: SpectralData, a: int, b: int, t):
    """|<b|exp(-iHt)|a>|; scalar in, scalar out."""
    vals = np.abs(amplitudes(sd, a, b, t))
    return float(vals[0]) if np.ndim(t) == 0 else vals


@dataclass(frozen=True, eq=False)
class FidelityTrace:
    times: np.ndarray
    values: np.ndarray
    peak_time: float
    peak_value: float

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "fidelity"])
        for t, f in zip(self.times, self.values):
            w.writerow([f"{t:.17g}", f"{f:.17g}"])
        buf.write(f"# peak_time={self.peak_time:.17g}\n")
        buf.write(f"# peak_value={self.peak_value:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FidelityTrace":
        rows, meta = [], {}
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key in ("peak_time", "peak_value"):
                    meta[key] = float(val)
                continue
            if line.startswith("t,") or not line.strip():
                continue
            t, f = line.split(",")
            rows.append((float(t), float(f)))
        arr = np.array(rows).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], meta["peak_time"], meta["peak_value"])


def refine_peak(func, times, values, index):
    """Golden-section refinement of a grid maximum at ``times[index]``."""
    t, f = float(times[index]), float(values[index])
    if index == 0 or index == len(times) - 1:
        return t, f
    lo, hi = float(times[index - 1]), float(times[index + 1])
    if not (values[index - 1] <= f and values[index + 1] <= f) or hi <= lo:
        return t, f
    neg = lambda x: -func(x)  # noqa: E731
    try:
        if neg(t) < min(neg(lo), neg(hi)):
            x = optimize.golden(neg, brack=(lo, t, hi), tol=PEAK_RTOL)
        else:
            x = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                         options={"xatol": PEAK_RTOL * max(abs(t), 1.0)}).x
    except (ValueError, RuntimeError):
        return t, f
    fx = func(x)
    return (float(x), float(fx)) if fx > f else (t, f)


def fidelity_trace(sd: SpectralData, a: int, b: int, t_grid, refine: bool = True) -> FidelityTrace:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise EmptyGrid("time grid is empty")
    if np.any(np.diff(t_grid) < 0):
        raise EmptyGrid("time grid must be ascending")
    vals = np.abs(amplitudes(sd, a, b, t_grid))
    k = int(np.argmax(vals))
    if refine:
        pt, pv = refine_peak(lambda x: fidelity(sd, a, b, x), t_grid, vals, k)
    else:
        pt, pv = float(t_grid[k]), float(vals[k])
    vals.flags.writeable = False
    return FidelityTrace(t_grid, vals, pt, pv)


def _distance_to_spectrum(sd, zeta) -> float:
    return float(np.min(np.abs(sd.eigenvalues - zeta)))


def _check_off_spectrum(sd, zeta):
    dist = _distance_to_spectrum(sd, zeta)
    if dist <= RESOLVENT_TOL * max(sd.source_norm, 1.0):
        raise OnSpectrum(f"zeta={zeta} lies within {dist:.3g} of the spectrum")
    return dist


def resolvent(sd: SpectralData, zeta) -> np.ndarray:
    """(zeta I - H)^{-1} as a dense matrix (complex if zeta is)."""
    _check_off_spectrum(sd, zeta)
    V = sd.eigenvectors
    return (V / (zeta - sd.eigenvalues)) @ V.T


def resolvent_entry(sd: SpectralData, u, v, zeta):
    """<u|(zeta I - H)^{-1}|v> = sum_k <u|v_k><v_k|v> / (zeta - lambda_k)."""
    _check_off_spectrum(sd, zeta)
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (sd.order,) or v.shape != (sd.order,):
        raise DimensionMismatch("vectors must match the matrix order")
    V = sd.eigenvectors
    val = np.sum((u @ V) * (V.T @ v) / (zeta - sd.eigenvalues))
    return complex(val) if np.iscomplexobj(val) else float(val)
