"""Factorization-method reconstruction from a far-field operator.

A point x belongs to the scatterer iff the spectral (Picard) series

    P(x) = sum_k |<phi_x, psi_k>|^2 / |z_k|

stays finite in the continuum; at fixed discretization the dichotomy
becomes a separation ratio, so the indicator reported is the reciprocal of
the normalized series W = sum_k |<phi_x, psi_k>|^2 / P (large inside,
small outside). Screens use the same series with segment-integrated test
functions. The inf-criterion variant bounds inf |<psi, F psi>| over the
leading eigenspace section under the constraint <psi, phi_x> = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import ndimage

from .boundary_ops import DirectionGrid, WaveContext
from .geometry import ProbeSegment, SamplingGrid
from .scattering import FarFieldOperator, normality_defect

INDICATOR_CAP = 1e30
NORMALITY_LIMIT = 1e-2
_RANK_FLOOR = 1e-14
_CHI_SAMPLES = 1440


class InvalidFarFieldError(RuntimeError):
    """Input matrix is too far from normal to be a far-field operator."""


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues and orthonormal eigenvectors of the (normal) operator.

    Eigenvalues are sorted by decreasing modulus; eigenvectors are the
    correspondingly permuted unitary Schur basis, hence exactly orthonormal
    in the weighted inner product. ``residual`` records the normality
    defect of the input at decomposition time.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    residual: float

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    def reconstruction_error(self, matrix: np.ndarray) -> float:
        approx = (self.eigenvectors * self.eigenvalues[None, :]) @ self.eigenvectors.conj().T
        return float(np.linalg.norm(matrix - approx) / np.linalg.norm(matrix))


@dataclass(frozen=True)
class TestFunction:
    """Test function sampled on the direction grid (sqrt-weighted representation)."""

    values: np.ndarray
    kind: str  # "point" | "segment"


@dataclass(frozen=True)
class IndicatorField:
    """Indicator values over a sampling grid, with the spectral cutoff used."""

    grid: SamplingGrid
    values: np.ndarray
    cutoff_used: float
    n_modes_used: int

    def as_rows(self) -> np.ndarray:
        return self.values.reshape(self.grid.ny, self.grid.nx)


def spectral_decompose(F: FarFieldOperator) -> SpectralDecomposition:
    """Unitary Schur decomposition of the weighted far-field matrix.

    Raises InvalidFarFieldError when the normality defect exceeds 1e-2:
    the data cannot come from a scattering scene.
    """
    defect = normality_defect(F)
    if defect > NORMALITY_LIMIT:
        raise InvalidFarFieldError(
            f"normality defect {defect:.3e} exceeds {NORMALITY_LIMIT:g}: "
            "data not a valid far-field operator")
    T, Q = scipy.linalg.schur(F.matrix, output="complex")
    z = np.diag(T).copy()
    order = np.argsort(-np.abs(z), kind="stable")
    return SpectralDecomposition(eigenvalues=z[order], eigenvectors=Q[:, order],
                                 residual=defect)


def point_test_function(x, ctx: WaveContext, dirs: DirectionGrid) -> TestFunction:
    """Plane-wave sampling function of a point: values_j = sqrt(w_j) e^{i k xi_j . x}."""
    x = np.asarray(x, dtype=float)
    vals = np.sqrt(dirs.weights) * np.exp(1j * ctx.k * (dirs.directions @ x))
    return TestFunction(values=vals, kind="point")


def segment_test_function(seg: ProbeSegment, ctx: WaveContext, dirs: DirectionGrid,
                          trace_kind: str = "dirichlet") -> TestFunction:
    """Segment-integrated test function: sqrt(w_j) int_seg e^{i k xi_j . x} ds(x).

    ``trace_kind="neumann"`` weights the integrand by the normal derivative
    along the segment normal (i k xi . nu). Probing a scene whose data
    carries only Neumann traces needs this flavor: on a flat screen the
    far-field range consists of normal-weighted patterns exclusively, so
    the plain segment function never lies in it.
    """
    if trace_kind not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown trace kind {trace_kind!r}")
    if seg.length == 0.0:
        return TestFunction(values=np.zeros(dirs.n_dir, dtype=complex), kind="segment")
    pts, w = seg.quadrature()
    phases = np.exp(1j * ctx.k * (dirs.directions @ pts.T))
    if trace_kind == "neumann":
        d = np.asarray(seg.p1) - np.asarray(seg.p0)
        nu = np.array([d[1], -d[0]]) / seg.length
        phases = (1j * ctx.k * (dirs.directions @ nu))[:, None] * phases
    vals = phases @ w
    return TestFunction(values=np.sqrt(dirs.weights) * vals, kind="segment")


@dataclass(frozen=True)
class PicardResult:
    """Raw Picard series, its normalized form, and the indicator W = 1/normalized."""

    series: float
    normalized: float
    indicator: float
    n_modes: int


def _retained(dec: SpectralDecomposition, cutoff: float) -> np.ndarray:
    if not 0.0 <= cutoff < 1.0:
        raise ValueError("cutoff must satisfy 0 <= cutoff < 1")
    zmax = np.abs(dec.eigenvalues[0])
    keep = np.abs(dec.eigenvalues) >= cutoff * zmax
    if not keep.any():
        raise ValueError("empty spectrum after cutoff")
    return keep


def picard_indicator(dec: SpectralDecomposition, tf: TestFunction,
                     cutoff: float) -> PicardResult:
    """Truncated Picard series of a test function against the decomposition.

    Modes with |z_k| below cutoff * |z_1| are discarded. The indicator is
    capped at 1e30 when the retained projection vanishes.
    """
    keep = _retained(dec, cutoff)
    z = dec.eigenvalues[keep]
    proj = dec.eigenvectors[:, keep].conj().T @ tf.values
    p2 = np.abs(proj) ** 2
    series = float(np.sum(p2 / np.abs(z)))
    denom = float(np.sum(p2))
    if series == 0.0 or denom == 0.0:
        return PicardResult(series=series, normalized=0.0, indicator=INDICATOR_CAP,
                            n_modes=int(keep.sum()))
    normalized = series / denom
    return PicardResult(series=series, normalized=normalized,
                        indicator=min(1.0 / normalized, INDICATOR_CAP),
                        n_modes=int(keep.sum()))


def _inf_section_value(z: np.ndarray, g: np.ndarray) -> float:
    """max over rotations chi of the constrained Lagrange minimum.

    For each chi with all a_k = Re(e^{-i chi} z_k) > 0 the minimum of
    sum_k a_k u_k^2 under sum_k u_k |g_k| = 1 is 1 / sum_k |g_k|^2 / a_k;
    the best rotation lower-bounds |<psi, F psi>| on the section.
    """
    g2 = np.abs(g) ** 2
    chi = np.linspace(-math.pi, math.pi, _CHI_SAMPLES, endpoint=False)
    a = np.cos(chi)[:, None] * z.real[None, :] + np.sin(chi)[:, None] * z.imag[None, :]
    feasible = np.all(a > 0.0, axis=1)
    if not feasible.any():
        return 0.0
    vals = np.zeros(len(chi))
    vals[feasible] = 1.0 / np.sum(g2[None, :] / a[feasible], axis=1)
    return float(np.max(vals))


def inf_criterion(F: FarFieldOperator, tf: TestFunction, m: int) -> float:
    """Sectioned inf-criterion value inf { |<psi, F psi>| : <psi, tf> = 1 }.

    psi is restricted to the span of the m leading eigenvectors;
    numerically null modes (|z| < 1e-14 |z_1|) are dropped from the
    section. Raises when the constraint is infeasible (tf orthogonal to
    the section).
    """
    if not 1 <= m <= F.n_dir:
        raise ValueError("section dimension m out of range")
    dec = spectral_decompose(F)
    return inf_criterion_from_decomposition(dec, tf, m)


def inf_criterion_from_decomposition(dec: SpectralDecomposition, tf: TestFunction,
                                     m: int) -> float:
    z = dec.eigenvalues[:m]
    live = np.abs(z) >= _RANK_FLOOR * np.abs(dec.eigenvalues[0])
    z = z[live]
    g = dec.eigenvectors[:, :m][:, live].conj().T @ tf.values
    if np.linalg.norm(g) <= _RANK_FLOOR * np.linalg.norm(tf.values):
        raise ValueError("constraint infeasible: test function orthogonal to the section")
    return _inf_section_value(z, g)


def scan_grid(dec: SpectralDecomposition, grid: SamplingGrid, ctx: WaveContext,
              dirs: DirectionGrid, cutoff: float) -> IndicatorField:
    """Picard indicator W at every grid point (vectorized, scheduling-free)."""
    keep = _retained(dec, cutoff)
    z = np.abs(dec.eigenvalues[keep])
    phases = np.exp(1j * ctx.k * (dirs.directions @ grid.points.T))
    tf_all = np.sqrt(dirs.weights)[:, None] * phases
    proj = dec.eigenvectors[:, keep].conj().T @ tf_all
    p2 = np.abs(proj) ** 2
    series = (1.0 / z) @ p2
    denom = p2.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        W = np.where(series > 0, denom / series, INDICATOR_CAP)
    W = np.minimum(W, INDICATOR_CAP)
    return IndicatorField(grid=grid, values=W, cutoff_used=cutoff,
                          n_modes_used=int(keep.sum()))


def scan_grid_inf(dec: SpectralDecomposition, grid: SamplingGrid, ctx: WaveContext,
                  dirs: DirectionGrid, m: int) -> IndicatorField:
    """inf-criterion value at every grid point (single decomposition reuse)."""
    z = dec.eigenvalues[:m]
    live = np.abs(z) >= _RANK_FLOOR * np.abs(dec.eigenvalues[0])
    z = z[live]
    phases = np.exp(1j * ctx.k * (dirs.directions @ grid.points.T))
    tf_all = np.sqrt(dirs.weights)[:, None] * phases
    g = dec.eigenvectors[:, :m][:, live].conj().T @ tf_all
    g2 = np.abs(g) ** 2
    chi = np.linspace(-math.pi, math.pi, _CHI_SAMPLES, endpoint=False)
    a = np.cos(chi)[:, None] * z.real[None, :] + np.sin(chi)[:, None] * z.imag[None, :]
    feasible = np.all(a > 0.0, axis=1)
    vals = np.zeros((len(chi), grid.n_points))
    if feasible.any():
        inv = 1.0 / a[feasible]
        vals[feasible] = 1.0 / (inv @ g2)
    W = vals.max(axis=0)
    return IndicatorField(grid=grid, values=W, cutoff_used=0.0, n_modes_used=int(live.sum()))


def screen_probe(dec: SpectralDecomposition, segments: Sequence[ProbeSegment],
                 ctx: WaveContext, dirs: DirectionGrid, cutoff: float,
                 trace_kind: str = "dirichlet") -> List[float]:
    """Picard indicator per probe segment; contained segments score high.

    Pass ``trace_kind="neumann"`` when the far-field data comes from a
    Neumann-trace family (see segment_test_function).
    """
    out = []
    for seg in segments:
        tf = segment_test_function(seg, ctx, dirs, trace_kind=trace_kind)
        out.append(picard_indicator(dec, tf, cutoff).indicator)
    return out


# ---------------------------------------------------------------------------
# thresholding of indicator fields
# ---------------------------------------------------------------------------

RECONSTRUCTION_LEVEL = 0.7


def threshold_mask(field: IndicatorField, threshold: Optional[float] = None,
                   fill_holes: bool = True) -> Tuple[np.ndarray, float]:
    """Binary support reconstruction from an indicator field.

    Default threshold: 0.7 times the field maximum (scale-invariant, so the
    mask is unchanged under any positive rescaling of the data). Enclosed
    holes of the superlevel set are filled: truncated spectra concentrate
    the indicator near the support boundary, and the support is the region
    it encloses. Returns the mask on the grid (ny, nx) and the threshold.
    """
    thr = RECONSTRUCTION_LEVEL * float(field.values.max()) if threshold is None \
        else float(threshold)
    mask = field.values.reshape(field.grid.ny, field.grid.nx) >= thr
    if fill_holes:
        mask = ndimage.binary_fill_holes(mask)
    return mask, thr
