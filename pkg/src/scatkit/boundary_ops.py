"""Boundary integral operators for the 2D Helmholtz equation.

All operators use the outgoing fundamental solution

    G_k(x, y) = (i/4) H0^(1)(k |x - y|),

and the jump-free two-sided-average trace convention: the Dirichlet and
Neumann traces of the layer potentials are the means of their interior and
exterior one-sided traces, so the double-layer traces K, K' carry no
+-1/2 identity terms. Operator kinds:

    V  = average Dirichlet trace of the single layer   (weakly singular)
    K  = average Dirichlet trace of the double layer   (principal value)
    K' = average Neumann trace of the single layer     (principal value)
    T  = average Neumann trace of the double layer     (hypersingular,
         assembled through the Maue tangential-derivative identity
         T = (d/ds) V0 (d/ds) + k^2 * V[(nu.nu) kernel])

On smooth closed curves the assembly is the spectral Kress product
quadrature; on arcs/polygons it is graded-panel midpoint quadrature with
analytic log self-terms. Disk eigenvalues (Fourier mode e^{i n theta},
radius R, wavenumber k, z = kR):

    V : (i pi R / 2)  J_n(z) H_n(z)
    K = K' : (i pi k R / 4) (J_n'(z) H_n(z) + J_n(z) H_n'(z))
    T : (i pi k^2 R / 2) J_n'(z) H_n'(z)

The trace matrices realize the map from boundary densities to direction
functions: row j holds conj of the plane-wave trace with direction xi_j,
scaled by c2 = 2^{-1/2} (2 pi)^{-1} and combined with the arclength
weights, so that matrix-vector products are the L2(S^1)-valued pairings
(conjugate-linear in the first slot) of plane-wave traces with densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import hankel1, j0, j1

from .geometry import BoundaryMesh
from .quadrature import (
    kress_log_weights,
    nonuniform_diff_matrix,
    panel_log_self_integral,
    trig_diff_matrix,
)

EULER_GAMMA = 0.57721566490153286060651209008240243

# direction-function scaling of the trace map in d = 2
TRACE_SCALING = 1.0 / (math.sqrt(2.0) * 2.0 * math.pi)

OPERATOR_KINDS = ("V", "K", "Kp", "T")


@dataclass(frozen=True)
class WaveContext:
    """Spectral parameter lam < 0 and wavenumber k = |lam|^(1/2)."""

    lam: float
    k: float

    def __post_init__(self):
        if not self.lam < 0:
            raise ValueError("spectral parameter must be negative")
        if not math.isclose(self.k * self.k, -self.lam, rel_tol=1e-12):
            raise ValueError("wavenumber inconsistent with spectral parameter")

    @classmethod
    def from_wavenumber(cls, k: float) -> "WaveContext":
        k = float(k)
        if k <= 0:
            raise ValueError("wavenumber must be positive")
        return cls(lam=-k * k, k=k)


@dataclass(frozen=True)
class DirectionGrid:
    """Uniform grid of n_dir unit directions on S^1 with weights 2 pi / n_dir."""

    angles: np.ndarray
    directions: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, n_dir: int) -> "DirectionGrid":
        n_dir = int(n_dir)
        if n_dir < 2 or n_dir % 2:
            raise ValueError("direction grid must have an even size >= 2")
        angles = 2 * math.pi * np.arange(n_dir) / n_dir
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        w = np.full(n_dir, 2 * math.pi / n_dir)
        return cls(angles=angles, directions=dirs, weights=w)

    @property
    def n_dir(self) -> int:
        return len(self.angles)

    def antipodal_index(self) -> np.ndarray:
        n = self.n_dir
        return (np.arange(n) + n // 2) % n


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense Nystrom matrix of a boundary operator (maps node values to node values)."""

    entries: np.ndarray
    kind: str  # "V" | "K" | "Kp" | "T" | "composite"
    mesh: BoundaryMesh

    @property
    def shape(self):
        return self.entries.shape

    def weighted_transpose_defect(self) -> float:
        """Relative defect of A = W^-1 A^T W under the arclength pairing."""
        w = self.mesh.weights
        At = self.entries.T * w[None, :] / w[:, None]
        return float(np.linalg.norm(self.entries - At) / np.linalg.norm(self.entries))


def _pairwise_geometry(mesh: BoundaryMesh):
    x = mesh.nodes
    dx = x[:, None, 0] - x[None, :, 0]
    dy = x[:, None, 1] - x[None, :, 1]
    r = np.sqrt(dx * dx + dy * dy)
    return dx, dy, r


def _check_mesh(mesh: BoundaryMesh):
    d = mesh.nodes[:, None, :] - mesh.nodes[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(r2, np.inf)
    if np.min(r2) == 0.0:
        raise ValueError("degenerate mesh: coincident distinct nodes")


def assemble_boundary_operator(mesh: BoundaryMesh, ctx: WaveContext, kind: str) -> OperatorMatrix:
    """Assemble the Nystrom matrix of V, K, K' (kind="Kp"), or T."""
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    _check_mesh(mesh)
    if mesh.tier == "spectral":
        entries = _assemble_spectral(mesh, ctx.k, kind)
    else:
        entries = _assemble_panel(mesh, ctx.k, kind)
    return OperatorMatrix(entries=entries, kind=kind, mesh=mesh)


# ---------------------------------------------------------------------------
# spectral tier (smooth closed curves, uniform parameter grid)
# ---------------------------------------------------------------------------

def _log_split_quad(mesh: BoundaryMesh, part_log: np.ndarray, part_smooth: np.ndarray) -> np.ndarray:
    """Combine kernel split A = A1 log(4 sin^2((t-s)/2)) + A2 with the product rule."""
    n = mesh.n_nodes
    R = kress_log_weights(n)
    return R * part_log + (2 * math.pi / n) * part_smooth


def _single_layer_parts(mesh: BoundaryMesh, k: float, density_factor: np.ndarray):
    """Split of (i/4) H0(kr) * density_factor(s); factor must be smooth and positive-free."""
    _, _, r = _pairwise_geometry(mesh)
    np.fill_diagonal(r, 1.0)  # dummy, diagonals overwritten
    log_term = np.log(4 * np.sin(0.5 * (mesh.params[:, None] - mesh.params[None, :])) ** 2,
                      out=np.zeros_like(r), where=~np.eye(len(r), dtype=bool))
    total = 0.25j * hankel1(0, k * r) * density_factor
    part1 = -(1.0 / (4 * math.pi)) * j0(k * r) * density_factor
    part2 = total - part1 * log_term
    diag = (0.25j - EULER_GAMMA / (2 * math.pi)
            - np.log(k * mesh.speed / 2) / (2 * math.pi)) * np.diag(density_factor)
    np.fill_diagonal(part1, -np.diag(density_factor) / (4 * math.pi))
    np.fill_diagonal(part2, diag)
    return part1, part2


def _assemble_spectral(mesh: BoundaryMesh, k: float, kind: str) -> np.ndarray:
    n = mesh.n_nodes
    dx, dy, r = _pairwise_geometry(mesh)
    sigma = mesh.speed
    if kind == "V":
        p1, p2 = _single_layer_parts(mesh, k, np.broadcast_to(sigma[None, :], (n, n)))
        return _log_split_quad(mesh, p1, p2)

    if kind in ("K", "Kp"):
        # K : nu(s) . (x(s) - x(t)) ;   K' : nu(t) . (x(t) - x(s)), extra speed ratio
        np.fill_diagonal(r, 1.0)
        if kind == "K":
            nt = mesh.normals * sigma[:, None]  # unnormalized normals
            dot = nt[None, :, 0] * (-dx) + nt[None, :, 1] * (-dy)
            geom = dot / r
        else:
            nt = mesh.normals * sigma[:, None]
            dot = nt[:, None, 0] * dx + nt[:, None, 1] * dy
            geom = dot / r * (sigma[None, :] / sigma[:, None])
        total = -(0.25j * k) * hankel1(1, k * r) * geom
        part1 = (k / (4 * math.pi)) * j1(k * r) * geom
        log_term = np.log(4 * np.sin(0.5 * (mesh.params[:, None] - mesh.params[None, :])) ** 2,
                          out=np.zeros_like(r), where=~np.eye(n, dtype=bool))
        part2 = total - part1 * log_term
        np.fill_diagonal(part1, 0.0)
        np.fill_diagonal(part2, -mesh.curvature * sigma / (4 * math.pi))
        return _log_split_quad(mesh, part1, part2)

    # T via the Maue identity: diag(1/sigma) D Q0 D + k^2 Qnn
    D = trig_diff_matrix(n)
    p1, p2 = _single_layer_parts(mesh, k, np.ones((n, n)))
    Q0 = _log_split_quad(mesh, p1, p2)
    nu_dot = mesh.normals @ mesh.normals.T
    p1n, p2n = _single_layer_parts(mesh, k, nu_dot * sigma[None, :])
    Qnn = _log_split_quad(mesh, p1n, p2n)
    return (D @ Q0 @ D) / sigma[:, None] + k * k * Qnn


# ---------------------------------------------------------------------------
# panel tier (graded midpoint panels on arcs and polygons)
# ---------------------------------------------------------------------------

def _panel_v0(mesh: BoundaryMesh, k: float) -> np.ndarray:
    """Single-layer panel matrix: off-diagonal kernel x weight, analytic self-term."""
    _, _, r = _pairwise_geometry(mesh)
    np.fill_diagonal(r, 1.0)
    M = 0.25j * hankel1(0, k * r) * mesh.weights[None, :]
    a, b = mesh.panel_halves[:, 0], mesh.panel_halves[:, 1]
    self_term = (mesh.weights * (0.25j - (EULER_GAMMA + math.log(k / 2)) / (2 * math.pi))
                 - panel_log_self_integral(a, b) / (2 * math.pi))
    np.fill_diagonal(M, self_term)
    return M


def _assemble_panel(mesh: BoundaryMesh, k: float, kind: str) -> np.ndarray:
    dx, dy, r = _pairwise_geometry(mesh)
    np.fill_diagonal(r, 1.0)
    if kind == "V":
        return _panel_v0(mesh, k)

    if kind in ("K", "Kp"):
        if kind == "K":
            dot = mesh.normals[None, :, 0] * (-dx) + mesh.normals[None, :, 1] * (-dy)
        else:
            dot = mesh.normals[:, None, 0] * dx + mesh.normals[:, None, 1] * dy
        M = -(0.25j * k) * hankel1(1, k * r) * (dot / r) * mesh.weights[None, :]
        np.fill_diagonal(M, -mesh.curvature * mesh.weights / (4 * math.pi))
        return M

    # T via Maue in weak form: the outer arclength derivative is moved onto
    # the pairing (endpoint values vanish in the energy space of open arcs),
    # which keeps the graded-endpoint rows bounded:
    #   <psi, T phi> = -<d psi/ds, V0 d phi/ds> + k^2 <psi, V0^(nu.nu) phi>
    # The imaginary part is replaced by its smooth closed-form kernel so the
    # operator keeps the exact power-flux structure (unitary S downstream).
    D = _panel_arclength_diff(mesh)
    V0 = _panel_v0(mesh, k)
    nu_dot = mesh.normals @ mesh.normals.T
    Vnn = _panel_v0(mesh, k) * nu_dot
    np.fill_diagonal(Vnn, np.diag(V0))
    w = mesh.weights
    T_weak = -(D.T * w[None, :] / w[:, None]) @ V0 @ D + k * k * Vnn
    return T_weak.real + 1j * _hypersingular_imag(mesh, k)


def _hypersingular_imag(mesh: BoundaryMesh, k: float) -> np.ndarray:
    """Exact imaginary part of the hypersingular kernel times panel weights.

    Im T has the entire kernel d^2/(dnu_x dnu_y) J0(k r) / 4, bounded at
    r = 0 with diagonal limit k^2 / 8.
    """
    from scipy.special import jvp

    dx, dy, r = _pairwise_geometry(mesh)
    np.fill_diagonal(r, 1.0)
    a = (mesh.normals[:, None, 0] * dx + mesh.normals[:, None, 1] * dy) / r
    b = -(mesh.normals[None, :, 0] * dx + mesh.normals[None, :, 1] * dy) / r
    nu_dot = mesh.normals @ mesh.normals.T
    kern = 0.25 * (-k * k * jvp(1, k * r) * a * b
                   + k * j1(k * r) / r * (nu_dot + a * b))
    kern[np.diag_indices(mesh.n_nodes)] = k * k / 8.0
    return kern * mesh.weights[None, :]


def _panel_arclength_diff(mesh: BoundaryMesh) -> np.ndarray:
    n = mesh.n_nodes
    D = np.zeros((n, n))
    for e in np.unique(mesh.edge_id):
        idx = np.flatnonzero(mesh.edge_id == e)
        D[np.ix_(idx, idx)] = nonuniform_diff_matrix(mesh.u_nodes[idx])
    return D / mesh.u_speed[:, None]


# ---------------------------------------------------------------------------
# plane-wave trace matrices and far-field evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceMatrix:
    """Conjugated plane-wave traces on the mesh, one direction per row.

    ``entries[j, m] = conj(trace of e^{i k xi_j . y} at node m)`` without
    quadrature weights; ``weighted()`` folds in the arclength weights and
    the scaling constant so that ``weighted() @ density`` evaluates the
    direction function of the trace pairing.
    """

    entries: np.ndarray
    trace_kind: str  # "dirichlet" | "neumann"
    scaling: float
    mesh: BoundaryMesh
    grid: DirectionGrid

    def weighted(self) -> np.ndarray:
        return self.scaling * self.entries * self.mesh.weights[None, :]

    def adjoint_weighted(self) -> np.ndarray:
        """Adjoint map from direction functions back to node values."""
        return self.scaling * self.entries.conj().T * self.grid.weights[None, :]


def assemble_trace_matrix(mesh: BoundaryMesh, ctx: WaveContext, dirs: DirectionGrid,
                          trace_kind: str) -> TraceMatrix:
    """Dirichlet or Neumann plane-wave trace matrix over a direction grid."""
    if trace_kind not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown trace kind {trace_kind!r}")
    phase = np.exp(-1j * ctx.k * (dirs.directions @ mesh.nodes.T))
    if trace_kind == "dirichlet":
        entries = phase
    else:
        xi_dot_nu = dirs.directions @ mesh.normals.T
        entries = -1j * ctx.k * xi_dot_nu * phase
    return TraceMatrix(entries=entries, trace_kind=trace_kind,
                       scaling=TRACE_SCALING, mesh=mesh, grid=dirs)


def farfield_charge_prefactor(k: float) -> complex:
    """Prefactor of the radiation pattern u_s(x) ~ e^{ikr}/sqrt(r) u_inf(x_hat)."""
    return np.exp(1j * math.pi / 4) / math.sqrt(8 * math.pi * k)


def eval_farfield_of_density(mesh: BoundaryMesh, ctx: WaveContext, dirs: DirectionGrid,
                             density: np.ndarray, layer: str) -> np.ndarray:
    """Radiation pattern of a single- or double-layer potential.

    Normalization: u_s(x) ~ (e^{ik||x||} / sqrt(||x||)) u_inf(x_hat); the
    returned vector holds u_inf at the grid directions.
    """
    density = np.asarray(density)
    if density.shape != (mesh.n_nodes,):
        raise ValueError("density length must match the node count")
    if layer not in ("single", "double"):
        raise ValueError(f"unknown layer {layer!r}")
    phase = np.exp(-1j * ctx.k * (dirs.directions @ mesh.nodes.T))
    if layer == "double":
        phase = phase * (-1j * ctx.k) * (dirs.directions @ mesh.normals.T)
    return farfield_charge_prefactor(ctx.k) * phase @ (density * mesh.weights)
