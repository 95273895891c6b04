"""Far-field operator synthesis, scattering matrix, oracles, and noise.

The far-field operator is built through the trace factorization

    F = L  M^{-1}  L*

where L is the (weighted, scaled) plane-wave trace matrix matching the
boundary-condition family and M the model operator. F is stored in the
symmetrically weighted representation (entries scaled by sqrt(w_i w_j) of
the direction weights), so operator identities on L2(S^1) become plain
matrix identities: S = I - 2 pi i F is unitary up to discretization error,
F is normal, and the nonzero eigenvalues of F lie on the circle
|z - 1/(2 pi i)| = 1/(2 pi).

Analytic benchmark: for the sound-soft disk of radius R the eigenvalues
are z_n = (i/pi) a_n with Mie coefficients a_n = -J_n(kR)/H1_n(kR).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, TextIO, Tuple

import numpy as np
from scipy.special import hankel1, jv

from .boundary_ops import DirectionGrid, WaveContext, assemble_trace_matrix
from .geometry import BoundaryMesh
from .models import BoundaryConditionSpec, ModelOperator, apply_lambda, assemble_M

MIE_EIGENVALUE_SCALE = 1j / math.pi
FORMAT_VERSION = "scatkit-ff-1"


@dataclass(frozen=True)
class NoiseSpec:
    """Relative additive Gaussian noise level with a 64-bit seed."""

    level: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.level < 1.0:
            raise ValueError("noise level must satisfy 0 <= level < 1")


@dataclass(frozen=True)
class FarFieldOperator:
    """Discretized far-field operator in the symmetric sqrt-weight representation."""

    matrix: np.ndarray
    ctx: WaveContext
    grid: DirectionGrid
    family: str
    scene_hash: str = ""
    noise: NoiseSpec = NoiseSpec(0.0, 0)

    @property
    def n_dir(self) -> int:
        return self.grid.n_dir


def _trace_block(mesh: BoundaryMesh, ctx: WaveContext, dirs: DirectionGrid,
                 trace_tag: str, scale: float = 1.0):
    """Scaled unweighted trace entries and matching node-weight vector."""
    kinds = {"D": ["dirichlet"], "N": ["neumann"], "DN": ["dirichlet", "neumann"]}[trace_tag]
    traces = [assemble_trace_matrix(mesh, ctx, dirs, kind) for kind in kinds]
    blocks = [scale * tr.scaling * tr.entries for tr in traces]
    A = np.concatenate(blocks, axis=1) if len(blocks) > 1 else blocks[0]
    w = np.tile(mesh.weights, len(kinds))
    return A, w


def far_field_operator(mesh: BoundaryMesh, ctx: WaveContext, bc: BoundaryConditionSpec,
                       dirs: DirectionGrid, scene_hash: str = "",
                       model: Optional[ModelOperator] = None,
                       trace_scale: float = 1.0) -> FarFieldOperator:
    """Synthesize the far-field operator F = L M^{-1} L* for a scene.

    Screen meshes restrict the trace columns to the screen nodes, matching
    the compressed model operator (restriction / zero-extension). The
    ``trace_scale`` factor rescales the trace constant and exists for
    debugging the scaling calibration; leave at 1.
    """
    if model is None:
        model = assemble_M(mesh, ctx, bc)
    A, w_node = _trace_block(mesh, ctx, dirs, model.trace_tag, scale=trace_scale)
    idx = model.screen_indices
    if idx is not None:
        n = mesh.n_nodes
        cols = idx if model.trace_tag != "DN" else np.concatenate([idx, idx + n])
        A = A[:, cols]
        w_node = w_node[cols]
    w_dir = dirs.weights
    # forward map on node densities and its adjoint under the weighted pairings
    L = A * w_node[None, :]
    L_star = A.conj().T * w_dir[None, :]
    Y = apply_lambda(model, L_star)
    F_func = (L @ Y) / w_dir[None, :]  # kernel values f(xi_i, xi_j)
    sq = np.sqrt(w_dir)
    F_hat = sq[:, None] * F_func * sq[None, :]
    return FarFieldOperator(matrix=F_hat, ctx=ctx, grid=dirs, family=bc.family,
                            scene_hash=scene_hash)


def scattering_matrix(F: FarFieldOperator) -> np.ndarray:
    """S = I - 2 pi i F in the weighted representation (unitary in the limit)."""
    n = F.n_dir
    return np.eye(n) - 2j * math.pi * F.matrix


def unitarity_residual(F: FarFieldOperator) -> float:
    """|| S* S - I ||_F / sqrt(n_dir)."""
    S = scattering_matrix(F)
    n = F.n_dir
    return float(np.linalg.norm(S.conj().T @ S - np.eye(n)) / math.sqrt(n))


def normality_defect(F: FarFieldOperator) -> float:
    """|| F F* - F* F ||_F / ||F||_F^2."""
    A = F.matrix
    nrm2 = np.linalg.norm(A) ** 2
    return float(np.linalg.norm(A @ A.conj().T - A.conj().T @ A) / nrm2)


def reciprocity_defect(F: FarFieldOperator) -> float:
    """max_ij |F[i, j] - F[ap(j), ap(i)]| / max |F| (ap = antipodal map)."""
    ap = F.grid.antipodal_index()
    A = F.matrix
    return float(np.max(np.abs(A - A[np.ix_(ap, ap)].T)) / np.max(np.abs(A)))


def mie_coefficients(kR: float, n_max: int, family: str = "dirichlet") -> np.ndarray:
    """Reflection coefficients a_n, n = 0..n_max, of the disk (sound-soft/hard)."""
    n = np.arange(n_max + 1)
    if family == "dirichlet":
        return -jv(n, kR) / hankel1(n, kR)
    if family == "neumann":
        jp = 0.5 * (jv(n - 1, kR) - jv(n + 1, kR))
        hp = 0.5 * (hankel1(n - 1, kR) - hankel1(n + 1, kR))
        return -jp / hp
    raise ValueError(f"no Mie series for family {family!r}")


def disk_dirichlet_oracle(R: float, ctx: WaveContext, dirs: DirectionGrid,
                          tail: float = 1e-14) -> FarFieldOperator:
    """Far-field operator of the sound-soft disk from the Mie series.

    Assembled independently of the boundary-integral path, in the same
    normalization and weighting; truncated once |a_n| drops below ``tail``
    relative to the largest coefficient.
    """
    if R <= 0:
        raise ValueError("disk radius must be positive")
    kR = ctx.k * R
    n_max = int(math.ceil(kR)) + 8
    a = mie_coefficients(kR, n_max)
    scale = np.max(np.abs(a))
    while np.abs(a[-1]) > tail * scale:
        n_max += 8
        a = mie_coefficients(kR, n_max)
    n_dir = dirs.n_dir
    dphi = dirs.angles[:, None] - dirs.angles[None, :]
    orders = np.arange(-n_max, n_max + 1)
    coef = MIE_EIGENVALUE_SCALE * a[np.abs(orders)]
    F_hat = np.tensordot(coef, np.exp(1j * orders[:, None, None] * dphi), axes=(0, 0)) / n_dir
    return FarFieldOperator(matrix=F_hat, ctx=ctx, grid=dirs, family="dirichlet",
                            scene_hash="mie-oracle")


def add_noise(F: FarFieldOperator, spec: NoiseSpec) -> FarFieldOperator:
    """Additive complex Gaussian noise, deterministic in the seed.

    F_noisy = F + level * ||F||_F / n * E with E standard complex Gaussian
    entries from a counter-based generator keyed by the seed.
    """
    if spec.level == 0.0:
        return FarFieldOperator(matrix=F.matrix, ctx=F.ctx, grid=F.grid,
                                family=F.family, scene_hash=F.scene_hash, noise=spec)
    n = F.n_dir
    rng = np.random.Generator(np.random.Philox(key=int(spec.seed)))
    E = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    scale = spec.level * np.linalg.norm(F.matrix) / n
    return FarFieldOperator(matrix=F.matrix + scale * E, ctx=F.ctx, grid=F.grid,
                            family=F.family, scene_hash=F.scene_hash, noise=spec)


# ---------------------------------------------------------------------------
# far-field file format: one JSON header line, then n^2 lines "i j re im"
# ---------------------------------------------------------------------------

def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def farfield_header(F: FarFieldOperator) -> dict:
    return {
        "d": 2,
        "k": F.ctx.k,
        "n_dir": F.n_dir,
        "weighting": "symmetric-sqrt",
        "family": F.family,
        "scene_hash": F.scene_hash,
        "noise": {"level": F.noise.level, "seed": int(F.noise.seed)},
        "version": FORMAT_VERSION,
    }


def save_farfield(F: FarFieldOperator, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        _write_farfield(F, fh)


def _write_farfield(F: FarFieldOperator, fh: TextIO) -> None:
    fh.write(json.dumps(farfield_header(F), sort_keys=True, separators=(", ", ": ")))
    fh.write("\n")
    n = F.n_dir
    A = F.matrix
    for i in range(n):
        for j in range(n):
            fh.write(f"{i} {j} {_format_float(A[i, j].real)} {_format_float(A[i, j].imag)}\n")


def load_farfield(path) -> Tuple[FarFieldOperator, dict]:
    """Read a far-field file; returns the operator and its raw header."""
    with open(path, "r", encoding="ascii") as fh:
        header = json.loads(fh.readline())
        n = int(header["n_dir"])
        A = np.zeros((n, n), dtype=complex)
        for _ in range(n * n):
            parts = fh.readline().split()
            if len(parts) != 4:
                raise ValueError("malformed far-field entry line")
            i, j = int(parts[0]), int(parts[1])
            A[i, j] = float(parts[2]) + 1j * float(parts[3])
    if header.get("d") != 2 or header.get("weighting") != "symmetric-sqrt":
        raise ValueError("unsupported far-field file header")
    ctx = WaveContext.from_wavenumber(float(header["k"]))
    grid = DirectionGrid.uniform(n)
    noise = NoiseSpec(level=float(header["noise"]["level"]), seed=int(header["noise"]["seed"]))
    F = FarFieldOperator(matrix=A, ctx=ctx, grid=grid, family=str(header["family"]),
                         scene_hash=str(header["scene_hash"]), noise=noise)
    return F, header
