"""Boundary-condition operator families and their inverses.

Each supported family produces a dense operator M on the mesh nodes whose
inverse maps incident-wave traces to layer densities; the far-field
operator downstream is the trace-sandwich of that inverse. With the
outgoing-kernel convention used throughout (see boundary_ops), all
families carry a positive-semidefinite imaginary quadratic form, which is
what makes the resulting scattering matrix unitary:

    dirichlet:  M = V                       (pairs with Dirichlet traces)
    neumann:    M = T                       (pairs with Neumann traces)
    alpha:      M = diag(1/alpha) + V       (semi-transparent, jump in the
                                             Neumann trace proportional to
                                             the Dirichlet trace)
    theta:      M = T - diag(theta)         (semi-transparent, dual type)
    local_b:    M = [[diag(b11) + V, diag(b12) + K ],
                     [diag(conj b12) + K', diag(b22) + T]]
                                            (general local conditions on
                                             both traces; pairs with the
                                             stacked Dirichlet/Neumann
                                             traces)

Screens compress M to the principal submatrix on the screen nodes
(restriction/zero-extension projectors); the submatrix is exactly a slice
of the full-boundary matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .boundary_ops import OperatorMatrix, WaveContext, assemble_boundary_operator
from .geometry import BoundaryMesh

COND_LIMIT = 1e12
FAMILIES = ("dirichlet", "neumann", "alpha", "theta", "local_b")

_PROBE_SEED = 0x5CA77E2


class ExcludedWavenumberError(RuntimeError):
    """The model operator is numerically singular at this wavenumber.

    Signals that the spectral parameter sits at (or too close to) the
    excluded set of the scene: an interior eigenvalue of the relevant
    domain or a point-spectrum value of the perturbed operator.
    """

    def __init__(self, cond: float):
        super().__init__(
            f"model operator nearly singular (cond ~ {cond:.3e}); "
            "wavenumber lies in the excluded set - perturb k")
        self.cond = cond


def _as_samples(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value)
    if arr.ndim == 0:
        arr = np.full(n, complex(arr) if np.iscomplexobj(arr) else float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} samples must be a scalar or length-{n} vector")
    return arr


@dataclass(frozen=True)
class BoundaryConditionSpec:
    """Tagged boundary-condition family with per-node multiplier samples.

    Multipliers may be given as scalars (broadcast at assembly) or as
    per-node sample vectors. Validation rules: alpha samples must be
    nonzero with constant sign; b11 strictly negative with b11, b22 real.
    """

    family: str
    alpha: Union[float, np.ndarray, None] = None
    theta: Union[float, np.ndarray, None] = None
    b11: Union[float, np.ndarray, None] = None
    b12: Union[complex, np.ndarray, None] = None
    b22: Union[float, np.ndarray, None] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown boundary-condition family {self.family!r}")

    @classmethod
    def dirichlet(cls) -> "BoundaryConditionSpec":
        return cls(family="dirichlet")

    @classmethod
    def neumann(cls) -> "BoundaryConditionSpec":
        return cls(family="neumann")

    @classmethod
    def semi_transparent_alpha(cls, alpha) -> "BoundaryConditionSpec":
        return cls(family="alpha", alpha=alpha)

    @classmethod
    def semi_transparent_theta(cls, theta) -> "BoundaryConditionSpec":
        return cls(family="theta", theta=theta)

    @classmethod
    def local_b(cls, b11, b12, b22) -> "BoundaryConditionSpec":
        return cls(family="local_b", b11=b11, b12=b12, b22=b22)

    @classmethod
    def robin_split(cls, b: float) -> "BoundaryConditionSpec":
        """Same Robin condition on both sides: b11 = 1/(2b), b12 = 0, b22 = -b/2."""
        if b == 0:
            raise ValueError("robin parameter must be nonzero")
        return cls.local_b(b11=1.0 / (2.0 * b), b12=0.0, b22=-b / 2.0)

    @property
    def trace_tag(self) -> str:
        return {"dirichlet": "D", "alpha": "D", "neumann": "N", "theta": "N",
                "local_b": "DN"}[self.family]


@dataclass
class ModelOperator:
    """Assembled boundary-condition operator with lazy factorization."""

    M: np.ndarray
    trace_tag: str  # "D" | "N" | "DN"
    mesh: BoundaryMesh
    family: str
    screen_indices: Optional[np.ndarray] = None
    _lu: Optional[tuple] = field(default=None, repr=False)
    _cond: Optional[float] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.M.shape[0]

    @property
    def pairing_weights(self) -> np.ndarray:
        w = self.mesh.weights
        if self.screen_indices is not None:
            w = w[self.screen_indices]
        if self.trace_tag == "DN":
            w = np.concatenate([w, w])
        return w

    def condition_number(self) -> float:
        if self._cond is None:
            s = np.linalg.svd(self.M, compute_uv=False)
            self._cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
        return self._cond

    def factorization(self):
        if self.condition_number() > COND_LIMIT:
            raise ExcludedWavenumberError(self.condition_number())
        if self._lu is None:
            self._lu = scipy.linalg.lu_factor(self.M)
        return self._lu


def _multiplier_diag(values, n: int, name: str) -> np.ndarray:
    return _as_samples(values, n, name)


def assemble_M(mesh: BoundaryMesh, ctx: WaveContext, bc: BoundaryConditionSpec) -> ModelOperator:
    """Assemble the boundary-condition operator for a family, with screens.

    When the mesh carries a screen mask, returns the principal submatrix of
    the full-boundary operator on the screen nodes (bitwise a slice of the
    full matrix; both blocks are sliced for the local_b family).
    """
    n = mesh.n_nodes
    fam = bc.family

    if fam == "dirichlet":
        M = assemble_boundary_operator(mesh, ctx, "V").entries
        tag = "D"
    elif fam == "neumann":
        M = assemble_boundary_operator(mesh, ctx, "T").entries
        tag = "N"
    elif fam == "alpha":
        a = _multiplier_diag(bc.alpha, n, "alpha")
        if np.iscomplexobj(a) and np.max(np.abs(a.imag)) != 0:
            raise ValueError("alpha samples must be real-valued")
        a = a.real.astype(float)
        if np.any(a == 0):
            raise ValueError("alpha samples must be nonzero")
        if not (np.all(a > 0) or np.all(a < 0)):
            raise ValueError("alpha samples must have constant sign")
        M = assemble_boundary_operator(mesh, ctx, "V").entries.copy()
        M[np.diag_indices(n)] += 1.0 / a
        tag = "D"
    elif fam == "theta":
        th = _multiplier_diag(bc.theta, n, "theta")
        if np.iscomplexobj(th) and np.max(np.abs(th.imag)) != 0:
            raise ValueError("theta samples must be real-valued")
        th = th.real.astype(float)
        M = assemble_boundary_operator(mesh, ctx, "T").entries.copy()
        M[np.diag_indices(n)] -= th
        tag = "N"
    else:  # local_b
        b11 = _multiplier_diag(bc.b11, n, "b11")
        b12 = _multiplier_diag(bc.b12, n, "b12").astype(complex)
        b22 = _multiplier_diag(bc.b22, n, "b22")
        for name, vals in (("b11", b11), ("b22", b22)):
            if np.iscomplexobj(vals) and np.max(np.abs(vals.imag)) != 0:
                raise ValueError(f"{name} samples must be real-valued")
        b11 = b11.real.astype(float)
        b22 = b22.real.astype(float)
        if not np.all(b11 < 0):
            raise ValueError("b11 samples must be strictly negative")
        V = assemble_boundary_operator(mesh, ctx, "V").entries
        K = assemble_boundary_operator(mesh, ctx, "K").entries
        Kp = assemble_boundary_operator(mesh, ctx, "Kp").entries
        T = assemble_boundary_operator(mesh, ctx, "T").entries
        M = np.block([[V + np.diag(b11), K + np.diag(b12)],
                      [Kp + np.diag(b12.conj()), T + np.diag(b22)]])
        tag = "DN"

    idx = mesh.screen_indices()
    if idx is not None:
        if tag == "DN":
            full_idx = np.concatenate([idx, idx + n])
            M = M[np.ix_(full_idx, full_idx)]
        else:
            M = M[np.ix_(idx, idx)]

    return ModelOperator(M=M, trace_tag=tag, mesh=mesh, family=fam, screen_indices=idx)


def apply_lambda(model: ModelOperator, rhs: np.ndarray, extend: bool = False) -> np.ndarray:
    """Apply the inverse of the model operator to trace data.

    For screen models with ``extend=True`` the solution density is
    zero-extended from the screen nodes to the full boundary index set.
    """
    rhs = np.asarray(rhs, dtype=complex)
    single = rhs.ndim == 1
    cols = rhs[:, None] if single else rhs
    if cols.shape[0] != model.size:
        raise ValueError("rhs size does not match the model operator")
    sol = scipy.linalg.lu_solve(model.factorization(), cols)
    if extend and model.screen_indices is not None:
        n = model.mesh.n_nodes
        blocks = 2 if model.trace_tag == "DN" else 1
        idx = model.screen_indices
        full_idx = idx if blocks == 1 else np.concatenate([idx, idx + n])
        out = np.zeros((blocks * n, cols.shape[1]), dtype=complex)
        out[full_idx] = sol
        sol = out
    return sol[:, 0] if single else sol


@dataclass(frozen=True)
class CoercivityReport:
    """Diagnostic extremes of a model operator (no asserted magnitudes)."""

    sigma_min: float
    sigma_max: float
    im_quadratic_form_min: float


def coercivity_report(model: ModelOperator, n_probes: int = 64) -> CoercivityReport:
    """Report singular-value extremes and the minimal |Im <phi, M phi>|.

    The imaginary quadratic form is probed with seeded random unit vectors
    under the arclength-weighted pairing; purely diagnostic.
    """
    s = np.linalg.svd(model.M, compute_uv=False)
    w = model.pairing_weights
    rng = np.random.Generator(np.random.Philox(key=_PROBE_SEED))
    m = model.size
    probes = rng.standard_normal((m, n_probes)) + 1j * rng.standard_normal((m, n_probes))
    norms = np.sqrt(np.einsum("i,ij->j", w, np.abs(probes) ** 2))
    probes /= norms[None, :]
    forms = np.einsum("ij,i,ij->j", probes.conj(), w, model.M @ probes)
    return CoercivityReport(sigma_min=float(s[-1]), sigma_max=float(s[0]),
                            im_quadratic_form_min=float(np.min(np.abs(forms.imag))))
