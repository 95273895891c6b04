"""Parametrized boundary curves, quadrature meshes, and sampling grids.

Two discretization tiers are produced by :func:`discretize_curve`:

* smooth closed curves (circle, ellipse, kite) get uniform-in-parameter
  nodes carrying speed and curvature data, enabling spectral (Kress-type)
  Nystrom quadrature downstream;
* open arcs and polygons get graded midpoint panels (grading exponent 3
  toward endpoints and corners) with per-panel arclength bookkeeping for
  analytic log self-terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

GRADING_EXPONENT = 3
MIN_NODES_CLOSED = 8
MIN_NODES_ARC = 4


@dataclass(frozen=True)
class CurveSpec:
    """Shape description for a boundary curve or open arc.

    Use the classmethod constructors; ``shape`` selects the variant and the
    remaining fields are variant-specific. Closed shapes are positively
    (counterclockwise) oriented, with outward unit normals.
    """

    shape: str
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    semiaxes: Tuple[float, float] = (1.0, 1.0)
    scale: float = 1.0
    vertices: Tuple[Tuple[float, float], ...] = ()
    endpoints: Tuple[Tuple[float, float], ...] = ()
    angle_range: Tuple[float, float] = (0.0, math.pi)

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0) -> "CurveSpec":
        if radius <= 0:
            raise ValueError("circle radius must be positive")
        return cls(shape="circle", center=tuple(center), radius=float(radius))

    @classmethod
    def ellipse(cls, center=(0.0, 0.0), semiaxes=(1.0, 0.5)) -> "CurveSpec":
        a, b = semiaxes
        if a <= 0 or b <= 0:
            raise ValueError("ellipse semiaxes must be positive")
        return cls(shape="ellipse", center=tuple(center), semiaxes=(float(a), float(b)))

    @classmethod
    def kite(cls, center=(0.0, 0.0), scale=1.0) -> "CurveSpec":
        """Non-convex kite x(t) = (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)."""
        if scale <= 0:
            raise ValueError("kite scale must be positive")
        return cls(shape="kite", center=tuple(center), scale=float(scale))

    @classmethod
    def polygon(cls, vertices: Sequence[Tuple[float, float]]) -> "CurveSpec":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if _polygon_self_intersects(verts):
            raise ValueError("polygon is self-intersecting")
        if _signed_area(verts) < 0:
            verts = verts[::-1]
        if _signed_area(verts) == 0:
            raise ValueError("polygon encloses zero area")
        return cls(shape="polygon", vertices=verts)

    @classmethod
    def segment(cls, p0, p1) -> "CurveSpec":
        """Straight open arc from p0 to p1."""
        p0 = (float(p0[0]), float(p0[1]))
        p1 = (float(p1[0]), float(p1[1]))
        if p0 == p1:
            raise ValueError("segment endpoints must be distinct")
        return cls(shape="segment", endpoints=(p0, p1))

    @classmethod
    def circular_arc(cls, center=(0.0, 0.0), radius=1.0, angle_range=(0.0, math.pi)) -> "CurveSpec":
        """Open circular arc, angles in radians, traversed counterclockwise."""
        a0, a1 = float(angle_range[0]), float(angle_range[1])
        if radius <= 0:
            raise ValueError("arc radius must be positive")
        if not a0 < a1:
            raise ValueError("arc needs a nonempty angle range")
        if a1 - a0 >= 2 * math.pi:
            raise ValueError("arc spans a full turn; use a circle instead")
        return cls(shape="circular_arc", center=tuple(center), radius=float(radius),
                   angle_range=(a0, a1))

    @property
    def closed(self) -> bool:
        return self.shape in ("circle", "ellipse", "kite", "polygon")

    @property
    def smooth_closed(self) -> bool:
        return self.shape in ("circle", "ellipse", "kite")

    def parametrization(self, t: np.ndarray):
        """Evaluate x(t), x'(t), x''(t) for smooth shapes.

        Smooth closed shapes use t in [0, 2pi); the circular arc maps
        t in [0, 1] affinely onto its angle range.
        """
        t = np.asarray(t, dtype=float)
        cx, cy = self.center
        if self.shape == "circle":
            R = self.radius
            c, s = np.cos(t), np.sin(t)
            x = np.stack([cx + R * c, cy + R * s], axis=-1)
            dx = np.stack([-R * s, R * c], axis=-1)
            ddx = np.stack([-R * c, -R * s], axis=-1)
            return x, dx, ddx
        if self.shape == "ellipse":
            a, b = self.semiaxes
            c, s = np.cos(t), np.sin(t)
            x = np.stack([cx + a * c, cy + b * s], axis=-1)
            dx = np.stack([-a * s, b * c], axis=-1)
            ddx = np.stack([-a * c, -b * s], axis=-1)
            return x, dx, ddx
        if self.shape == "kite":
            sc = self.scale
            c, s = np.cos(t), np.sin(t)
            c2, s2 = np.cos(2 * t), np.sin(2 * t)
            x = np.stack([cx + sc * (c + 0.65 * c2 - 0.65), cy + sc * 1.5 * s], axis=-1)
            dx = np.stack([sc * (-s - 1.3 * s2), sc * 1.5 * c], axis=-1)
            ddx = np.stack([sc * (-c - 2.6 * c2), sc * (-1.5) * s], axis=-1)
            return x, dx, ddx
        if self.shape == "circular_arc":
            a0, a1 = self.angle_range
            span = a1 - a0
            ang = a0 + span * t
            R = self.radius
            c, s = np.cos(ang), np.sin(ang)
            x = np.stack([cx + R * c, cy + R * s], axis=-1)
            dx = span * np.stack([-R * s, R * c], axis=-1)
            ddx = span**2 * np.stack([-R * c, -R * s], axis=-1)
            return x, dx, ddx
        if self.shape == "segment":
            p0 = np.asarray(self.endpoints[0])
            p1 = np.asarray(self.endpoints[1])
            d = p1 - p0
            x = p0[None, :] + t[:, None] * d[None, :]
            dx = np.broadcast_to(d, x.shape).copy()
            ddx = np.zeros_like(x)
            return x, dx, ddx
        raise ValueError(f"no smooth parametrization for shape {self.shape!r}")


@dataclass(frozen=True)
class BoundaryMesh:
    """Discretized curve: nodes, outward unit normals, arclength weights.

    ``params`` are parameter values in [0, 2pi) for closed smooth curves
    and in [0, 1] for arcs/polygons. Spectral-tier meshes carry ``speed``
    |x'(t)| and signed ``curvature`` per node; panel-tier meshes carry
    ``panel_halves`` (arclength from each node to its panel edges) for
    analytic log self-terms. ``screen_mask`` marks the nodes of a screen
    subset; immutable after construction.
    """

    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    params: np.ndarray
    closed: bool
    tier: str  # "spectral" | "panel"
    speed: np.ndarray
    curvature: np.ndarray
    panel_halves: Optional[np.ndarray] = None
    screen_mask: Optional[np.ndarray] = None
    spec: Optional[CurveSpec] = field(default=None, compare=False)
    # panel tier: uniform pre-grading grid, arclength speed ds/du, edge ids
    u_nodes: Optional[np.ndarray] = None
    u_speed: Optional[np.ndarray] = None
    edge_id: Optional[np.ndarray] = None

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def total_arclength(self) -> float:
        return float(self.weights.sum())

    def with_screen(self, interval: Tuple[float, float]) -> "BoundaryMesh":
        """Mark nodes in a contiguous parameter sub-interval as the screen."""
        a, b = float(interval[0]), float(interval[1])
        if not a < b:
            raise ValueError("screen interval must satisfy a < b")
        mask = (self.params >= a) & (self.params <= b)
        if not mask.any():
            raise ValueError("screen interval contains no mesh nodes")
        return replace(self, screen_mask=mask)

    def screen_indices(self) -> Optional[np.ndarray]:
        if self.screen_mask is None:
            return None
        return np.flatnonzero(self.screen_mask)

    def validate(self) -> None:
        n = self.n_nodes
        if self.nodes.shape != (n, 2) or self.normals.shape != (n, 2):
            raise ValueError("nodes/normals must have shape (n, 2)")
        norms = np.linalg.norm(self.normals, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("normals are not unit vectors")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        d2 = np.sum((self.nodes[:, None, :] - self.nodes[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        if np.min(d2) == 0.0:
            raise ValueError("mesh has coincident distinct nodes")


def discretize_curve(spec: CurveSpec, n: int) -> BoundaryMesh:
    """Discretize a curve into an n-node quadrature mesh.

    Smooth closed curves get uniform-in-parameter nodes (n even, n >= 8);
    arcs and polygons get graded midpoint panels (n >= 4), clustered with
    exponent 3 toward endpoints and corners.
    """
    n = int(n)
    if spec.closed and n < MIN_NODES_CLOSED:
        raise ValueError(f"closed curves need n >= {MIN_NODES_CLOSED}")
    if not spec.closed and n < MIN_NODES_ARC:
        raise ValueError(f"arcs need n >= {MIN_NODES_ARC}")

    if spec.smooth_closed:
        if n % 2:
            raise ValueError("spectral quadrature on closed curves needs an even n")
        t = 2 * math.pi * np.arange(n) / n
        x, dx, ddx = spec.parametrization(t)
        speed = np.linalg.norm(dx, axis=1)
        normals = np.stack([dx[:, 1], -dx[:, 0]], axis=1) / speed[:, None]
        curvature = (dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / speed**3
        weights = speed * (2 * math.pi / n)
        mesh = BoundaryMesh(nodes=x, normals=normals, weights=weights, params=t,
                            closed=True, tier="spectral", speed=speed,
                            curvature=curvature, spec=spec)
        mesh.validate()
        return mesh

    if spec.shape == "polygon":
        return _panel_mesh_polygon(spec, n)
    return _panel_mesh_arc(spec, n)


def _grade(u: np.ndarray, p: int = GRADING_EXPONENT) -> np.ndarray:
    """Symmetric endpoint grading on [0, 1] with exponent p."""
    up = u**p
    return up / (up + (1 - u) ** p)


def _grade_deriv(u: np.ndarray, p: int = GRADING_EXPONENT) -> np.ndarray:
    up, vp = u**p, (1 - u) ** p
    return p * u ** (p - 1) * (1 - u) ** (p - 1) / (up + vp) ** 2


def _panel_mesh_arc(spec: CurveSpec, n: int) -> BoundaryMesh:
    u_mid = (np.arange(n) + 0.5) / n
    edges_u = _grade(np.arange(n + 1) / n)
    mids_u = _grade(u_mid)
    x, dx, _ = spec.parametrization(mids_u)
    speed = np.linalg.norm(dx, axis=1)
    normals = np.stack([dx[:, 1], -dx[:, 0]], axis=1) / speed[:, None]

    if spec.shape == "segment":
        p0 = np.asarray(spec.endpoints[0])
        p1 = np.asarray(spec.endpoints[1])
        length = float(np.linalg.norm(p1 - p0))
        curvature = np.zeros(n)
    else:  # circular_arc: arclength proportional to parameter
        a0, a1 = spec.angle_range
        length = spec.radius * (a1 - a0)
        curvature = np.full(n, 1.0 / spec.radius)
    s_edges = length * edges_u
    s_mids = length * mids_u

    weights = np.diff(s_edges)
    halves = np.stack([s_mids - s_edges[:-1], s_edges[1:] - s_mids], axis=1)
    mesh = BoundaryMesh(nodes=x, normals=normals, weights=weights, params=mids_u,
                        closed=False, tier="panel", speed=speed,
                        curvature=curvature, panel_halves=halves, spec=spec,
                        u_nodes=u_mid, u_speed=length * _grade_deriv(u_mid),
                        edge_id=np.zeros(n, dtype=int))
    mesh.validate()
    return mesh


def _panel_mesh_polygon(spec: CurveSpec, n: int) -> BoundaryMesh:
    verts = np.asarray(spec.vertices, dtype=float)
    nv = len(verts)
    edge_vec = np.roll(verts, -1, axis=0) - verts
    edge_len = np.linalg.norm(edge_vec, axis=1)
    total = edge_len.sum()

    # largest-remainder apportionment, at least 2 panels per edge
    raw = n * edge_len / total
    counts = np.maximum(2, np.floor(raw).astype(int))
    while counts.sum() < n:
        counts[np.argmax(raw - counts)] += 1
    while counts.sum() > n and np.any(counts > 2):
        over = np.where(counts > 2)[0]
        counts[over[np.argmin((raw - counts)[over])]] -= 1

    nodes, normals, weights, params, halves = [], [], [], [], []
    u_nodes, u_speed, edge_id = [], [], []
    s_offset = 0.0
    for e in range(nv):
        m = counts[e]
        tang = edge_vec[e] / edge_len[e]
        nrm = np.array([tang[1], -tang[0]])
        u_mid = (np.arange(m) + 0.5) / m
        edges_u = _grade(np.arange(m + 1) / m)
        mids_u = _grade(u_mid)
        nodes.append(verts[e][None, :] + mids_u[:, None] * edge_vec[e][None, :])
        normals.append(np.tile(nrm, (m, 1)))
        s_edges = edge_len[e] * edges_u
        s_mids = edge_len[e] * mids_u
        weights.append(np.diff(s_edges))
        halves.append(np.stack([s_mids - s_edges[:-1], s_edges[1:] - s_mids], axis=1))
        params.append((s_offset + s_mids) / total)
        u_nodes.append(u_mid)
        u_speed.append(edge_len[e] * _grade_deriv(u_mid))
        edge_id.append(np.full(m, e, dtype=int))
        s_offset += edge_len[e]

    mesh = BoundaryMesh(nodes=np.concatenate(nodes), normals=np.concatenate(normals),
                        weights=np.concatenate(weights), params=np.concatenate(params),
                        closed=True, tier="panel", speed=np.ones(sum(counts)),
                        curvature=np.zeros(sum(counts)),
                        panel_halves=np.concatenate(halves), spec=spec,
                        u_nodes=np.concatenate(u_nodes), u_speed=np.concatenate(u_speed),
                        edge_id=np.concatenate(edge_id))
    mesh.validate()
    return mesh


def _signed_area(verts) -> float:
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper intersection test for open segments (shared endpoints ignored)."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _polygon_self_intersects(verts) -> bool:
    nv = len(verts)
    for i in range(nv):
        a1, a2 = verts[i], verts[(i + 1) % nv]
        for j in range(i + 1, nv):
            if j == i or (j + 1) % nv == i or (i + 1) % nv == j:
                continue
            if _segments_intersect(a1, a2, verts[j], verts[(j + 1) % nv]):
                return True
    return False


@dataclass(frozen=True)
class SamplingGrid:
    """Row-major tensor lattice of sampling points over a bounding box."""

    bbox: Tuple[float, float, float, float]
    nx: int
    ny: int
    points: np.ndarray  # (nx*ny, 2), point(i, j) = (xmin + j dx, ymin + i dy)

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    @property
    def xs(self) -> np.ndarray:
        return self.points[: self.nx, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.points[:: self.nx, 1]


def build_sampling_grid(bbox, nx: int, ny: int) -> SamplingGrid:
    """Build the exact tensor lattice over bbox = (xmin, xmax, ymin, ymax).

    With nx = 1 (resp. ny = 1) the single coordinate is xmin (resp. ymin).
    """
    xmin, xmax, ymin, ymax = (float(v) for v in bbox)
    if not (xmin < xmax and ymin < ymax):
        raise ValueError("degenerate bounding box")
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("grid counts must be >= 1")
    xs = xmin + (xmax - xmin) * np.arange(nx) / (nx - 1) if nx > 1 else np.array([xmin])
    ys = ymin + (ymax - ymin) * np.arange(ny) / (ny - 1) if ny > 1 else np.array([ymin])
    X, Y = np.meshgrid(xs, ys)  # row-major: rows follow y
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return SamplingGrid(bbox=(xmin, xmax, ymin, ymax), nx=nx, ny=ny, points=pts)


@dataclass(frozen=True)
class ProbeSegment:
    """Straight probe segment for screen tests, with quadrature node count."""

    p0: Tuple[float, float]
    p1: Tuple[float, float]
    n_quad: int = 16

    def __post_init__(self):
        if self.n_quad < 1:
            raise ValueError("probe segment needs n_quad >= 1")

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def quadrature(self):
        """Gauss-Legendre nodes (m, 2) and weights (m,) along the segment."""
        u, w = np.polynomial.legendre.leggauss(self.n_quad)
        p0 = np.asarray(self.p0)
        p1 = np.asarray(self.p1)
        pts = p0[None, :] + (0.5 * (u + 1.0))[:, None] * (p1 - p0)[None, :]
        return pts, 0.5 * self.length * w
