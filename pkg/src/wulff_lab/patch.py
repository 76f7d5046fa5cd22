"""Parameterized hypersurface patches: charts, frames, quadrature and transforms.

A patch is an analytic chart from a parameter rectangle (or interval) into
R^2 or R^3.  Charts are written in jet arithmetic, so positions come with
exact first and second parameter derivatives and the unit normal with exact
first derivatives.  Everything downstream (shape operators, variations) only
needs ``p, ∂p, N, ∂N`` at the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from . import jet as J
from .body import ConvexBody, make_body
from .jet import Jet2

DEFAULT_NODES = 48
DEFAULT_BOUNDARY_NODES = 96
GRAM_MIN = 1e-12
EDGES = ("u0", "u1", "v0", "v1")


class DegenerateChartError(ValueError):
    """The immersion is degenerate (tangents dependent) at an evaluation point."""


# -- charts ----------------------------------------------------------------


def _base_direction(base: Mapping[str, Any], dim: int, uv: Sequence[Jet2]) -> Jet2:
    kind = base.get("kind", "cap")
    if dim == 2:
        t = uv[0]
        return J.stack([J.cos(t), J.sin(t)])
    if kind == "cap":
        th, ph = uv
        s = J.sin(th)
        return J.stack([s * J.cos(ph), s * J.sin(ph), J.cos(th)])
    if kind == "perturbed":
        u, s = uv
        a = (J.cos(s * float(base.get("lobes", 3))) * float(base.get("eps", 0.0)) + 1.0) * float(
            np.tan(base["angle"])
        )
        r = u * a
        one = Jet2.constant(np.ones_like(u.val), u.nseeds)
        return J.stack([r * J.cos(s), r * J.sin(s), one])
    raise ValueError(f"unknown base domain {kind!r}")


def base_layout(base: Mapping[str, Any], dim: int):
    """Parameter domain, periodicity and true boundary edges of a base domain."""
    kind = base.get("kind", "arc" if dim == 2 else "cap")
    if dim == 2:
        if kind != "arc":
            raise ValueError("planar base domains are arcs")
        lo, hi = float(base.get("start", 0.0)), float(base.get("end", 2 * np.pi))
        closed = np.isclose(hi - lo, 2 * np.pi)
        return ((lo, hi),), (bool(closed),), () if closed else ("u0", "u1")
    if kind == "cap":
        alpha = float(base.get("angle", np.pi))
        if not 0 < alpha <= np.pi:
            raise ValueError("cap angle must lie in (0, pi]")
        closed = np.isclose(alpha, np.pi)
        return ((0.0, alpha), (0.0, 2 * np.pi)), (False, True), () if closed else ("u1",)
    if kind == "perturbed":
        return ((0.0, 1.0), (0.0, 2 * np.pi)), (False, True), ("u1",)
    raise ValueError(f"unknown base domain {kind!r}")


@dataclass(frozen=True)
class RadialChart:
    """``p = center + scale·ρ(x)x`` with ``x`` sweeping a base domain of the sphere."""

    shape: ConvexBody
    base: Mapping[str, Any]
    center: tuple[float, ...]
    scale: float

    def __call__(self, uv):
        x = _base_direction(self.base, self.shape.dim, uv)
        return self.shape.boundary_point_radial(x) * self.scale + np.asarray(self.center), None


@dataclass(frozen=True)
class WulffChart:
    """``∂K`` parameterized through its inverse Gauss map, ``p = center + scale·π_K(w)``."""

    body: ConvexBody
    center: tuple[float, ...]
    scale: float

    def __call__(self, uv):
        w = _base_direction({"kind": "cap"}, self.body.dim, uv)
        hj = self.body.h(J.seed_vector(w.val))
        grad = np.einsum("...ab,...bk->...ak", hj.hess, w.grad) * self.scale
        val = hj.grad * self.scale + np.asarray(self.center)
        p = Jet2(val, grad, np.full(grad.shape + (grad.shape[-1],), np.nan))
        return p, w


@dataclass(frozen=True)
class GraphChart:
    """Graph of ``H(1-(ρ/R)²)(1+τρcosφ/R)`` over the disk of radius ``R`` (polar parameters)."""

    radius: float
    height: float
    tilt: float

    def __call__(self, uv):
        rho, ph = uv
        c, s = J.cos(ph), J.sin(ph)
        q = rho / self.radius
        z = (1.0 - q * q) * (q * c * self.tilt + 1.0) * self.height
        return J.stack([rho * c, rho * s, z]), None


@dataclass(frozen=True)
class PlaneChart:
    height: float
    dim: int

    def __call__(self, uv):
        u = uv[0]
        h = Jet2.constant(np.full_like(u.val, self.height), u.nseeds)
        if self.dim == 2:
            return J.stack([u, h]), None
        return J.stack([u, uv[1], h]), None


@dataclass(frozen=True)
class TransformedChart:
    base: Any
    scale: float
    shift: tuple[float, ...]

    def __call__(self, uv):
        p, n = self.base(uv)
        return p * self.scale + np.asarray(self.shift), n


# -- patch -----------------------------------------------------------------


@dataclass(frozen=True)
class Patch:
    dim: int
    domain: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...]
    boundary_edges: tuple[str, ...]
    chart: Any
    orientation: int = 1
    kind: str = ""
    params: Mapping[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.domain)

    @property
    def closed(self) -> bool:
        return not self.boundary_edges


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    shape: tuple[int, ...]
    boundary: Mapping[str, tuple[np.ndarray, np.ndarray]]


@dataclass
class Frame:
    """Extrinsic geometry at a batch of parameter points.

    ``dp[:, i]`` and ``dN[:, i]`` are the partial derivatives along parameter ``i``;
    ``S`` is the shape operator in the coordinate basis (``B(∂_j p) = Σ_k S_kj ∂_k p``)
    and ``B`` the same endomorphism as an ambient matrix that kills ``N``.
    """

    uv: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    N: np.ndarray
    dN: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    dA: np.ndarray
    S: np.ndarray
    B: np.ndarray

    @property
    def n(self) -> int:
        return self.dp.shape[-2]

    def gradient(self, df: np.ndarray) -> np.ndarray:
        """Tangential gradient from parameter partials ``df`` (shape ``(M, n)``)."""
        return np.einsum("mij,mj,mia->ma", self.ginv, df, self.dp)

    def tangential(self, v: np.ndarray) -> np.ndarray:
        return v - np.sum(v * self.N, axis=-1, keepdims=True) * self.N


def _normal_from_tangents(p: Jet2, n: int, d: int) -> Jet2:
    tangents = [p.partial(i) for i in range(n)]
    if n == 2:
        return J.normalize(J.cross(tangents[0], tangents[1]))
    t = tangents[0]
    return J.normalize(J.stack([t.component(1), -t.component(0)]))


def evaluate(patch: Patch, uv, check: bool = True) -> Frame:
    """Frame data at parameter points ``uv`` (shape ``(M, n)``)."""
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    n, d = patch.n, patch.dim
    seeds = J.seed([uv[:, i] for i in range(n)])
    p, hint = patch.chart(seeds)
    try:
        N = _normal_from_tangents(p, n, d) if hint is None else hint
    except J.JetError as exc:
        raise DegenerateChartError(f"no unit normal: {exc}") from exc
    N = N * float(patch.orientation)
    dp = np.swapaxes(p.grad, -1, -2)
    dN = np.swapaxes(N.grad, -1, -2)
    g = np.einsum("mia,mja->mij", dp, dp)
    det = np.linalg.det(g)
    if check and np.any(det <= GRAM_MIN):
        raise DegenerateChartError(f"Gram determinant {det.min():.3e} below {GRAM_MIN}")
    ginv = np.linalg.inv(g)
    M = np.einsum("mia,mja->mij", dp, dN)
    S = -np.einsum("mik,mkj->mij", ginv, M)
    B = -np.einsum("mia,mij,mjb->mab", dN, ginv, dp)
    return Frame(uv, p.val, dp, N.val, dN, g, ginv, np.sqrt(det), S, B)


def frame(patch: Patch, uv):
    """``(position, tangent basis, N, metric, area element)`` at ``uv``."""
    f = evaluate(patch, uv)
    return f.p, f.dp, f.N, f.g, f.dA


def shape_operator(patch: Patch, uv) -> np.ndarray:
    """Shape operator ``B = -dN`` as an ambient matrix acting on the tangent plane."""
    return evaluate(patch, uv).B


def weingarten_asymmetry(fr: Frame) -> np.ndarray:
    return np.abs(fr.B - np.swapaxes(fr.B, -1, -2)).max(axis=(-1, -2))


# -- quadrature --------------------------------------------------------------


def _gauss(lo: float, hi: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def edge_points(patch: Patch, edge: str, s) -> np.ndarray:
    """Parameter points on a domain edge; ``s`` runs along the free parameter."""
    if edge not in EDGES[: 2 * patch.n]:
        raise ValueError(f"edge {edge!r} does not exist for a {patch.n}-parameter patch")
    axis = 0 if edge[0] == "u" else 1
    fixed = patch.domain[axis][int(edge[1])]
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if patch.n == 1:
        return np.full((max(1, s.size), 1), fixed)
    uv = np.empty((s.size, 2))
    uv[:, axis] = fixed
    uv[:, 1 - axis] = s
    return uv


def _trapezoid(lo: float, hi: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    # spectrally accurate for smooth periodic integrands
    step = (hi - lo) / count
    return lo + step * (np.arange(count) + 0.5), np.full(count, step)


def _composite(lo: float, hi: float, count: int, breaks: Sequence[float],
               periodic: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels split at ``breaks``, nodes shared in proportion to panel length.

    Periodic axes use the midpoint trapezoid rule instead.
    """
    if periodic:
        return _trapezoid(lo, hi, count)
    cuts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    if len(cuts) == 2:
        return _gauss(lo, hi, count)
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        x, w = _gauss(a, b, max(8, int(round(count * (b - a) / (hi - lo)))))
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def make_grid(patch: Patch, nodes: int | Sequence[int] = DEFAULT_NODES,
              boundary_nodes: int = DEFAULT_BOUNDARY_NODES,
              breaks: Mapping[int, Sequence[float]] | None = None) -> QuadratureGrid:
    """Tensor quadrature grid on the parameter domain plus edge rules.

    ``breaks`` maps a parameter axis to interior points where the integrand
    may lose smoothness; the rule along that axis is split into panels there.
    """
    breaks = breaks or {}
    counts = [nodes] * patch.n if np.isscalar(nodes) else list(nodes)
    rules = [_composite(lo, hi, c, breaks.get(i, ()), per) for i, ((lo, hi), c, per) in
             enumerate(zip(patch.domain, counts, patch.periodic))]
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wts = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    boundary = {}
    for edge in patch.boundary_edges:
        if patch.n == 1:
            boundary[edge] = (edge_points(patch, edge, [0.0]), np.ones(1))
            continue
        axis = 0 if edge[0] == "u" else 1
        lo, hi = patch.domain[1 - axis]
        s, w = _composite(lo, hi, boundary_nodes, breaks.get(1 - axis, ()), patch.periodic[1 - axis])
        boundary[edge] = (edge_points(patch, edge, s), w)
    return QuadratureGrid(pts, wts, tuple(len(r[0]) for r in rules), boundary)


def integrate(values: np.ndarray, fr: Frame, grid: QuadratureGrid) -> float:
    return float(np.sum(values * fr.dA * grid.weights))


def area(patch: Patch, grid: QuadratureGrid) -> float:
    fr = evaluate(patch, grid.nodes)
    return integrate(np.ones(len(grid.weights)), fr, grid)


def algebraic_volume(patch: Patch, grid: QuadratureGrid) -> float:
    fr = evaluate(patch, grid.nodes)
    return integrate(np.sum(fr.p * fr.N, axis=-1), fr, grid) / (patch.n + 1)


# -- boundary --------------------------------------------------------------


@dataclass
class BoundaryFrame:
    """Geometry along one boundary edge.

    ``ds`` is the length element with respect to the edge parameter (1 for the
    endpoints of a curve); ``tangent`` is zero for curves.
    """

    edge: str
    frame: Frame
    tangent: np.ndarray
    conormal: np.ndarray
    ds: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return self.frame.p

    @property
    def N(self) -> np.ndarray:
        return self.frame.N


def boundary_frame(patch: Patch, edge: str, s=None) -> BoundaryFrame:
    """Unit tangent, inner conormal ``ν`` and normal along a true boundary edge."""
    if edge not in patch.boundary_edges:
        raise ValueError(f"edge {edge!r} is not a boundary edge of this patch")
    uv = edge_points(patch, edge, [0.0] if s is None else s)
    fr = evaluate(patch, uv)
    axis = 0 if edge[0] == "u" else 1
    inward = 1.0 if edge[1] == "0" else -1.0
    across = fr.dp[:, axis] * inward
    if patch.n == 1:
        tangent = np.zeros_like(across)
        ds = np.ones(len(uv))
    else:
        along = fr.dp[:, 1 - axis]
        ds = np.linalg.norm(along, axis=-1)
        tangent = along / ds[:, None]
        across = across - np.sum(across * tangent, axis=-1, keepdims=True) * tangent
    conormal = across / np.linalg.norm(across, axis=-1, keepdims=True)
    return BoundaryFrame(edge, fr, tangent, conormal, ds)


def boundary_integral(values_by_edge: Mapping[str, np.ndarray], bframes: Mapping[str, BoundaryFrame],
                      grid: QuadratureGrid) -> float:
    total = 0.0
    for edge in sorted(bframes):
        bf = bframes[edge]
        total += float(np.sum(values_by_edge[edge] * bf.ds * grid.boundary[edge][1]))
    return total


def boundary_frames(patch: Patch, grid: QuadratureGrid) -> dict[str, BoundaryFrame]:
    out = {}
    for edge in patch.boundary_edges:
        uv = grid.boundary[edge][0]
        axis = 0 if edge[0] == "u" else 1
        s = uv[:, 1 - axis] if patch.n == 2 else None
        out[edge] = boundary_frame(patch, edge, s)
    return out


# -- transforms and construction ----------------------------------------------


def transform(patch: Patch, dilation: float, translation=None) -> Patch:
    """The patch ``p ↦ λp + c`` with the normal carried along unchanged."""
    if not dilation > 0:
        raise ValueError("dilation factor must be positive")
    c = np.zeros(patch.dim) if translation is None else np.asarray(translation, dtype=float)
    chart = TransformedChart(patch.chart, float(dilation), tuple(float(x) for x in c))
    params = dict(patch.params, dilation=float(dilation), translation=[float(x) for x in c])
    return replace(patch, chart=chart, params=params)


def make_patch(spec: Mapping[str, Any], body: ConvexBody | None = None, dim: int | None = None) -> Patch:
    """Build a catalog patch from a scenario ``surface`` entry.

    ``body`` is the default shape for ``radial`` and ``wulff`` charts.
    """
    kind = spec["kind"]
    params = dict(spec.get("params", {}))
    dim = dim or (body.dim if body is not None else int(params.get("dim", 3)))
    orient = spec.get("orientation", "outer")
    if orient not in ("outer", "inner"):
        raise ValueError("orientation must be 'outer' or 'inner'")
    sign = 1 if orient == "outer" else -1
    center = tuple(float(x) for x in params.get("center", [0.0] * dim))
    scale = float(params.get("scale", 1.0))
    if len(center) != dim or scale <= 0:
        raise ValueError("bad center or scale")

    def shape_body():
        if "shape" in params:
            sh = params["shape"]
            return make_body(sh["kind"], sh.get("params", {}), dim)
        if body is None:
            raise ValueError(f"{kind} surfaces need a body")
        return body

    if kind == "radial":
        base = params.get("base", {"kind": "arc" if dim == 2 else "cap"})
        domain, periodic, edges = base_layout(base, dim)
        chart = RadialChart(shape_body(), base, center, scale)
    elif kind == "wulff":
        base = {"kind": "arc"} if dim == 2 else {"kind": "cap", "angle": np.pi}
        domain, periodic, edges = base_layout(base, dim)
        chart = WulffChart(shape_body(), center, scale)
    elif kind == "graph":
        if dim != 3:
            raise ValueError("graph patches live in R^3")
        radius = float(params.get("radius", 1.0))
        domain, periodic, edges = ((0.0, radius), (0.0, 2 * np.pi)), (False, True), ("u1",)
        chart = GraphChart(radius, float(params.get("height", 1.0)), float(params.get("tilt", 0.0)))
    elif kind == "plane":
        a = float(params.get("half_width", 1.0))
        n = dim - 1
        domain, periodic = ((-a, a),) * n, (False,) * n
        edges = EDGES[: 2 * n]
        chart = PlaneChart(float(params.get("height", 0.0)), dim)
    else:
        raise ValueError(f"unknown surface kind {kind!r}")
    return Patch(dim, domain, periodic, edges, chart, sign, kind, params)
