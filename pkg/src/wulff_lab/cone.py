"""Solid cones over spherical domains and the free-boundary angle geometry."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import jet as J
from .aniso import aniso_at, conormal_from
from .body import ConvexBody
from .patch import (
    BoundaryFrame,
    Patch,
    QuadratureGrid,
    boundary_frame,
    boundary_frames,
    evaluate,
    integrate,
)

KINDS = ("none", "half-space", "circular", "perturbed", "planar-wedge")
CONTAINMENT_TOL = 1e-8
VERTEX_TOL = 1e-8
STATIONARY_TOL = 1e-6
STRICT_CONVEXITY_MIN = 1e-6
CERTIFICATE_SAMPLES = 720


class ContainmentError(ValueError):
    """A boundary point does not lie on the cone boundary (or hits the vertex)."""


@dataclass(frozen=True)
class CurveData:
    """Base curve and inner normal with ``s``-derivatives at sample parameters."""

    gamma: np.ndarray
    dgamma: np.ndarray
    ddgamma: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray


@dataclass(frozen=True)
class SolidCone:
    """The cone ``{λx : λ > 0, x ∈ D}`` with vertex at the origin.

    In R^3 the base domain ``D`` is bounded by a closed curve ``γ(s)`` on the
    unit sphere traversed with ``D`` on its left, so ``ξ = γ×γ'/|γ×γ'|`` is
    the inner normal.  In R^2 the cone is a wedge between two rays.
    """

    kind: str
    dim: int
    params: Mapping[str, Any] = field(default_factory=dict)

    # -- base curve ---------------------------------------------------------

    def gamma_jet(self, s) -> J.Jet2:
        (t,) = J.seed([np.asarray(s, dtype=float)])
        if self.kind in ("circular", "half-space"):
            if self.kind == "half-space":
                sa, ca = 1.0, 0.0  # exact equator, so the wall is exactly flat
            else:
                alpha = float(self.params["angle"])
                sa, ca = np.sin(alpha), np.cos(alpha)
            z = J.Jet2.constant(np.full_like(t.val, ca), 1)
            return J.stack([J.cos(t) * sa, J.sin(t) * sa, z])
        if self.kind == "perturbed":
            a = (J.cos(t * float(self.params.get("lobes", 3))) * float(self.params.get("eps", 0.0))
                 + 1.0) * float(np.tan(self.params["angle"]))
            one = J.Jet2.constant(np.ones_like(t.val), 1)
            return J.normalize(J.stack([a * J.cos(t), a * J.sin(t), one]))
        raise ValueError(f"cone kind {self.kind!r} has no base curve")

    def curve(self, s) -> CurveData:
        g = self.gamma_jet(s)
        dg = g.partial(0)
        g1 = J.Jet2(g.val, g.grad, np.zeros(g.hess.shape))
        xi = J.normalize(J.cross(g1, dg))
        return CurveData(g.val, g.grad[..., 0], g.hess[..., 0, 0], xi.val, xi.grad[..., 0])

    # -- planar wedge -------------------------------------------------------

    @property
    def rays(self) -> tuple[np.ndarray, np.ndarray]:
        b0, b1 = float(self.params["start"]), float(self.params["end"])
        return np.array([np.cos(b0), np.sin(b0)]), np.array([np.cos(b1), np.sin(b1)])

    @property
    def wedge_normals(self) -> tuple[np.ndarray, np.ndarray]:
        b0, b1 = float(self.params["start"]), float(self.params["end"])
        return np.array([-np.sin(b0), np.cos(b0)]), np.array([np.sin(b1), -np.cos(b1)])

    # -- convexity ----------------------------------------------------------

    @property
    def certificate(self) -> float:
        """Minimum over the base curve of the cross-ruling ``II`` at ``r = 1``."""
        if self.dim == 2:
            return 0.0
        s = np.linspace(0, 2 * np.pi, CERTIFICATE_SAMPLES, endpoint=False)
        c = self.curve(s)
        ii = -np.sum(c.dxi * c.dgamma, axis=-1) / np.sum(c.dgamma**2, axis=-1)
        return float(ii.min())

    @property
    def convex(self) -> bool:
        if self.dim == 2:
            return float(self.params["end"]) - float(self.params["start"]) <= np.pi + 1e-12
        return self.certificate >= -1e-10

    @property
    def strictly_convex(self) -> bool:
        return self.dim == 3 and self.certificate > STRICT_CONVEXITY_MIN


def make_cone(spec: Mapping[str, Any] | None, dim: int = 3) -> SolidCone | None:
    if not spec or spec.get("kind", "none") == "none":
        return None
    kind = spec["kind"]
    params = dict(spec.get("params", {}))
    if kind not in KINDS:
        raise ValueError(f"unknown cone kind {kind!r}; expected one of {KINDS}")
    if kind == "planar-wedge":
        if dim != 2:
            raise ValueError("planar wedges live in R^2")
        if not 0 < float(params["end"]) - float(params["start"]) < 2 * np.pi:
            raise ValueError("wedge opening must lie in (0, 2pi)")
    elif dim != 3:
        raise ValueError(f"{kind} cones live in R^3")
    if kind in ("circular", "perturbed") and not 0 < float(params["angle"]) < np.pi:
        raise ValueError("cone half-angle must lie in (0, pi)")
    cone = SolidCone(kind, dim, params)
    if kind == "perturbed" and not cone.convex:
        raise ValueError("perturbed base curve is not convex; reduce eps")
    return cone


# -- charts and location -------------------------------------------------------


@dataclass(frozen=True)
class ConeChartPoint:
    point: np.ndarray
    tangents: np.ndarray  # rows: ∂_r P = γ, ∂_s P = rγ'
    xi: np.ndarray
    ii: np.ndarray  # II in the basis of ``tangents``


def boundary_chart(cone: SolidCone, r, s) -> ConeChartPoint:
    """The boundary chart ``P(r, s) = rγ(s)`` (for wedges ``s`` picks the ray)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("the cone vertex is excluded: r must be positive")
    if cone.dim == 2:
        k = np.asarray(s, dtype=int)
        dirs = np.array(cone.rays)[k]
        xi = np.array(cone.wedge_normals)[k]
        return ConeChartPoint(r[..., None] * dirs, dirs[..., None, :], xi,
                              np.zeros(r.shape + (1, 1)))
    c = cone.curve(s)
    ii = np.zeros(np.broadcast_shapes(r.shape, c.gamma.shape[:-1]) + (2, 2))
    ii[..., 1, 1] = -r * np.sum(c.dxi * c.dgamma, axis=-1)
    tangents = np.stack(np.broadcast_arrays(c.gamma, r[..., None] * c.dgamma), axis=-2)
    return ConeChartPoint(r[..., None] * c.gamma, tangents, c.xi, ii)


@dataclass(frozen=True)
class ConeLocation:
    r: np.ndarray
    s: np.ndarray
    distance: np.ndarray
    xi: np.ndarray


def locate(cone: SolidCone, p) -> ConeLocation:
    """Invert the boundary chart: nearest ``(r, s)`` for points near ``∂C``.

    In R^3, ``s`` is found by Newton iteration on ``⟨γ(s) - p/|p|, γ'(s)⟩ = 0``
    started from the polar angle of ``p``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    r = np.linalg.norm(p, axis=-1)
    if np.any(r <= VERTEX_TOL):
        raise ContainmentError("boundary point at the cone vertex")
    if cone.dim == 2:
        dirs, normals = np.array(cone.rays), np.array(cone.wedge_normals)
        along = p @ dirs.T
        off = np.abs(p @ normals.T)
        off = np.where(along > 0, off, np.inf)
        k = np.argmin(off, axis=-1)
        dist = off[np.arange(len(p)), k]
        return ConeLocation(r, k, dist, normals[k])
    x = p / r[:, None]
    # every catalog base curve has polar angle s about the cone axis
    s = np.arctan2(x[:, 1], x[:, 0])
    for _ in range(50):
        c = cone.curve(s)
        diff = c.gamma - x
        f = np.sum(diff * c.dgamma, axis=-1)
        df = np.sum(c.dgamma**2, axis=-1) + np.sum(diff * c.ddgamma, axis=-1)
        step = f / df
        s = s - step
        if np.abs(step).max() < 1e-15:
            break
    s = np.mod(s, 2 * np.pi)
    c = cone.curve(s)
    dist = r * np.linalg.norm(c.gamma - x, axis=-1)
    return ConeLocation(r, s, dist, c.xi)


def second_fundamental_form(cone: SolidCone, loc: ConeLocation, y1, y2) -> np.ndarray:
    """``II(Y1, Y2) = -⟨D_{Y1} ξ, Y2⟩`` for vectors tangent to ``∂C`` at located points."""
    if cone.dim == 2:
        return np.zeros(len(loc.r))
    c = cone.curve(loc.s)
    g2 = np.sum(c.dgamma**2, axis=-1)
    b1 = np.sum(y1 * c.dgamma, axis=-1) / (loc.r * g2)
    b2 = np.sum(y2 * c.dgamma, axis=-1) / (loc.r * g2)
    return -b1 * b2 * loc.r * np.sum(c.dxi * c.dgamma, axis=-1)


def validate_containment(cone: SolidCone, patch: Patch, grid: QuadratureGrid) -> dict[str, ConeLocation]:
    """Locate every boundary node on ``∂C``; raise if any is off by more than the tolerance."""
    if patch.closed:
        raise ContainmentError("a patch in a cone must have boundary on the cone")
    out = {}
    for edge in patch.boundary_edges:
        fr = evaluate(patch, grid.boundary[edge][0])
        loc = locate(cone, fr.p)
        if loc.distance.max() > CONTAINMENT_TOL:
            raise ContainmentError(
                f"edge {edge}: boundary lies {loc.distance.max():.3e} away from the cone boundary"
            )
        out[edge] = loc
    return out


# -- angle frame -------------------------------------------------------------


@dataclass
class BoundaryAngleFrame:
    xi: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    frame_residual: float  # decomposition of ν and N in {ξ, μ}
    identity_residual: float  # ⟨N_K,μ⟩ = ⟨ν_K,ξ⟩ and ⟨N_K,ξ⟩ = -⟨ν_K,μ⟩


def angle_frame_from(body: ConvexBody, bf: BoundaryFrame, xi: np.ndarray) -> BoundaryAngleFrame:
    nu, N = bf.conormal, bf.N
    theta = np.arctan2(np.sum(xi * N, -1), np.sum(xi * nu, -1))
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    mu = -s * nu + c * N
    res = max(np.abs(nu - (c * xi - s * mu)).max(), np.abs(N - (s * xi + c * mu)).max())
    af = aniso_at(body, bf.frame)
    nuK = conormal_from(body, bf, af)
    ident = max(
        np.abs(np.sum(af.NK * mu, -1) - np.sum(nuK * xi, -1)).max(),
        np.abs(np.sum(af.NK * xi, -1) + np.sum(nuK * mu, -1)).max(),
    )
    return BoundaryAngleFrame(xi, mu, theta, float(res), float(ident))


def angle_frame(cone: SolidCone, body: ConvexBody, patch: Patch, edge: str, s=None) -> BoundaryAngleFrame:
    bf = boundary_frame(patch, edge, s)
    loc = locate(cone, bf.p)
    if loc.distance.max() > CONTAINMENT_TOL:
        raise ContainmentError("boundary point is not on the cone boundary")
    return angle_frame_from(body, bf, loc.xi)


# -- stationarity and the Minkowski identity ------------------------------------


def stationarity_residuals(cone: SolidCone | None, body: ConvexBody, patch: Patch,
                           grid: QuadratureGrid) -> tuple[float, float]:
    """Spread of ``H_K`` over interior nodes and ``sup |⟨N_K, ξ⟩|`` along the boundary."""
    af = aniso_at(body, evaluate(patch, grid.nodes))
    spread = float(af.HK.max() - af.HK.min())
    if cone is None or patch.closed:
        return spread, 0.0
    locs = validate_containment(cone, patch, grid)
    sup = 0.0
    for edge, bf in boundary_frames(patch, grid).items():
        nk = aniso_at(body, bf.frame).NK
        sup = max(sup, float(np.abs(np.sum(nk * locs[edge].xi, -1)).max()))
    return spread, sup


def is_stationary(residuals: tuple[float, float], tol: float = STATIONARY_TOL) -> bool:
    return residuals[0] < tol and residuals[1] < tol


def minkowski_residual(cone: SolidCone | None, body: ConvexBody, patch: Patch,
                       grid: QuadratureGrid) -> float:
    """``|∫(φ_K + H_K⟨p,N⟩)dΣ| / A_K`` with the pointwise ``H_K``."""
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    integrand = af.phi + af.HK * np.sum(fr.p * fr.N, -1)
    return abs(integrate(integrand, fr, grid)) / integrate(af.phi, fr, grid)
