"""Second-order deformations of patches and the variational formulas they test.

A deformation is stored as its 2-jet ``F_t = p + tX + (t²/2)Z`` (optionally
with a cubic term ``(t³/6)W`` used only to show that second derivatives
ignore it).  Derivatives at ``t = 0`` are taken two ways: by closed-form
integrals over the undeformed patch, and by finite differences of functionals
evaluated on deformed copies of the quadrature nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import jet as J
from .aniso import AnisoFrame, aniso_at, conormal_from
from .body import ConvexBody
from .cone import (
    STATIONARY_TOL,
    SolidCone,
    angle_frame_from,
    is_stationary,
    locate,
    second_fundamental_form,
    stationarity_residuals,
    validate_containment,
)
from .patch import (
    DegenerateChartError,
    Frame,
    Patch,
    QuadratureGrid,
    boundary_frames,
    boundary_integral,
    edge_points,
    evaluate,
    integrate,
)

DEFAULT_STEP = 1e-3
COLLAR_FRACTION = 0.2
COLLAR_FD_STEP = 1e-3
VOLUME_MIN = 1e-8


class VariationError(ValueError):
    """A variation was requested outside the setting where it is defined."""


# -- vector fields on a patch --------------------------------------------------
#
# A field maps a frame (plus its anisotropic data) to values ``X`` of shape
# (M, d) and parameter derivatives ``dX`` of shape (M, n, d).


@dataclass(frozen=True)
class ConstantField:
    vector: tuple[float, ...]

    def __call__(self, fr: Frame, af: AnisoFrame):
        c = np.broadcast_to(np.asarray(self.vector, dtype=float), fr.p.shape).copy()
        return c, np.zeros_like(fr.dp)


@dataclass(frozen=True)
class RadialField:
    """``X(p) = p``, the velocity of the dilation ``e^t p``."""

    def __call__(self, fr, af):
        return fr.p.copy(), fr.dp.copy()


@dataclass(frozen=True)
class NormalField:
    """The Euclidean unit normal."""

    def __call__(self, fr, af):
        return fr.N.copy(), fr.dN.copy()


@dataclass(frozen=True)
class NormalBumpField:
    """``X = a·exp(⟨k, p⟩)N``."""

    amplitude: float
    wave: tuple[float, ...]

    def __call__(self, fr, af):
        k = np.asarray(self.wave, dtype=float)
        f = self.amplitude * np.exp(fr.p @ k)
        df = f[:, None] * np.einsum("mia,a->mi", fr.dp, k)
        X = f[:, None] * fr.N
        dX = df[..., None] * fr.N[:, None, :] + f[:, None, None] * fr.dN
        return X, dX


@dataclass(frozen=True)
class AnisoNormalField:
    """``X = N_K``, with ``∂_i X = Hess h_K(N) ∂_i N``."""

    def __call__(self, fr, af):
        return af.NK.copy(), af.dNK.copy()


@dataclass(frozen=True)
class ZeroField:
    def __call__(self, fr, af):
        return np.zeros_like(fr.p), np.zeros_like(fr.dp)


@dataclass(frozen=True)
class TableField:
    """Values given at a fixed set of points, matched by position.

    Only usable by the analytic first variation: a table carries no
    derivatives, so deformed copies of the patch cannot be built from it.
    """

    points: np.ndarray
    values: np.ndarray
    match_tol: float = 1e-12

    def __call__(self, fr, af):
        dist = np.linalg.norm(fr.p[:, None, :] - self.points[None], axis=-1)
        idx = np.argmin(dist, axis=-1)
        if dist[np.arange(len(idx)), idx].max() > self.match_tol:
            raise VariationError("table field does not cover the requested points")
        return self.values[idx], np.full(fr.dp.shape, np.nan)


def table_field(patch: Patch, grid: QuadratureGrid, fn) -> TableField:
    """Tabulate ``fn(p) -> X`` on the interior and boundary nodes of ``grid``."""
    pts = [evaluate(patch, grid.nodes).p]
    pts += [evaluate(patch, grid.boundary[e][0]).p for e in sorted(grid.boundary)]
    pts = np.concatenate(pts)
    return TableField(pts, np.asarray(fn(pts), dtype=float))


def _smootherstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (x * (6 * x - 15) + 10), 30 * x**2 * (x - 1) ** 2


def cone_acceleration(cone: SolidCone, p: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Second derivative of the cone-chart curve through ``p ∈ ∂C`` with velocity ``X``.

    ``X`` is split as ``ṙγ(s) + ṡ·rγ'(s)``; the curve ``(r + tṙ)γ(s + tṡ)``
    lies in ``∂C`` and has acceleration ``2ṙṡγ' + rṡ²γ''``.
    """
    if cone.dim == 2:
        return np.zeros_like(p)
    loc = locate(cone, p)
    c = cone.curve(loc.s)
    rdot = np.sum(X * c.gamma, -1)
    sdot = np.sum(X * c.dgamma, -1) / (loc.r * np.sum(c.dgamma**2, -1))
    return (2 * rdot * sdot)[:, None] * c.dgamma + (loc.r * sdot**2)[:, None] * c.ddgamma


@dataclass(frozen=True)
class ConeCollarField:
    """Acceleration keeping the boundary on the cone to second order.

    On a boundary edge the value is the second derivative of the cone-chart
    curve ``t ↦ (r + tṙ)γ(s + tṡ)`` whose velocity is ``N_K``.  Inside the
    patch that edge value is carried along the transverse parameter and faded
    out by a quintic smoothstep over a collar of the parameter range.
    """

    body: ConvexBody
    patch: Patch
    cone: SolidCone
    fraction: float = COLLAR_FRACTION

    def edge_value(self, edge: str, s) -> np.ndarray:
        uv = edge_points(self.patch, edge, s)
        fr = evaluate(self.patch, uv)
        if self.cone.dim == 2:
            # straight walls: the chart curve is a line, no acceleration
            return np.zeros_like(fr.p)
        return cone_acceleration(self.cone, fr.p, aniso_at(self.body, fr).NK)

    def __call__(self, fr, af):
        Z = np.zeros_like(fr.p)
        dZ = np.zeros_like(fr.dp)
        uv = fr.uv
        for edge in self.patch.boundary_edges:
            axis = 0 if edge[0] == "u" else 1
            lo, hi = self.patch.domain[axis]
            fixed = self.patch.domain[axis][int(edge[1])]
            width = self.fraction * (hi - lo)
            offset = uv[:, axis] - fixed
            S, dS = _smootherstep(np.abs(offset) / width)
            inside = np.abs(offset) < width
            if not inside.any():
                continue
            chi = (1.0 - S)[inside]
            dchi = (-dS / width * np.sign(offset))[inside]
            if self.patch.n == 1:
                zb = self.edge_value(edge, None)
                Z[inside] += chi[:, None] * zb
                dZ[inside, 0] += dchi[:, None] * zb
                continue
            s = uv[inside, 1 - axis]
            zb = self.edge_value(edge, s)
            h = COLLAR_FD_STEP
            f = {k: self.edge_value(edge, s + k * h) for k in (-2, -1, 1, 2)}
            dzb = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
            Z[inside] += chi[:, None] * zb
            dZ[inside, axis] += dchi[:, None] * zb
            dZ[inside, 1 - axis] += chi[:, None] * dzb
        return Z, dZ


def make_field(spec: Mapping[str, Any], dim: int):
    kind = spec["kind"]
    if kind == "constant":
        v = tuple(float(x) for x in spec["vector"])
        if len(v) != dim:
            raise ValueError("constant field has the wrong dimension")
        return ConstantField(v)
    if kind == "radial":
        return RadialField()
    if kind == "normal":
        return NormalField()
    if kind == "normal-bump":
        k = tuple(float(x) for x in spec.get("wave", [0.0] * dim))
        if len(k) != dim:
            raise ValueError("wave vector has the wrong dimension")
        return NormalBumpField(float(spec.get("amplitude", 1.0)), k)
    if kind == "aniso-normal":
        return AnisoNormalField()
    if kind == "zero":
        return ZeroField()
    raise ValueError(f"unknown field kind {kind!r}")


# -- the 2-jet ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryRates:
    """Cone-chart velocities ``(ṙ, ṡ)`` of ``N_K`` at boundary nodes and the tangency residual."""

    rdot: np.ndarray
    sdot: np.ndarray
    tangency: float


@dataclass(frozen=True)
class Variation2Jet:
    X: Any
    Z: Any = field(default_factory=ZeroField)
    mode: str = "generic"
    cone: SolidCone | None = None
    boundary: Mapping[str, BoundaryRates] = field(default_factory=dict)
    W: Any = None

    def with_cubic(self, W) -> Variation2Jet:
        return Variation2Jet(self.X, self.Z, self.mode, self.cone, self.boundary, W)


def build_generic_variation(patch: Patch, X, Z=None) -> Variation2Jet:
    """Wrap catalog fields (or their JSON specs) as a generic variation."""
    if isinstance(X, Mapping):
        X = make_field(X, patch.dim)
    if isinstance(Z, Mapping):
        Z = make_field(Z, patch.dim)
    return Variation2Jet(X, Z or ZeroField(), "generic")


def build_wulff_normal_variation(body: ConvexBody, patch: Patch, cone: SolidCone | None = None,
                                 grid: QuadratureGrid | None = None) -> Variation2Jet:
    """``X = N_K`` with an acceleration that keeps ``∂Σ`` on ``∂C`` to second order.

    Without a cone the acceleration is zero.  With a cone the patch must be
    stationary, since otherwise ``N_K`` is not tangent to ``∂C``.
    """
    if cone is None:
        return Variation2Jet(AnisoNormalField(), ZeroField(), "aniso-normal")
    if grid is None:
        raise VariationError("a grid is needed to check stationarity against the cone")
    res = stationarity_residuals(cone, body, patch, grid)
    if not is_stationary(res):
        raise VariationError(
            f"patch is not stationary in the cone (H_K spread {res[0]:.3e}, "
            f"sup|<N_K, xi>| {res[1]:.3e}); N_K cannot be tangent to the cone"
        )
    rates = {}
    for edge, bf in boundary_frames(patch, grid).items():
        nk = aniso_at(body, bf.frame).NK
        loc = locate(cone, bf.p)
        tang = float(np.abs(np.sum(nk * loc.xi, -1)).max())
        if cone.dim == 2:
            dirs = np.array(cone.rays)[loc.s]
            rates[edge] = BoundaryRates(np.sum(nk * dirs, -1), np.zeros(len(nk)), tang)
            continue
        c = cone.curve(loc.s)
        rdot = np.sum(nk * c.gamma, -1)
        sdot = np.sum(nk * c.dgamma, -1) / (loc.r * np.sum(c.dgamma**2, -1))
        rates[edge] = BoundaryRates(rdot, sdot, tang)
    return Variation2Jet(AnisoNormalField(), ConeCollarField(body, patch, cone), "aniso-normal",
                         cone, rates)


def collar_breaks(patch: Patch, fraction: float = COLLAR_FRACTION) -> dict[int, list[float]]:
    """Parameter values of the collar seams, for splitting quadrature panels there."""
    out: dict[int, list[float]] = {}
    for edge in patch.boundary_edges:
        axis = 0 if edge[0] == "u" else 1
        lo, hi = patch.domain[axis]
        seam = lo + fraction * (hi - lo) if edge[1] == "0" else hi - fraction * (hi - lo)
        out.setdefault(axis, []).append(seam)
    return out


def collar_seam_residual(jet: Variation2Jet, patch: Patch, samples: int = 16) -> float:
    """Size of ``Z`` and its parameter derivatives just inside the collar seams."""
    Zf = jet.Z
    if not isinstance(Zf, ConeCollarField) or patch.n != 2:
        return 0.0
    body = Zf.body
    worst = 0.0
    for edge in patch.boundary_edges:
        axis = 0 if edge[0] == "u" else 1
        lo, hi = patch.domain[axis]
        fixed = patch.domain[axis][int(edge[1])]
        seam = fixed + (1 if edge[1] == "0" else -1) * Zf.fraction * (hi - lo) * (1 - 1e-9)
        a, b = patch.domain[1 - axis]
        uv = np.empty((samples, 2))
        uv[:, axis] = seam
        uv[:, 1 - axis] = np.linspace(a, b, samples, endpoint=False)
        fr = evaluate(patch, uv)
        Z, dZ = Zf(fr, aniso_at(body, fr))
        worst = max(worst, float(np.abs(Z).max()), float(np.abs(dZ).max()))
    return worst


# -- node data and deformation ------------------------------------------------


@dataclass
class _Nodes:
    fr: Frame
    af: AnisoFrame
    X: np.ndarray
    dX: np.ndarray
    Z: np.ndarray
    dZ: np.ndarray
    W: np.ndarray | None
    dW: np.ndarray | None
    sign: np.ndarray


def _raw_normal(T: np.ndarray) -> np.ndarray:
    if T.shape[-2] == 2:
        return np.cross(T[:, 0], T[:, 1])
    t = T[:, 0]
    return np.stack([t[:, 1], -t[:, 0]], axis=-1)


def _nodes(body: ConvexBody, patch: Patch, uv, jet: Variation2Jet) -> _Nodes:
    fr = evaluate(patch, uv)
    af = aniso_at(body, fr)
    X, dX = jet.X(fr, af)
    Z, dZ = jet.Z(fr, af)
    W = dW = None
    if jet.W is not None:
        W, dW = jet.W(fr, af)
    sign = np.sign(np.sum(_raw_normal(fr.dp) * fr.N, -1))
    return _Nodes(fr, af, X, dX, Z, dZ, W, dW, sign)


def _deformed(nd: _Nodes, t: float):
    """Position, unit normal and area element of ``F_t`` at the nodes."""
    F = nd.fr.p + t * nd.X + 0.5 * t * t * nd.Z
    T = nd.fr.dp + t * nd.dX + 0.5 * t * t * nd.dZ
    if nd.W is not None:
        F = F + t**3 / 6 * nd.W
        T = T + t**3 / 6 * nd.dW
    if not np.all(np.isfinite(T)):
        raise VariationError("deformed tangents need field derivatives (table fields are analytic-only)")
    raw = _raw_normal(T)
    dA = np.linalg.norm(raw, axis=-1)
    if dA.min() ** 2 <= 1e-12:
        raise DegenerateChartError("deformed frame is degenerate; reduce the step")
    N = raw * (nd.sign / dA)[:, None]
    return F, N, dA


def _functionals(body: ConvexBody, nd: _Nodes, grid: QuadratureGrid, t: float) -> tuple[float, float]:
    if t == 0.0:
        fr, af = nd.fr, nd.af
        A = integrate(af.phi, fr, grid)
        V = integrate(np.sum(fr.p * fr.N, -1), fr, grid) / (fr.n + 1)
        return A, V
    F, N, dA = _deformed(nd, t)
    phi = body.h(J.seed_vector(N)).val
    A = float(np.sum(phi * dA * grid.weights))
    V = float(np.sum(np.sum(F * N, -1) * dA * grid.weights)) / (nd.fr.n + 1)
    return A, V


# -- finite differences --------------------------------------------------------


def stencil(h: float) -> np.ndarray:
    """Step values for a Richardson-extrapolated pair of 5-point stencils."""
    return np.array([-2 * h, -h, -h / 2, 0.0, h / 2, h, 2 * h])


def _d1(f, h):
    return (f[-2 * h] - 8 * f[-h] + 8 * f[h] - f[2 * h]) / (12 * h)


def _d2(f, h):
    return (-f[2 * h] + 16 * f[h] - 30 * f[0.0] + 16 * f[-h] - f[-2 * h]) / (12 * h * h)


def richardson_d1(f: Mapping[float, Any], h: float):
    return (16 * _d1(f, h / 2) - _d1(f, h)) / 15


def richardson_d2(f: Mapping[float, Any], h: float):
    return (16 * _d2(f, h / 2) - _d2(f, h)) / 15


def _check_step(h: float) -> None:
    if not 1e-4 <= h <= 1e-2:
        raise ValueError("finite-difference step must lie in [1e-4, 1e-2]")


# -- analytic formulas ---------------------------------------------------------


def _boundary_parts(body, patch, grid, jet):
    """Per-edge boundary frames, anisotropic data, ``ν_K`` and field values."""
    out = {}
    for edge, bf in boundary_frames(patch, grid).items():
        af = aniso_at(body, bf.frame)
        nuK = conormal_from(body, bf, af)
        X, _ = jet.X(bf.frame, af)
        Z, _ = jet.Z(bf.frame, af)
        out[edge] = (bf, af, nuK, X, Z)
    return out


def _volume_flux(bf, X) -> np.ndarray:
    # rate at which the cone from the origin over ∂Σ gains volume
    if bf.p.shape[-1] == 3:
        side = np.cross(bf.conormal, bf.N)
        return np.einsum("ma,ma->m", bf.p, np.cross(X, side))
    side = bf.conormal[:, 0] * bf.N[:, 1] - bf.conormal[:, 1] * bf.N[:, 0]
    return (bf.p[:, 0] * X[:, 1] - bf.p[:, 1] * X[:, 0]) * side


def first_variation_analytic(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                             jet: Variation2Jet) -> tuple[float, float]:
    """``A_K'(0) = -∫nH_K u - ∫_{∂Σ}⟨X, ν_K⟩`` and ``V'(0)``.

    ``V'(0) = ∫u`` plus the volume swept by the cone over the moving
    boundary; that boundary term vanishes when ``X`` is tangent to the cone.
    """
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    X, _ = jet.X(fr, af)
    u = np.sum(X * fr.N, -1)
    n = patch.n
    A1 = -integrate(n * af.HK * u, fr, grid)
    V1 = integrate(u, fr, grid)
    if not patch.closed:
        parts = _boundary_parts(body, patch, grid, jet)
        bfs = {e: v[0] for e, v in parts.items()}
        A1 -= boundary_integral({e: np.sum(v[3] * v[2], -1) for e, v in parts.items()}, bfs, grid)
        V1 += boundary_integral({e: _volume_flux(v[0], v[3]) for e, v in parts.items()}, bfs,
                                grid) / (n + 1)
    return A1, V1


@dataclass
class SecondVariation:
    value: float
    bulk_n2H2: float
    bulk_trB2: float
    bulk_v: float
    boundary_Z: float


def _require_aniso_normal(jet: Variation2Jet) -> None:
    if jet.mode != "aniso-normal":
        raise VariationError("this formula needs the variation X = N_K")


def second_variation_analytic(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                              jet: Variation2Jet) -> SecondVariation:
    """``A_K''(0)`` for ``X = N_K`` with acceleration ``Z``, split into its addends."""
    _require_aniso_normal(jet)
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    Z, _ = jet.Z(fr, af)
    v = np.sum(Z * fr.N, -1)
    n = patch.n
    t1 = integrate(n * n * af.HK**2 * af.phi, fr, grid)
    t2 = -integrate(af.trBK2 * af.phi, fr, grid)
    t3 = -integrate(n * af.HK * v, fr, grid)
    t4 = 0.0
    if not patch.closed:
        parts = _boundary_parts(body, patch, grid, jet)
        bfs = {e: p[0] for e, p in parts.items()}
        t4 = -boundary_integral({e: np.sum(p[4] * p[2], -1) for e, p in parts.items()}, bfs, grid)
    return SecondVariation(t1 + t2 + t3 + t4, t1, t2, t3, t4)


def volume_second_variation(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                            jet: Variation2Jet) -> float:
    """``V''(0) = ∫(-nH_Kφ_K + v)``; valid for closed patches or boundaries kept on a cone."""
    _require_aniso_normal(jet)
    if not patch.closed and jet.cone is None:
        raise VariationError("V'' formula needs a closed patch or a cone-compatible jet")
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    Z, _ = jet.Z(fr, af)
    v = np.sum(Z * fr.N, -1)
    return integrate(-patch.n * af.HK * af.phi + v, fr, grid)


@dataclass
class ConeSecondVariation:
    value: float
    bulk: float
    boundary_II: float
    volume: float
    z_xi_residual: float
    min_cos_theta: float


def _cone_boundary(body, patch, grid, cone):
    """``(II(N_K,N_K)·φ_K/cosθ, ⟨Z,ξ⟩ - II)`` inputs per edge."""
    locs = validate_containment(cone, patch, grid)
    out = {}
    for edge, bf in boundary_frames(patch, grid).items():
        loc = locs[edge]
        ang = angle_frame_from(body, bf, loc.xi)
        af = aniso_at(body, bf.frame)
        ii = second_fundamental_form(cone, loc, af.NK, af.NK)
        out[edge] = (bf, af, loc, ang, ii)
    return out


def second_variation_cone(body: ConvexBody, patch: Patch, cone: SolidCone, grid: QuadratureGrid,
                          jet: Variation2Jet) -> ConeSecondVariation:
    """``A_K''(0)`` with the boundary term written through the cone geometry, and ``V''(0)``."""
    _require_aniso_normal(jet)
    res = stationarity_residuals(cone, body, patch, grid)
    if not is_stationary(res):
        raise VariationError("the cone form of the second variation needs a stationary patch")
    sv = second_variation_analytic(body, patch, grid, jet)
    bulk = sv.bulk_n2H2 + sv.bulk_trB2 + sv.bulk_v
    data = _cone_boundary(body, patch, grid, cone)
    bfs = {e: d[0] for e, d in data.items()}
    cos = {e: np.cos(d[3].theta) for e, d in data.items()}
    bterm = -boundary_integral({e: d[4] * d[1].phi / cos[e] for e, d in data.items()}, bfs, grid)
    zres = 0.0
    for e, d in data.items():
        Z, _ = jet.Z(d[0].frame, d[1])
        zres = max(zres, float(np.abs(np.sum(Z * d[2].xi, -1) - d[4]).max()))
    mincos = min(float(c.min()) for c in cos.values())
    return ConeSecondVariation(bulk + bterm, bulk, bterm, volume_second_variation(body, patch, grid, jet),
                               zres, mincos)


# -- functional profiles ------------------------------------------------------


@dataclass
class FunctionalProfile:
    t: np.ndarray
    A: np.ndarray
    V: np.ndarray
    lam: np.ndarray
    a: np.ndarray
    h: float
    estimates: dict[str, float]


def _lambda(V0: float, V: np.ndarray, n: int) -> np.ndarray:
    ratio = V0 / V
    if np.any(ratio <= 0):
        raise VariationError("V(t) changes sign across the stencil; reduce the step")
    return ratio ** (1.0 / (n + 1))


def functional_values(body: ConvexBody, patch: Patch, grid: QuadratureGrid, jet: Variation2Jet,
                      ts) -> tuple[np.ndarray, np.ndarray]:
    """``A_K(t)`` and ``V(t)`` on the deformed patches ``F_t``."""
    nd = _nodes(body, patch, grid.nodes, jet)
    vals = [_functionals(body, nd, grid, float(t)) for t in ts]
    return np.array([v[0] for v in vals]), np.array([v[1] for v in vals])


def functional_profile(body: ConvexBody, patch: Patch, grid: QuadratureGrid, jet: Variation2Jet,
                       h: float = DEFAULT_STEP, volume: bool = True) -> FunctionalProfile:
    """Functionals on the Richardson stencil and their finite-difference derivatives.

    With ``volume=True`` the volume-normalizing dilation ``λ(t)`` and the
    corrected energy ``a_K(t) = λ(t)ⁿA_K(t)`` are included.
    """
    _check_step(h)
    ts = stencil(h)
    A, V = functional_values(body, patch, grid, jet, ts)
    n = patch.n
    fA, fV = dict(zip(ts, A)), dict(zip(ts, V))
    est = {
        "A1": richardson_d1(fA, h), "A2": richardson_d2(fA, h),
        "V1": richardson_d1(fV, h), "V2": richardson_d2(fV, h),
    }
    lam = a = np.full_like(A, np.nan)
    if volume:
        V0 = fV[0.0]
        if abs(V0) < VOLUME_MIN:
            raise VariationError(f"|V(Σ)| = {abs(V0):.3e} is too small to normalize the volume")
        lam = _lambda(V0, V, n)
        a = lam**n * A
        fl, fa = dict(zip(ts, lam)), dict(zip(ts, a))
        est.update({
            "lam1": richardson_d1(fl, h), "lam2": richardson_d2(fl, h),
            "a1": richardson_d1(fa, h), "a2": richardson_d2(fa, h),
        })
        # volume of the corrected deformation, relative to V(Σ)
        est["volume_drift"] = float(np.max(np.abs(lam ** (n + 1) * V - V0)) / abs(V0))
    return FunctionalProfile(ts, A, V, lam, a, h, {k: float(v) for k, v in est.items()})


def profile_table(body: ConvexBody, patch: Patch, grid: QuadratureGrid, jet: Variation2Jet,
                  ts) -> FunctionalProfile:
    """Functionals over an arbitrary ``t`` grid (which must contain 0)."""
    ts = np.asarray(ts, dtype=float)
    if not np.any(ts == 0.0):
        raise ValueError("profile grid must contain t = 0")
    A, V = functional_values(body, patch, grid, jet, ts)
    V0 = float(V[ts == 0.0][0])
    if abs(V0) < VOLUME_MIN:
        raise VariationError("volume too small to normalize")
    lam = _lambda(V0, V, patch.n)
    return FunctionalProfile(ts, A, V, lam, lam**patch.n * A, float("nan"), {})


# -- Wente form -------------------------------------------------------------


@dataclass
class WenteForm:
    value: float
    bulk: float
    boundary: float


def wente_terms(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                cone: SolidCone | None = None) -> WenteForm:
    """``-∫(tr B_K² - nH_K²)φ_K - ∫_{∂Σ} II(N_K,N_K)φ_K/cosθ`` without any stationarity check."""
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    bulk = -integrate(af.defect * af.phi, fr, grid)
    bterm = 0.0
    if cone is not None and not patch.closed:
        data = _cone_boundary(body, patch, grid, cone)
        bfs = {e: d[0] for e, d in data.items()}
        bterm = -boundary_integral(
            {e: d[4] * d[1].phi / np.cos(d[3].theta) for e, d in data.items()}, bfs, grid)
    return WenteForm(bulk + bterm, bulk, bterm)


def wente_form(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
               cone: SolidCone | None = None) -> WenteForm:
    """Second derivative of the volume-corrected energy ``a_K`` at ``t = 0``."""
    res = stationarity_residuals(cone, body, patch, grid)
    if not is_stationary(res, STATIONARY_TOL):
        raise VariationError(
            f"Wente form needs a stationary patch (H_K spread {res[0]:.3e}, "
            f"sup|<N_K, xi>| {res[1]:.3e})"
        )
    fr = evaluate(patch, grid.nodes)
    V = integrate(np.sum(fr.p * fr.N, -1), fr, grid) / (patch.n + 1)
    if abs(V) < VOLUME_MIN:
        raise VariationError(f"|V(Σ)| = {abs(V):.3e} is too small for the volume correction")
    return wente_terms(body, patch, grid, cone)


def wente_predictions(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                      jet: Variation2Jet) -> dict[str, float]:
    """Closed forms for ``λ'(0) = H_K`` and ``λ''(0) = 2H_K² + (H_K/A_K)α`` with ``α = ∫v``."""
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    Z, _ = jet.Z(fr, af)
    alpha = integrate(np.sum(Z * fr.N, -1), fr, grid)
    A = integrate(af.phi, fr, grid)
    H = integrate(af.HK, fr, grid) / integrate(np.ones_like(af.HK), fr, grid)
    return {"H_K": H, "alpha": alpha, "A_K": A, "lam1": H, "lam2": 2 * H * H + H / A * alpha}


# -- normal derivatives ------------------------------------------------------


def normal_derivative_checks(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                             jet: Variation2Jet, h: float = DEFAULT_STEP) -> tuple[float, float | None]:
    """Sup residuals of the first and (for ``X = N_K``) second ``t``-derivative of ``N_t∘F_t``.

    First: ``-∇u - B(X^⊤)``.  Second: ``-∇v - B(Z^⊤)``.
    """
    _check_step(h)
    nd = _nodes(body, patch, grid.nodes, jet)
    fr = nd.fr
    ts = stencil(h)
    normals = {float(t): (_deformed(nd, float(t))[1] if t != 0 else fr.N) for t in ts}
    d1 = richardson_d1(normals, h)
    du = np.einsum("mia,ma->mi", nd.dX, fr.N) + np.einsum("ma,mia->mi", nd.X, fr.dN)
    rhs1 = -fr.gradient(du) - np.einsum("mab,mb->ma", fr.B, fr.tangential(nd.X))
    r1 = float(np.abs(d1 - rhs1).max())
    if jet.mode != "aniso-normal":
        return r1, None
    d2 = richardson_d2(normals, h)
    dv = np.einsum("mia,ma->mi", nd.dZ, fr.N) + np.einsum("ma,mia->mi", nd.Z, fr.dN)
    rhs2 = -fr.gradient(dv) - np.einsum("mab,mb->ma", fr.B, fr.tangential(nd.Z))
    return r1, float(np.abs(d2 - rhs2).max())


def jet_sufficiency(body: ConvexBody, patch: Patch, grid: QuadratureGrid, jet: Variation2Jet,
                    W, h: float = DEFAULT_STEP) -> float:
    """Change of the extrapolated ``A''(0)`` when a cubic term ``(t³/6)W`` is added."""
    base = functional_profile(body, patch, grid, jet, h, volume=False).estimates["A2"]
    cubic = functional_profile(body, patch, grid, jet.with_cubic(W), h, volume=False).estimates["A2"]
    return abs(cubic - base)
