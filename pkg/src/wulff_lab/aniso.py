"""Anisotropic normal, shape operator, mean curvature and area."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet as J
from .body import ConvexBody
from .patch import (
    BoundaryFrame,
    Frame,
    Patch,
    QuadratureGrid,
    boundary_frame,
    evaluate,
    integrate,
)

UMBILIC_TOL = 1e-6
FD_STEP = 1e-3


@dataclass
class AnisoFrame:
    """Anisotropic quantities at a batch of nodes.

    ``SK`` is ``B_K`` in the coordinate basis, ``BK`` the ambient matrix of
    ``B_K``, ``hess`` the support-function Hessian at ``N`` and ``dNK`` the
    parameter derivatives of ``N_K`` (``∂_i N_K = -B_K ∂_i p``).
    """

    NK: np.ndarray
    phi: np.ndarray
    hess: np.ndarray
    SK: np.ndarray
    BK: np.ndarray
    HK: np.ndarray
    trBK2: np.ndarray
    defect: np.ndarray
    dNK: np.ndarray


def aniso_at(body: ConvexBody, fr: Frame) -> AnisoFrame:
    hj = body.h(J.seed_vector(fr.N))
    H = hj.hess
    # derivative of N_K along each coordinate tangent; B_K(∂_j p) is its negative
    dNK = np.einsum("mab,mjb->mja", H, fr.dN)
    SK = -np.einsum("mki,mia,mja->mkj", fr.ginv, fr.dp, dNK)
    n = fr.n
    HK = np.trace(SK, axis1=-2, axis2=-1) / n
    trBK2 = np.einsum("mij,mji->m", SK, SK)
    BK = np.einsum("mab,mbc->mac", H, fr.B)
    return AnisoFrame(hj.grad, hj.val, H, SK, BK, HK, trBK2, trBK2 - n * HK**2, dNK)


def aniso_frame(body: ConvexBody, patch: Patch, uv) -> AnisoFrame:
    return aniso_at(body, evaluate(patch, uv))


def aniso_conormal(body: ConvexBody, patch: Patch, edge: str, s=None) -> np.ndarray:
    """``ν_K = φ_K ν - ⟨N_K, ν⟩N`` along a boundary edge."""
    bf = boundary_frame(patch, edge, s)
    return conormal_from(body, bf)


def conormal_from(body: ConvexBody, bf: BoundaryFrame, af: AnisoFrame | None = None) -> np.ndarray:
    af = af or aniso_at(body, bf.frame)
    nu = bf.conormal
    return af.phi[:, None] * nu - np.sum(af.NK * nu, axis=-1, keepdims=True) * bf.N


def aniso_area(body: ConvexBody, patch: Patch, grid: QuadratureGrid) -> float:
    fr = evaluate(patch, grid.nodes)
    return integrate(aniso_at(body, fr).phi, fr, grid)


def _param_partials(fn, patch: Patch, uv: np.ndarray, step: float | None = None) -> np.ndarray:
    """Fourth-order central differences of ``fn(frame)`` along each parameter."""
    step = FD_STEP if step is None else step
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    parts = []
    for i in range(patch.n):
        e = np.zeros(patch.n)
        e[i] = step
        f = {k: fn(evaluate(patch, uv + k * e, check=False)) for k in (-2, -1, 1, 2)}
        parts.append((f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * step))
    return np.stack(parts, axis=1)


def grad_phiK_check(body: ConvexBody, patch: Patch, uv) -> float:
    """Max over ``uv`` of ``|∇_Σ φ_K + B(N_K^⊤)|``.

    The gradient is taken by differencing ``φ_K`` along the chart, independent of
    the shape-operator route on the right-hand side.
    """
    fr = evaluate(patch, uv)
    af = aniso_at(body, fr)
    dphi = _param_partials(lambda f: body.h(J.seed_vector(f.N)).val, patch, fr.uv)
    lhs = fr.gradient(dphi)
    rhs = -np.einsum("mab,mb->ma", fr.B, fr.tangential(af.NK))
    return float(np.abs(lhs - rhs).max())


def divergence_mean_curvature(body: ConvexBody, patch: Patch, uv) -> np.ndarray:
    """``-(div_Σ N_K)/n`` with ``N_K`` differenced along the chart."""
    fr = evaluate(patch, uv)
    dNK = _param_partials(lambda f: body.h(J.seed_vector(f.N)).grad, patch, fr.uv)
    div = np.einsum("mij,mia,mja->m", fr.ginv, dNK, fr.dp)
    return -div / patch.n


def umbilicity_defect(body: ConvexBody, patch: Patch, grid: QuadratureGrid) -> tuple[float, float]:
    """Supremum over nodes and ``φ_K``-weighted integral of ``tr(B_K²) - nH_K²``."""
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    return float(af.defect.max()), integrate(af.defect * af.phi, fr, grid)


@dataclass
class UmbilicVerdict:
    kind: str  # "plane" | "wulff" | "not-umbilical"
    center: np.ndarray | None
    scale: float | None
    residual: float
    sup_defect: float
    hk_spread: float


def classify_umbilical(body: ConvexBody, patch: Patch, grid: QuadratureGrid,
                       tol: float = UMBILIC_TOL) -> UmbilicVerdict:
    """Recognize planes and pieces of dilated, translated Wulff shapes.

    For an umbilical patch with constant ``H_K ≠ 0`` the quantity
    ``c = H_K p + N_K(p)`` is constant, and the patch lies in
    ``c/H_K - (1/H_K)∂K``.
    """
    fr = evaluate(patch, grid.nodes)
    af = aniso_at(body, fr)
    sup = float(af.defect.max())
    spread = float(af.HK.max() - af.HK.min())
    if sup >= tol or spread >= tol:
        return UmbilicVerdict("not-umbilical", None, None, float("nan"), sup, spread)
    H = float(af.HK.mean())
    if abs(H) < tol:
        resid = float(np.abs(af.NK - af.NK.mean(axis=0)).max())
        return UmbilicVerdict("plane", None, None, resid, sup, spread)
    c = H * fr.p + af.NK
    cm = c.mean(axis=0)
    resid = float(np.linalg.norm(c - cm, axis=-1).max())
    return UmbilicVerdict("wulff", cm / H, -1.0 / H, resid, sup, spread)
