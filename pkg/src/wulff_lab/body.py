"""Smooth strictly convex bodies described by their support functions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import jet as J
from .jet import Jet2

KINDS = ("ball", "ellipsoid", "offset-ellipsoid", "lp-ball", "perturbed-ball")

MAX_PERTURBATION = 0.2
UNIT_TOL = 1e-10


class BodyError(ValueError):
    """Invalid body parameters (not smooth, not strictly convex, 0 not interior)."""


def sphere_sample(dim: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors (Fibonacci lattice in 3D)."""
    if dim == 2:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    if dim != 3:
        raise ValueError("ambient dimension must be 2 or 3")
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    phi = np.pi * (1 + 5**0.5) * i
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def _harmonic_cubic(w: Jet2, dim: int) -> Jet2:
    # odd harmonic polynomials, so the perturbed body is not centrally symmetric
    if dim == 2:
        x, y = w.component(0), w.component(1)
        return x * x * x - 3.0 * x * y * y
    x, y, z = (w.component(i) for i in range(3))
    return x * y * z + 0.5 * z * (2.0 * z * z - 3.0 * x * x - 3.0 * y * y)


def _matvec(A: np.ndarray, w: Jet2) -> Jet2:
    return J.stack([(w * A[i]).sum() for i in range(A.shape[0])])


@dataclass(frozen=True)
class ConvexBody:
    """A convex body K about the origin with smooth support function ``h_K``.

    Build instances with :func:`make_body`; the constructor does not validate.
    """

    kind: str
    dim: int
    params: Mapping[str, Any] = field(default_factory=dict)
    centrally_symmetric: bool = True
    matrix: np.ndarray | None = field(default=None, repr=False, compare=False)
    offset: np.ndarray | None = field(default=None, repr=False, compare=False)

    def h(self, w: Jet2) -> Jet2:
        """Support function evaluated on a vector jet."""
        k = self.kind
        if k == "ball":
            return J.norm(w) * float(self.params.get("radius", 1.0))
        if k in ("ellipsoid", "offset-ellipsoid"):
            out = J.norm(_matvec(self.matrix, w))
            if k == "offset-ellipsoid":
                out = out + (w * self.offset).sum()
            return out
        if k == "lp-ball":
            p = float(self.params.get("p", 4.0))
            if float(p / 2).is_integer():
                terms = [w.component(i) ** p for i in range(self.dim)]
            else:
                terms = [J.power(w.component(i) * w.component(i), p / 2) for i in range(self.dim)]
            total = terms[0]
            for t in terms[1:]:
                total = total + t
            out = J.power(total, 1.0 / p)
            r0 = float(self.params.get("ball_radius", 0.2))
            if r0:
                out = out + J.norm(w) * r0
            return out
        if k == "perturbed-ball":
            eps = float(self.params.get("eps", 0.05))
            r = J.norm(w)
            return r + _harmonic_cubic(w, self.dim) * J.reciprocal(r * r) * eps
        raise BodyError(f"unknown body kind {k!r}")

    def boundary_point_radial(self, x: Jet2) -> Jet2:
        """The point of ``∂K`` on the ray through ``x`` (0-homogeneous in ``x``).

        Closed form only for balls and (offset) ellipsoids.
        """
        if self.kind == "ball":
            return x * (J.reciprocal(J.norm(x)) * float(self.params.get("radius", 1.0))).expand()
        if self.kind in ("ellipsoid", "offset-ellipsoid"):
            inv = np.linalg.inv(self.matrix)
            a = _matvec(inv, x)
            if self.kind == "ellipsoid":
                return x * J.reciprocal(J.norm(a)).expand()
            b = inv @ self.offset
            ab = (a * b).sum()
            aa = J.dot(a, a)
            disc = ab * ab - aa * (float(b @ b) - 1.0)
            rho = (ab + J.sqrt(disc)) * J.reciprocal(aa)
            return x * rho.expand()
        raise BodyError(f"no closed-form radial function for {self.kind!r}")


def _spd(params: Mapping[str, Any], dim: int) -> np.ndarray:
    if "matrix" in params:
        A = np.asarray(params["matrix"], dtype=float)
    else:
        A = np.diag(np.asarray(params.get("axes", [1.0] * dim), dtype=float))
    if A.shape != (dim, dim):
        raise BodyError(f"matrix must be {dim}x{dim}")
    if not np.allclose(A, A.T) or np.linalg.eigvalsh(A).min() <= 0:
        raise BodyError("ellipsoid matrix must be symmetric positive definite")
    return A


def make_body(kind: str, params: Mapping[str, Any] | None = None, dim: int = 3) -> ConvexBody:
    """Construct and validate a catalog body."""
    params = dict(params or {})
    if dim not in (2, 3):
        raise BodyError("ambient dimension must be 2 or 3")
    if kind not in KINDS:
        raise BodyError(f"unknown body kind {kind!r}; expected one of {KINDS}")
    matrix = offset = None
    symmetric = True
    if kind == "ball":
        if float(params.get("radius", 1.0)) <= 0:
            raise BodyError("radius must be positive")
    elif kind in ("ellipsoid", "offset-ellipsoid"):
        matrix = _spd(params, dim)
        if kind == "offset-ellipsoid":
            offset = np.asarray(params.get("offset", [0.0] * dim), dtype=float)
            if offset.shape != (dim,):
                raise BodyError("offset has the wrong dimension")
            symmetric = not np.any(offset)
    elif kind == "lp-ball":
        if not float(params.get("p", 4.0)) > 1:
            raise BodyError("lp exponent must exceed 1")
        if float(params.get("ball_radius", 0.2)) < 0:
            raise BodyError("ball_radius must be nonnegative")
    elif kind == "perturbed-ball":
        eps = float(params.get("eps", 0.05))
        if abs(eps) > MAX_PERTURBATION:
            raise BodyError(f"perturbation amplitude limited to {MAX_PERTURBATION}")
        symmetric = eps == 0
    body = ConvexBody(kind, dim, params, symmetric, matrix, offset)
    _validate(body)
    return body


def orthonormal_complement(w: np.ndarray) -> np.ndarray:
    """Rows spanning ``w⊥`` for each unit ``w`` (shape ``(..., d-1, d)``)."""
    w = np.asarray(w, dtype=float)
    d = w.shape[-1]
    if d == 2:
        return np.stack([-w[..., 1], w[..., 0]], axis=-1)[..., None, :]
    helper = np.where(np.abs(w[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    e1 = helper - (helper * w).sum(-1, keepdims=True) * w
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(w, e1)
    return np.stack([e1, e2], axis=-2)


def restricted_eigenvalues(hess: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Eigenvalues of the Hessian restricted to ``w⊥``."""
    E = orthonormal_complement(w)
    R = np.einsum("...ia,...ab,...jb->...ij", E, hess, E)
    return np.linalg.eigvalsh(0.5 * (R + np.swapaxes(R, -1, -2)))


def _validate(body: ConvexBody) -> None:
    w = sphere_sample(body.dim, 2000 if body.dim == 3 else 720)
    # lp support functions are only C^2 off the coordinate hyperplanes
    w = w[np.all(np.abs(w) > 1e-6, axis=-1)]
    hj = body.h(J.seed_vector(w))
    if hj.val.min() <= 0:
        raise BodyError("support function must be positive on the sphere (0 interior to K)")
    scale = max(1.0, np.abs(hj.hess).max())
    if np.abs(np.einsum("...ab,...b->...a", hj.hess, w)).max() > 1e-8 * scale:
        raise BodyError("support-function Hessian does not annihilate the direction")
    if restricted_eigenvalues(hj.hess, w).min() <= 1e-9:
        raise BodyError("body is not strictly convex (degenerate support-function Hessian)")


def _check_nonzero(w: np.ndarray) -> None:
    if np.any(np.linalg.norm(w, axis=-1) == 0):
        raise ValueError("support function is not differentiable at the zero vector")


def _check_unit(w: np.ndarray) -> None:
    if np.any(np.abs(np.linalg.norm(w, axis=-1) - 1) > UNIT_TOL):
        raise ValueError("expected unit vectors")


def support(body: ConvexBody, w, jet: bool = False):
    """``h_K(w)``; with ``jet=True`` the :class:`Jet2` seeded in the components of ``w``."""
    w = np.asarray(w, dtype=float)
    _check_nonzero(w)
    hj = body.h(J.seed_vector(w))
    return hj if jet else hj.val


def k_projection(body: ConvexBody, w) -> np.ndarray:
    """``π_K(w) = ∇h_K(w)``, the unique point of ``∂K`` with outer normal along ``w``."""
    return support(body, w, jet=True).grad


def k_projection_differential(body: ConvexBody, w) -> np.ndarray:
    """``Hess h_K(w)`` at unit ``w``: positive definite on ``w⊥`` and zero on ``w``."""
    w = np.asarray(w, dtype=float)
    _check_unit(w)
    return support(body, w, jet=True).hess


def wulff_point_and_normal(body: ConvexBody, w) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    _check_unit(w)
    return k_projection(body, w), w.copy()
