"""Second-order forward-mode jets.

A :class:`Jet2` carries a value together with its gradient and Hessian with
respect to at most three seed directions.  Values may be arrays: the gradient
and Hessian then carry the seed axes as trailing dimensions, so one jet holds
the derivatives at every quadrature node at once.

Vector-valued quantities are jets whose value has a trailing component axis,
e.g. ``val.shape == (M, 3)``, ``grad.shape == (M, 3, m)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

MAX_SEEDS = 3


class JetError(ArithmeticError):
    """Raised when an operation has no derivative at the requested point."""


class Jet2:
    __slots__ = ("val", "grad", "hess")
    # make ``ndarray * jet`` dispatch to Jet2.__rmul__
    __array_ufunc__ = None

    def __init__(self, val, grad, hess):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @classmethod
    def constant(cls, value, nseeds: int) -> Jet2:
        v = np.asarray(value, dtype=float)
        return cls(v, np.zeros(v.shape + (nseeds,)), np.zeros(v.shape + (nseeds, nseeds)))

    @property
    def nseeds(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.val.shape

    def __repr__(self) -> str:
        return f"Jet2(val={self.val!r}, grad={self.grad!r}, hess={self.hess!r})"

    def _lift(self, other) -> Jet2:
        if isinstance(other, Jet2):
            if other.nseeds != self.nseeds:
                raise ValueError("jets seeded in different numbers of directions")
            return other
        return Jet2.constant(other, self.nseeds)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        o = self._lift(other)
        return Jet2(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=float)
            return Jet2(self.val * c, self.grad * c[..., None], self.hess * c[..., None, None])
        o = self._lift(other)
        a, b = self, o
        val = a.val * b.val
        grad = a.grad * b.val[..., None] + b.grad * a.val[..., None]
        cross = a.grad[..., :, None] * b.grad[..., None, :]
        hess = (
            a.hess * b.val[..., None, None]
            + b.hess * a.val[..., None, None]
            + cross
            + np.swapaxes(cross, -1, -2)
        )
        return Jet2(val, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=float)
            if np.any(c == 0):
                raise JetError("division by zero")
            return self * (1.0 / c)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return self._lift(other) * reciprocal(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    # -- shape helpers -----------------------------------------------------

    def component(self, i: int) -> Jet2:
        """Component ``i`` of a vector jet (trailing value axis)."""
        return Jet2(self.val[..., i], self.grad[..., i, :], self.hess[..., i, :, :])

    def expand(self) -> Jet2:
        """Append a length-1 value axis, for broadcasting against vector jets."""
        return Jet2(self.val[..., None], self.grad[..., None, :], self.hess[..., None, :, :])

    def sum(self) -> Jet2:
        """Sum over the trailing value axis."""
        return Jet2(self.val.sum(-1), self.grad.sum(-2), self.hess.sum(-3))

    def partial(self, i: int) -> Jet2:
        """The jet of the ``i``-th first partial derivative.

        Only value and gradient of the result are known; its Hessian would need
        third derivatives and is filled with NaN so accidental use is visible.
        """
        h = self.hess[..., i, :]
        return Jet2(self.grad[..., i], h, np.full(h.shape + (self.nseeds,), np.nan))


def seed(values: Sequence) -> list[Jet2]:
    """Independent variables: jet ``i`` has gradient ``e_i`` and zero Hessian."""
    m = len(values)
    if not 1 <= m <= MAX_SEEDS:
        raise ValueError(f"between 1 and {MAX_SEEDS} seed directions allowed, got {m}")
    arrays = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values])
    eye = np.eye(m)
    out = []
    for i, a in enumerate(arrays):
        grad = np.broadcast_to(eye[i], a.shape + (m,)).copy()
        out.append(Jet2(a.copy(), grad, np.zeros(a.shape + (m, m))))
    return out


def seed_vector(w) -> Jet2:
    """Seed every component of ``w`` (shape ``(..., d)``) and return the vector jet."""
    w = np.asarray(w, dtype=float)
    return stack(seed([w[..., i] for i in range(w.shape[-1])]))


def stack(jets: Sequence[Jet2]) -> Jet2:
    """Stack scalar jets along a new trailing value axis."""
    return Jet2(
        np.stack([j.val for j in jets], axis=-1),
        np.stack([j.grad for j in jets], axis=-2),
        np.stack([j.hess for j in jets], axis=-3),
    )


def unary(x: Jet2, f0, f1, f2) -> Jet2:
    """Chain rule for a scalar function with value ``f0`` and derivatives ``f1``, ``f2``."""
    grad = f1[..., None] * x.grad
    hess = f1[..., None, None] * x.hess + f2[..., None, None] * (
        x.grad[..., :, None] * x.grad[..., None, :]
    )
    return Jet2(f0, grad, hess)


def reciprocal(x: Jet2) -> Jet2:
    if np.any(x.val == 0):
        raise JetError("division by zero")
    inv = 1.0 / x.val
    return unary(x, inv, -inv * inv, 2.0 * inv * inv * inv)


def sqrt(x: Jet2) -> Jet2:
    if np.any(x.val < 0):
        raise JetError("sqrt of a negative number")
    if np.any(x.val == 0):
        raise JetError("sqrt is not differentiable at 0")
    r = np.sqrt(x.val)
    return unary(x, r, 0.5 / r, -0.25 / (r * x.val))


def power(x: Jet2, p) -> Jet2:
    p = float(p)
    if p.is_integer():
        k = int(p)
        if k == 0:
            return Jet2.constant(np.ones_like(x.val), x.nseeds)
        if k > 0:
            f0 = x.val**k
            f1 = k * x.val ** (k - 1)
            f2 = k * (k - 1) * x.val ** (k - 2) if k >= 2 else np.zeros_like(x.val)
            return unary(x, f0, f1, f2)
        return power(reciprocal(x), -k)
    if np.any(x.val <= 0):
        raise JetError("non-integer power of a non-positive number")
    return unary(x, x.val**p, p * x.val ** (p - 1), p * (p - 1) * x.val ** (p - 2))


def sin(x: Jet2) -> Jet2:
    s, c = np.sin(x.val), np.cos(x.val)
    return unary(x, s, c, -s)


def cos(x: Jet2) -> Jet2:
    s, c = np.sin(x.val), np.cos(x.val)
    return unary(x, c, -s, -c)


def tan(x: Jet2) -> Jet2:
    t = np.tan(x.val)
    sec2 = 1.0 + t * t
    return unary(x, t, sec2, 2.0 * t * sec2)


def exp(x: Jet2) -> Jet2:
    e = np.exp(x.val)
    return unary(x, e, e, e)


def atan2(y: Jet2, x: Jet2) -> Jet2:
    if not isinstance(y, Jet2):
        y = x._lift(y)
    x = y._lift(x)
    r2 = x.val**2 + y.val**2
    if np.any(r2 == 0):
        raise JetError("atan2 is not differentiable at the origin")
    fy, fx = x.val / r2, -y.val / r2
    fyy = -2 * x.val * y.val / r2**2
    fxx = -fyy
    fxy = (y.val**2 - x.val**2) / r2**2

    def outer(a, b):
        return a[..., :, None] * b[..., None, :]

    grad = fy[..., None] * y.grad + fx[..., None] * x.grad
    hess = (
        fy[..., None, None] * y.hess
        + fx[..., None, None] * x.hess
        + fyy[..., None, None] * outer(y.grad, y.grad)
        + fxx[..., None, None] * outer(x.grad, x.grad)
        + fxy[..., None, None] * (outer(y.grad, x.grad) + outer(x.grad, y.grad))
    )
    return Jet2(np.arctan2(y.val, x.val), grad, hess)


def dot(a: Jet2, b) -> Jet2:
    return (a * b).sum()


def norm(a: Jet2) -> Jet2:
    sq = dot(a, a)
    if np.any(sq.val == 0):
        raise JetError("norm of the zero vector is not differentiable")
    return sqrt(sq)


def normalize(a: Jet2) -> Jet2:
    return a * reciprocal(norm(a)).expand()


def cross(a: Jet2, b: Jet2) -> Jet2:
    a0, a1, a2 = (a.component(i) for i in range(3))
    b0, b1, b2 = (b.component(i) for i in range(3))
    return stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def elementary(op: str, *args):
    """Dispatch an elementary operation by name."""
    table = {
        "add": lambda a, b: a + b,
        "sub": lambda a, b: a - b,
        "mul": lambda a, b: a * b,
        "div": lambda a, b: a / b,
        "sqrt": sqrt,
        "pow": power,
        "sin": sin,
        "cos": cos,
        "atan2": atan2,
        "norm": norm,
        "dot": dot,
    }
    try:
        fn = table[op]
    except KeyError:
        raise ValueError(f"unknown elementary operation {op!r}") from None
    return fn(*args)
