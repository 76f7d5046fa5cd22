import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulff_lab import jet as J
from wulff_lab.body import (
    BodyError,
    k_projection,
    k_projection_differential,
    make_body,
    restricted_eigenvalues,
    sphere_sample,
    support,
    wulff_point_and_normal,
)

from conftest import BODY_SPECS, unit_vectors


def brute_support(points, w):
    return (points @ w.T).max(axis=0)


def test_ellipsoid_support_against_sampled_boundary(rng):
    body = make_body("offset-ellipsoid", BODY_SPECS["offset-ellipsoid"])
    pts = sphere_sample(3, 200_000) @ body.matrix.T + body.offset
    w = unit_vectors(rng, 50)
    assert np.abs(support(body, w) - brute_support(pts, w)).max() < 1e-4


def test_lp_support_against_sampled_boundary(rng):
    body = make_body("lp-ball", {"p": 4, "ball_radius": 0.2})
    u = sphere_sample(3, 200_000)
    q = 4.0 / 3.0  # dual exponent
    unit_q = u / (np.abs(u) ** q).sum(-1, keepdims=True) ** (1 / q)
    w = unit_vectors(rng, 50)
    brute = brute_support(unit_q, w) + 0.2
    assert np.abs(support(body, w) - brute).max() < 1e-3


def test_projection_points_lie_in_body(body, rng):
    # every π_K(w) belongs to K: ⟨π_K(w), v⟩ ≤ h_K(v) for all v, with equality at v = w
    w = unit_vectors(rng, 400)
    v = unit_vectors(rng, 400)
    pts = k_projection(body, w)
    assert ((pts @ v.T) - support(body, v)[None, :]).max() < 1e-12
    assert np.abs(np.sum(pts * w, -1) - support(body, w)).max() < 1e-12


def test_hessian_against_finite_differences(body, rng):
    w = unit_vectors(rng, 20)
    hess = k_projection_differential(body, w)
    h = 1e-5
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd = (k_projection(body, w + e) - k_projection(body, w - e)) / (2 * h)
        assert np.abs(fd - hess[:, :, i]).max() < 1e-7


def test_hessian_positive_on_orthogonal_complement(body, rng):
    w = unit_vectors(rng, 500)
    assert restricted_eigenvalues(k_projection_differential(body, w), w).min() > 0


def test_ellipsoid_pole_values():
    body = make_body("ellipsoid", {"axes": [1.0, 1.0, 2.0]})
    e3 = np.array([0.0, 0.0, 1.0])
    assert support(body, e3) == pytest.approx(2.0)
    p, n = wulff_point_and_normal(body, e3)
    assert np.allclose(p, [0, 0, 2]) and np.allclose(n, e3)
    assert np.allclose(restricted_eigenvalues(k_projection_differential(body, e3), e3), [0.5, 0.5])


def test_ball_projection_is_radial(rng):
    body = make_body("ball", {"radius": 1.0})
    w = unit_vectors(rng, 10)
    assert np.allclose(k_projection(body, w), w)


def test_symmetry_flags():
    assert make_body("ellipsoid", {"axes": [1, 2, 3]}).centrally_symmetric
    assert not make_body("offset-ellipsoid", BODY_SPECS["offset-ellipsoid"]).centrally_symmetric
    assert not make_body("perturbed-ball", {"eps": 0.05}).centrally_symmetric


def test_radial_boundary_point_on_ellipsoid(rng):
    body = make_body("offset-ellipsoid", BODY_SPECS["offset-ellipsoid"])
    x = unit_vectors(rng, 100)
    p = body.boundary_point_radial(J.seed_vector(x)).val
    inv = np.linalg.inv(body.matrix)
    assert np.allclose(np.linalg.norm((p - body.offset) @ inv.T, axis=-1), 1.0)
    assert np.allclose(np.cross(p, x), 0.0, atol=1e-14)


def test_planar_bodies():
    disk = make_body("ball", {}, dim=2)
    assert support(disk, np.array([0.6, 0.8])) == pytest.approx(1.0)
    ell = make_body("ellipsoid", {"axes": [1.0, 0.7]}, dim=2)
    assert support(ell, np.array([0.0, 1.0])) == pytest.approx(0.7)


@pytest.mark.parametrize(
    "kind, params, dim",
    [
        ("cube", {}, 3),
        ("ball", {"radius": -1.0}, 3),
        ("ellipsoid", {"matrix": [[1, 2, 0], [0, 1, 0], [0, 0, 1]]}, 3),
        ("ellipsoid", {"axes": [1.0, -1.0, 1.0]}, 3),
        ("ellipsoid", {"axes": [1.0, 1.0]}, 3),
        ("offset-ellipsoid", {"axes": [1, 1, 1], "offset": [1.5, 0, 0]}, 3),
        ("lp-ball", {"p": 1.0}, 3),
        ("perturbed-ball", {"eps": 0.25}, 3),
        ("perturbed-ball", {"eps": 0.13}, 2),
        ("perturbed-ball", {"eps": 0.2}, 3),
        ("ball", {}, 4),
    ],
)
def test_invalid_bodies_rejected(kind, params, dim):
    with pytest.raises(BodyError):
        make_body(kind, params, dim)


def test_zero_vector_and_non_unit_inputs():
    body = make_body("ball")
    with pytest.raises(ValueError):
        support(body, np.zeros(3))
    with pytest.raises(ValueError):
        k_projection_differential(body, np.array([2.0, 0.0, 0.0]))


vec = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)


@settings(max_examples=50, deadline=None)
@given(vec, st.floats(0.1, 10.0), st.sampled_from(sorted(BODY_SPECS)))
def test_support_identities(v, scale, kind):
    body = make_body(kind, BODY_SPECS[kind])
    w = np.asarray(v)
    hj = support(body, w, jet=True)
    assert np.dot(hj.grad, w) == pytest.approx(hj.val, abs=1e-12)
    assert np.abs(hj.hess @ w).max() < 1e-10
    assert support(body, scale * w) == pytest.approx(scale * hj.val, rel=1e-12)
    assert np.allclose(k_projection(body, scale * w), hj.grad, atol=1e-12)
