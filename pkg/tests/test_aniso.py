import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulff_lab.aniso import (
    aniso_area,
    aniso_conormal,
    aniso_frame,
    classify_umbilical,
    divergence_mean_curvature,
    grad_phiK_check,
    umbilicity_defect,
)
from wulff_lab.body import make_body
from wulff_lab.patch import boundary_frame, evaluate, make_grid, make_patch, transform

from conftest import wulff_patch


def cap(angle, **params):
    return {"kind": "radial", "params": {"base": {"kind": "cap", "angle": angle}, **params}}


def test_wulff_shape_is_umbilical_with_unit_curvature(body):
    patch, grid = wulff_patch(body, 16)
    af = aniso_frame(body, patch, grid.nodes)
    fr = evaluate(patch, grid.nodes)
    assert np.abs(af.HK + 1).max() < 1e-12
    assert np.abs(af.SK + np.eye(2)).max() < 1e-12
    assert np.abs(af.NK - fr.p).max() < 1e-12
    assert np.abs(af.defect).max() < 1e-12


def test_gradient_identity_by_finite_differences(body):
    # ∇φ_K = -B(N_K^⊤), checked with a chart-differenced φ_K
    patch, grid = wulff_patch(body, 10)
    assert grad_phiK_check(body, patch, grid.nodes) < 1e-8


def test_mean_curvature_is_minus_divergence_over_n():
    body = make_body("offset-ellipsoid", {"axes": [1.0, 1.2, 0.9], "offset": [0.1, 0.05, 0.1]})
    surface = make_patch(cap(np.pi, shape={"kind": "ellipsoid", "params": {"axes": [1.0, 0.8, 1.4]}}), body)
    uv = make_grid(surface, 10).nodes
    hk = aniso_frame(body, surface, uv).HK
    assert np.abs(divergence_mean_curvature(body, surface, uv) - hk).max() < 1e-8
    assert grad_phiK_check(body, surface, uv) < 1e-8


def test_isotropic_reduction():
    rho, R = 1.5, 2.0
    body = make_body("ball", {"radius": rho})
    patch = make_patch(cap(np.pi, scale=R), make_body("ball"))
    grid = make_grid(patch, 16)
    af = aniso_frame(body, patch, grid.nodes)
    assert np.allclose(af.HK, -rho / R)
    assert aniso_area(body, patch, grid) == pytest.approx(rho * 4 * np.pi * R**2, rel=1e-12)


def test_aniso_area_of_wulff_shape_is_n_plus_one_volumes():
    body = make_body("ellipsoid", {"axes": [1.0, 1.5, 2.0]})
    patch, grid = wulff_patch(body, 48)
    assert aniso_area(body, patch, grid) == pytest.approx(3 * 4 * np.pi, rel=1e-10)


def test_conormal_reduces_to_conormal_for_ball():
    body = make_body("ball")
    patch = make_patch(cap(1.0), body)
    s = np.linspace(0, 2 * np.pi, 5)
    assert np.allclose(aniso_conormal(body, patch, "u1", s), boundary_frame(patch, "u1", s).conormal)


def test_conormal_is_orthogonal_to_aniso_normal_and_tangent():
    body = make_body("offset-ellipsoid", {"axes": [1.0, 1.2, 0.9], "offset": [0.1, 0.05, 0.1]})
    patch = make_patch(cap(1.2), make_body("ball"))
    s = np.linspace(0, 2 * np.pi, 7)
    nuK = aniso_conormal(body, patch, "u1", s)
    bf = boundary_frame(patch, "u1", s)
    nk = aniso_frame(body, patch, bf.frame.uv).NK
    assert np.abs(np.sum(nuK * nk, -1)).max() < 1e-14
    assert np.abs(np.sum(nuK * bf.tangent, -1)).max() < 1e-14


def test_defect_positive_off_wulff_shape():
    ball = make_body("ball")
    ellipsoid = make_patch(cap(np.pi, shape={"kind": "ellipsoid", "params": {"axes": [1.0, 1.0, 2.0]}}), ball)
    sup, integral = umbilicity_defect(ball, ellipsoid, make_grid(ellipsoid, 24))
    assert sup > 0.2 and integral > 0


def test_classification_recovers_center_and_scale():
    body = make_body("offset-ellipsoid", {"axes": [1.0, 1.2, 0.9], "offset": [0.1, 0.05, 0.1]})
    patch, grid = wulff_patch(body, 16)
    moved = transform(patch, 0.7, [0.3, -0.1, 0.2])
    v = classify_umbilical(body, moved, grid)
    assert v.kind == "wulff"
    assert np.allclose(v.center, [0.3, -0.1, 0.2], atol=1e-10)
    assert v.scale == pytest.approx(0.7, abs=1e-10)


def test_classification_plane_and_nonumbilical():
    body = make_body("ellipsoid", {"axes": [1.0, 1.3, 0.8]})
    plane = make_patch({"kind": "plane", "params": {"height": 0.4, "half_width": 0.5}}, body)
    assert classify_umbilical(body, plane, make_grid(plane, 6)).kind == "plane"
    graph = make_patch({"kind": "graph", "params": {"tilt": 0.3}}, body)
    assert classify_umbilical(body, graph, make_grid(graph, 12)).kind == "not-umbilical"


axes = st.tuples(*[st.floats(0.5, 2.0)] * 3)


@settings(max_examples=20, deadline=None)
@given(axes, axes)
def test_umbilicity_inequality(k_axes, s_axes):
    body = make_body("ellipsoid", {"axes": list(k_axes)})
    surface = make_patch(cap(np.pi, shape={"kind": "ellipsoid", "params": {"axes": list(s_axes)}}), body)
    af = aniso_frame(body, surface, make_grid(surface, 8).nodes)
    assert af.defect.min() > -1e-9 * max(1.0, np.abs(af.trBK2).max())
