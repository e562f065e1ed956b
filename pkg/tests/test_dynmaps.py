import math

import numpy as np
import pytest

from parabren.dynmaps import (BlaschkeProduct, Composition, CubicPerOne, DegenerateGerm,
                              DriftNotConverged, FirstTypeError, MapError, Polynomial, ZExpZ,
                              blaschke_boundary_parabolic, cauliflower, denjoy_wolff_drift,
                              from_halfplane, model_blaschke, parabolic_germ, parse_map,
                              to_halfplane)


def test_cubic_evaluation_and_normal_form():
    f = CubicPerOne(0, 1)
    z = np.array([0.3 - 0.2j, 1.5 + 0.7j])
    assert np.allclose(f(z), z - z ** 2 + z ** 3 / 3, rtol=0, atol=1e-14)
    for pq in (0, "1/2", "2/5"):
        for c in (-1, 0.5 + 2j, 3.05 + 1.88j):
            g = CubicPerOne(pq, c)
            assert g(np.array([0j]))[0] == 0
            h = 1e-6
            fd = (g(np.array([h]))[0] - g(np.array([-h]))[0]) / (2 * h)
            assert abs(fd - g.lam) < 1e-9


def test_cubic_critical_points():
    pts = CubicPerOne("2/5", 2 + 1j).critical_points()
    assert {(complex(p), m) for p, m in pts} == {(1 + 0j, 1), (2 + 1j, 1)}
    assert [(complex(p), m) for p, m in CubicPerOne(0, 1).critical_points()] == [(1 + 0j, 2)]
    with pytest.raises(MapError):
        parse_map("cubic λ=0 c=0,0")


def test_zexpz_facts():
    f = ZExpZ()
    assert abs(f(np.array([-1 + 0j]))[0] + math.exp(-1)) < 1e-15
    assert [(complex(p), m) for p, m in f.critical_points()] == [(-1 + 0j, 1)]
    g = parabolic_germ(f)
    assert g.k == 1 and abs(g.a - 1) < 1e-10


def test_blaschke_model():
    G = model_blaschke()
    z = np.array([0.2 + 0.1j, -0.5j, 0.9])
    assert np.allclose(G(z), (3 * z ** 2 + 1) / (z ** 2 + 3), atol=1e-14)
    assert abs(G(np.array([1 + 0j]))[0] - 1) < 1e-15
    pts = G.critical_points_in_disk()
    assert len(pts) == 1 and abs(pts[0][0]) < 1e-12
    assert abs(G(np.array([0j]))[0] - 1 / 3) < 1e-15
    # F'(z) = 16 z / (z^2 + 3)^2
    assert abs(G.deriv(np.array([1 + 0j]))[0] - 1) < 1e-14


def test_blaschke_symmetry_and_properness():
    G = BlaschkeProduct([0.3 + 0.2j, -0.5j, 0.1], np.exp(0.7j))
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 2, 200) + 1j * rng.uniform(-2, 2, 200)
    z = z[np.abs(np.abs(z) - 1) > 1e-3]
    assert np.allclose(G(1 / np.conj(z)), 1 / np.conj(G(z)), rtol=1e-10, atol=1e-10)
    for r in (0.3, 0.6, 0.9):
        circ = r * np.exp(2j * np.pi * np.arange(512) / 512)
        assert np.max(np.abs(G(circ))) < 1


def test_boundary_parabolic_point():
    w, germ = blaschke_boundary_parabolic(model_blaschke())
    assert abs(w - 1) < 1e-12
    assert germ.k == 2
    with pytest.raises(FirstTypeError):
        blaschke_boundary_parabolic(BlaschkeProduct([0j, 0.5], 1.0))


def test_germs():
    g = parabolic_germ(cauliflower())
    assert g.k == 1 and abs(g.a - 1) < 1e-12
    g = parabolic_germ(CubicPerOne("2/5", 2 + 1j))
    assert g.k == 5 and g.rotation.denominator == 5
    with pytest.raises(DegenerateGerm):
        parabolic_germ(Polynomial([0, 1]))


def test_drift_fits():
    fit = denjoy_wolff_drift(lambda u: u + 1, 2 + 1j)
    assert abs(fit.b) < 1e-9 and abs(fit.tau - (2 + 1j)) < 1e-9
    b0 = 0.7
    fit = denjoy_wolff_drift(lambda u: u + 1 + b0 / u, 1 + 1j)
    assert abs(fit.b - b0) < 0.02 * b0


def test_one_axis_orbit_keeps_a_positive_step():
    # u + 1 - 1/u maps the upper half-plane into itself with one axis at infinity
    fit = denjoy_wolff_drift(lambda u: u + 1 - 1 / u, 0.3 + 0.5j)
    assert abs(fit.b + 1) < 0.02
    assert abs(fit.orbit[-1].imag - fit.tau.imag) < 1e-2
    assert fit.step_limit > 0.05


def test_two_axis_model_is_not_translation_like():
    # G has two axes at 1: the orbit of 0 grows like sqrt(n) and the step tends to 0
    u = 0.5j
    for _ in range(4000):
        u = complex(to_halfplane(model_blaschke()(from_halfplane(np.array([u]))))[0])
    assert 50 < u.imag < 120
    with pytest.raises(DriftNotConverged):
        denjoy_wolff_drift(model_blaschke(), 0.5j)


def test_map_grammar():
    assert parse_map("zexpz").spec == "zexpz"
    f = parse_map("cubic λ=2/5 c=1.5,-0.5")
    assert isinstance(f, CubicPerOne) and f.c == 1.5 - 0.5j
    G = parse_map("blaschke zeros=[0.5j,-0.5j] rot=1,0")
    assert G.degree == 2
    h = parse_map("compose gmodel;gmodel")
    assert isinstance(h, Composition)
    z = np.array([0.3 + 0.1j])
    assert np.allclose(h(z), model_blaschke()(model_blaschke()(z)))
    with pytest.raises(MapError):
        parse_map("nonsense")
