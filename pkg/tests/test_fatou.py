import json

import numpy as np
import pytest

from parabren import kernels as K
from parabren.checks import abel_residuals, petal_points
from parabren.dynmaps import (BlaschkeProduct, Composition, CubicPerOne, Polynomial, ZExpZ,
                              cauliflower, model_blaschke)
from parabren.fatou import (FatouError, FatouSolver, HornMap, RenormalizedMap,
                            blaschke_renorm, cache_key, rf_orbit, sigma0)


def mobius():
    # z / (1 - z) = (z - 1) / 3 after the Blaschke factor (2z - 1)/(2 - z), written
    # as affine o Blaschke o affine; its Fatou coordinate is exactly -1/z
    return Composition([Polynomial([1, 1]), BlaschkeProduct([0.5], 1.0),
                        Polynomial([-1 / 3, 1 / 3])])


def test_closed_form_coordinates():
    f = mobius()
    S = FatouSolver(f, use_cache=False)
    rng = np.random.default_rng(1)
    w = rng.uniform(-4, -0.2, 200) + 1j * rng.uniform(-3, 3, 200)
    phi = S.attracting_coord(w)[0]
    off = phi + 1 / w
    assert np.max(np.abs(off - off[0])) < 1e-8
    zeta = rng.uniform(-3, 3, 200) + 1j * rng.uniform(0.5, 3, 200)
    psi = S.repelling_param(zeta)[0]
    assert np.max(np.abs(psi + 1 / (zeta - off[0]))) < 1e-8


@pytest.mark.parametrize("make", [cauliflower, ZExpZ, lambda: CubicPerOne(0, -1)])
def test_abel_relations(make):
    r = abel_residuals(make(), n=200)
    assert r["phi_ok"] == 200 and r["psi_ok"] == 200
    assert max(r["phi"], r["psi"], r["psi_extended"]) < 1e-8


def test_zexpz_negative_axis_in_basin():
    S = FatouSolver(ZExpZ(), use_cache=False)
    x = -np.geomspace(0.01, 30, 60)
    _, st = S.attracting_coord(x, strict=False)
    assert np.all(st == K.ST_OK)
    _, st = S.attracting_coord(np.geomspace(0.01, 5, 20), strict=False)
    assert not np.any(st == K.ST_OK)
    with pytest.raises(FatouError):
        S.attracting_coord(np.array([1.0]))


def test_depth_independence():
    f = cauliflower()
    a = FatouSolver(f, nmax=50_000, use_cache=False)
    b = FatouSolver(f, nmax=100_000, use_cache=False)
    rng = np.random.default_rng(2)
    z = petal_points(a, 100, rng)
    z = np.r_[z, -0.5 + 0.1j, -0.2 - 0.3j]
    assert np.max(np.abs(a.attracting_coord(z)[0] - b.attracting_coord(z)[0])) <= 10 * a.eps
    a.attracting_coord_checked(z)
    zeta = np.array([0.3 + 1j, -1.2 - 0.4j, 2.1 + 0.2j])
    assert np.max(np.abs(a.repelling_param(zeta, extra=3)[0] - a.repelling_param(zeta)[0])) <= 10 * a.eps


def test_horn_map_properties():
    horn = HornMap.build(cauliflower(), "+")
    rng = np.random.default_rng(3)
    zeta = rng.random(50) + 1j * rng.uniform(3, 6, 50)
    assert np.max(np.abs(horn(zeta + 1)[0] - horn(zeta)[0] - 1)) < 1e-6
    offsets = [horn.mean_offset(H) for H in (3.0, 5.0, 8.0)]
    assert abs(offsets[1] - offsets[2]) < 1e-9
    low = HornMap.build(cauliflower(), "-")
    assert np.allclose(low(np.conj(zeta))[0], np.conj(horn(zeta)[0]), atol=1e-9)


def test_sigma0_rules():
    horn = HornMap.build(ZExpZ(), "+")
    s0 = sigma0(horn, 0)
    s_half = sigma0(horn, "1/2")
    assert abs(((s_half - s0).real - 0.5) % 1.0) < 1e-12
    assert 0 <= s0.real < 1
    heights = [sigma0(horn, 0, H0=H, H1=2 * H) for H in (3.0, 4.0, 5.0)]
    assert max(abs(h - heights[0]) for h in heights) < 1e-6


@pytest.mark.parametrize("pq", ["0", "1/2", "2/5"])
def test_renormalized_map_normalization(pq):
    rmap = RenormalizedMap.build(cauliflower(), pq, "+")
    assert rmap(np.array([0j]))[0][0] == 0
    want = np.exp(2j * np.pi * float(rmap.pq))
    assert abs(rmap.derivative_at_zero() - want) < 1e-4
    z = 1e-5 * np.exp(0.3j)
    assert abs(rmap(np.array([z]))[0][0] / z - want) < 1e-4


def test_critical_value_of_renormalized_zexpz():
    rmap = RenormalizedMap.build(ZExpZ(), 0, "+")
    cvs = rmap.critical_values()
    assert len(cvs) == 1
    v = -np.exp(-1)
    phi = complex(rmap.horn.att.attracting_coord(np.array([v]))[0][0])
    want = np.exp(2j * np.pi * (rmap.sigma0 + phi)) / rmap.scale
    assert abs(cvs[0]["value"] - want) < 1e-12
    traj, reason = rf_orbit(rmap, cvs[0]["value"], 200)
    assert reason == "petal"
    assert abs(traj[-1]) < abs(traj[0])


def test_rf_orbits():
    rmap = RenormalizedMap.build(ZExpZ(), 0, "+")
    traj, reason = rf_orbit(rmap, 0j, 5)
    assert traj == [0j] and reason == "fixed"
    for w in (5.0, 10.0, 100.0, 1000.0, -10j):
        traj, reason = rf_orbit(rmap, w, 5)
        assert reason in ("domain", "escape") and len(traj) <= 3


def test_real_map_conjugation_symmetry():
    up = RenormalizedMap.build(cauliflower(), 0, "+")
    down = RenormalizedMap.build(cauliflower(), 0, "-")
    w = np.array([0.01 + 0.02j, -0.03 + 0.01j, 0.02 - 0.015j])
    a = np.conj(up(np.conj(w))[0])
    b = down(w)[0]
    assert np.allclose(a * up.scale, b * down.scale, atol=1e-9) or np.allclose(a, b, atol=1e-9)


def test_blaschke_renormalization():
    rmap = blaschke_renorm(model_blaschke())
    assert rmap(np.array([0j]))[0][0] == 0
    assert abs(rmap.derivative_at_zero() - 1) < 1e-4
    rng = np.random.default_rng(4)
    x = rng.random(40)
    _, up = rmap.horn(x + 1j * rng.uniform(0.05, 2, 40), strict=False)
    _, down = rmap.horn(x - 1j * rng.uniform(0.05, 2, 40), strict=False)
    assert np.all(up == K.ST_OK)
    assert not np.any(down == K.ST_OK)
    # the repelling parametrisation sends the real line to the unit circle
    S = rmap.horn.rep
    psi = S.repelling_param(np.linspace(-3, 3, 25) + 0j)[0]
    assert np.max(np.abs(np.abs(psi) - 1)) < 1e-9


def test_cache_hit_and_corruption(tmp_path, monkeypatch):
    monkeypatch.setenv("PARABREN_CACHE", str(tmp_path))
    a = FatouSolver(cauliflower())
    assert not a.cache_hit
    b = FatouSolver(cauliflower())
    assert b.cache_hit and b.c_att == a.c_att
    (entry,) = list(tmp_path.glob("*.json"))
    doc = json.loads(entry.read_text())
    doc["payload"]["c_att"] = [9.0, 9.0]
    entry.write_text(json.dumps(doc))
    c = FatouSolver(cauliflower())
    assert not c.cache_hit and c.c_att == a.c_att
    assert len(cache_key("x", 1)) == 32
