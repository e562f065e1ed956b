"""Acceptance checks shared by ``parabren verify`` and the test suite.

Each check returns a :class:`CheckResult`.  Tolerances and time budgets are
module constants so that the tests and the command line agree.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels as K
from .comptype import (CompositionType, canonical, enumerate_descendants, enumerate_gleanings,
                       is_descendant, is_gleaning)
from .dynmaps import CubicPerOne, ZExpZ, cauliflower
from .fatou import FatouError, FatouSolver, HornMap, RenormalizedMap, rf_orbit
from .render import (Code, RenderError, Window, basin_membership, classify_parameter,
                     classify_renormalized, critical_multiplicity, render_basin, render_slice,
                     render_virtual_basins)

SEED = 0
ABEL_TOL = 1e-8
HORN_TOL = 1e-6
DERIV_TOL = 1e-4
OVERLAP_TOL = 1e-3
IMAGE_TOL = 0.99

BASIN_WINDOW = Window.from_bounds(-14, 2, -7, 7)
BASIN_SIZE = (800, 600)
SLICE_WINDOW = Window.from_bounds(-1.5, 6.5, -3.75, 4.25)
SLICE_SIZE = (400, 400)
VIRTUAL_WINDOW = Window.from_bounds(-1.5, 1.0, -1.25, 1.25)
VIRTUAL_SIZE = (400, 400)

DESCENDANTS_OF_3 = {"3", "2 o 2", "2"}
DESCENDANTS_OF_4 = ["4", "3", "2", "3 o 2", "2 o 3", "2 o 2", "2 o 2 o 2"]
DESCENDANTS_OF_5 = ["5", "3 o 3", "2 o 4", "4", "2 o 2 o 3", "2 o 3", "3", "2 o 2 o 2 o 2",
                    "2 o 2 o 2", "2 o 2", "2"]


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    seconds: float = 0.0
    budget: float | None = None
    details: dict = field(default_factory=dict)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.criterion:2d} {self.name} ({self.seconds:.1f}s)"

    def as_dict(self):
        return asdict(self)


def _timed(criterion, name, budget, fn, *args, **kw):
    t0 = time.perf_counter()
    passed, details = fn(*args, **kw)
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        details["over_budget"] = True
        passed = False
    return CheckResult(criterion, name, bool(passed), dt, budget, details)


# ------------------------------------------------------------------ combinatorics


def _types(names):
    return {CompositionType.parse(n) for n in names}


def _comptype_exact():
    d3 = {str(t) for t in enumerate_descendants(CompositionType((3,)))}
    d4 = [str(t) for t in enumerate_descendants(CompositionType((4,)))]
    d4p = {str(t) for t in enumerate_descendants(CompositionType((4,)), True)}
    d5p = {str(t) for t in enumerate_descendants(CompositionType((5,)), True)}
    want4p = {str(t.canonical()) for t in _types(DESCENDANTS_OF_4)}
    want5p = {str(t.canonical()) for t in _types(DESCENDANTS_OF_5)}
    yes = is_gleaning((10, 7), (1, 3, 4, 8)) is not None
    no = is_gleaning((10, 7), (4, 8, 4)) is None
    details = {
        "descendants_3": sorted(d3),
        "descendants_4_ordered": d4,
        "descendants_4_classes": sorted(d4p),
        "descendants_5_classes": sorted(d5p),
        "glean_1_3_4_8": yes,
        "reject_4_8_4": no,
    }
    ok = (d3 == DESCENDANTS_OF_3 and set(d4) == set(DESCENDANTS_OF_4) and len(d4) == 7
          and d4p == want4p and d5p == want5p and len(d5p) == 11 and yes and no)
    return ok, details


def check_comptype():
    return _timed(1, "combinatorics exactness", 1.0, _comptype_exact)


def brute_force_feasible(source, target):
    """Try assignments of target entries to bowls, abandoning overfull bowls."""
    room = list(source)

    def place(i):
        if i == len(target):
            return True
        for j in range(len(room)):
            if room[j] >= target[i]:
                room[j] -= target[i]
                if place(i + 1):
                    return True
                room[j] += target[i]
        return False

    return place(0)


def _compositions(n):
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first,) + rest


def _ordered_targets(total):
    # every positive sequence with entry sum <= total, shared by all sources of that size
    return [t for s in range(1, total + 1) for t in _compositions(s)]


def _oracle(max_sum=8):
    mismatches = []
    checked = 0
    cache = {}
    for s in range(1, max_sum + 1):
        for source in _compositions(s):
            targets = cache.setdefault(s, _ordered_targets(s))
            want = {t for t in targets if brute_force_feasible(source, t)}
            got = set(enumerate_gleanings(source))
            classes = set(enumerate_gleanings(source, up_to_permutation=True))
            checked += 1
            if got != want or classes != {canonical(t) for t in want}:
                mismatches.append(list(source))
    return not mismatches, {"sources": checked, "max_sum": max_sum, "mismatches": mismatches}


def check_oracle(max_sum=8):
    return _timed(2, "gleaning oracle equivalence", 30.0, _oracle, max_sum)


# ------------------------------------------------------------------ Fatou coordinates


ABEL_MAPS = {
    "cauliflower": cauliflower,
    "zexpz": ZExpZ,
    "cubic0": lambda: CubicPerOne(0, -1),
}


def petal_points(solver, n, rng, attracting=True):
    """Points of the attracting petal, or zeta values of the repelling one."""
    R = solver.R
    x = R * (1 + 2 * rng.random(n))
    y = R * (2 * rng.random(n) - 1)
    if not attracting:
        return -x + 1j * y
    r = -1 / (solver.k * solver.germ.a * (x + 1j * y))
    th = solver.att_angle(solver.axis)
    return np.array([solver.germ.point + K.root_near(complex(v), solver.k, th) for v in r])


def abel_residuals(f, n=1000, seed=SEED):
    """Residuals of both functional equations on petal and extended samples.

    Extended repelling samples (zeta in [-3,3]^2) are measured relative to
    1 + |f(psi(zeta))| since psi is large there and rounding scales with it.
    """
    solver = FatouSolver(f)
    rng = np.random.default_rng(seed)
    z = petal_points(solver, n, rng)
    p0, s0 = solver.attracting_coord(z, strict=False)
    p1, s1 = solver.attracting_coord(f(z), strict=False)
    ok = (s0 == K.ST_OK) & (s1 == K.ST_OK)
    phi = float(np.max(np.abs(p1 - p0 - 1)[ok])) if ok.any() else np.inf
    out = {"map": f.spec, "seed": seed, "samples": n, "phi_ok": int(ok.sum()), "phi": phi}
    for label, zeta, rel in (("psi", petal_points(solver, n, rng, False), False),
                             ("psi_extended", rng.uniform(-3, 3, n) + 1j * rng.uniform(-3, 3, n), True)):
        a, sa = solver.repelling_param(zeta, strict=False)
        b, sb = solver.repelling_param(zeta + 1, strict=False)
        ok = (sa == K.ST_OK) & (sb == K.ST_OK)
        with np.errstate(all="ignore"):
            fa = f(a)
            d = np.abs(b - fa)
            if rel:
                d = d / (1 + np.abs(fa))
        out[label + "_ok"] = int(ok.sum())
        out[label] = float(np.max(d[ok])) if ok.any() else np.inf
    return out


def _abel(names, n, seed):
    rows = {}
    ok = True
    for name in names:
        t0 = time.perf_counter()
        r = abel_residuals(ABEL_MAPS[name](), n, seed)
        r["seconds"] = time.perf_counter() - t0
        good = (max(r["phi"], r["psi"], r["psi_extended"]) <= ABEL_TOL
                and r["phi_ok"] == n and r["psi_ok"] == n and r["seconds"] <= 60.0)
        r["passed"] = good
        ok &= good
        rows[name] = r
    return ok, rows


def check_abel(names=("cauliflower", "zexpz", "cubic0"), n=1000, seed=SEED):
    return _timed(3, "Abel residuals", 60.0 * len(names), _abel, names, n, seed)


def horn_equivariance(f, n=100, seed=SEED):
    horn = HornMap.build(f, "+")
    rng = np.random.default_rng(seed)
    zeta = rng.random(n) + 1j * rng.uniform(3.0, 6.0, n)
    h0, _ = horn(zeta)
    h1, _ = horn(zeta + 1)
    return float(np.max(np.abs(h1 - h0 - 1)))


def _horn(names, pqs, n, seed):
    rows = {}
    ok = True
    for name in names:
        f = ABEL_MAPS[name]()
        row = {"translation": horn_equivariance(f, n, seed)}
        ok &= row["translation"] <= HORN_TOL
        for pq in pqs:
            rmap = RenormalizedMap.build(f, Fraction(pq), "+")
            want = complex(np.exp(2j * np.pi * float(Fraction(pq))))
            err = abs(rmap.derivative_at_zero(1e-4) - want)
            row[f"derivative_{pq}"] = err
            ok &= err <= DERIV_TOL
        rows[name] = row
    return ok, {"seed": seed, "samples": n, "maps": rows}


def check_horn(names=("cauliflower", "zexpz"), pqs=("0", "1/2", "2/5"), n=100, seed=SEED):
    return _timed(4, "horn map and normalization", 120.0, _horn, names, pqs, n, seed)


# ------------------------------------------------------------------ z exp z


def _zexpz_basin(size, window, n, seed):
    f = ZExpZ()
    raster = render_basin(f, window, size)
    pts = raster.window.pixel_centers(raster.width, raster.height)
    imm = raster.codes >= Code.IMMEDIATE
    bad = int(np.count_nonzero(imm & (np.abs(pts.imag) >= 2 * np.pi)))
    rng = np.random.default_rng(seed)
    neg = -np.exp(rng.uniform(np.log(0.01), np.log(10), n))
    pos = np.exp(rng.uniform(np.log(0.01), np.log(10), n))
    res_neg = basin_membership(f, neg)
    res_pos = basin_membership(f, pos)
    neg_in = sum(r["status"] == K.ST_OK and r["immediate"] == "yes" for r in res_neg)
    pos_out = sum(r["status"] != K.ST_OK for r in res_pos)
    crit = basin_membership(f, [-1.0])[0]
    details = {"size": list(size), "window": str(window), "seed": seed,
               "immediate_px": int(imm.sum()), "basin_px": int(np.count_nonzero(
                   (raster.codes >= Code.BASIN) & ~imm)),
               "unknown_px": raster.count(Code.UNKNOWN), "outside_strip_px": bad,
               "negative_in_basin": neg_in, "positive_outside": pos_out, "samples": n,
               "critical_point_immediate": crit["immediate"]}
    ok = bad == 0 and neg_in == n and pos_out == n and crit["immediate"] == "yes"
    return ok, details


def check_zexpz_basin(size=BASIN_SIZE, window=BASIN_WINDOW, n=50, seed=SEED):
    return _timed(5, "z exp z basin facts", 120.0, _zexpz_basin, size, window, n, seed)


def _dyn2(budget):
    rmap = RenormalizedMap.build(ZExpZ(), 0, "+")
    cvs = rmap.critical_values()
    rmap.germ()
    details = {"critical_values": [cv["value"] for cv in cvs]}
    if len(cvs) != 1:
        return False, details
    traj, reason = rf_orbit(rmap, cvs[0]["value"], budget)
    rep = classify_renormalized(rmap, budget)
    details.update(orbit_reason=reason, orbit_steps=len(traj) - 1,
                   orbit_end=abs(traj[-1]), type_code=rep.type_code,
                   composition=rep.composition)
    ok = reason == "petal" and rep.composition == "2"
    return ok, details


def check_dyn2(budget=200):
    return _timed(6, "renormalization of z exp z stays in type 2", 300.0, _dyn2, budget)


# ------------------------------------------------------------------ slices


def slice_census(size=SLICE_SIZE, window=SLICE_WINDOW, pq="2/5"):
    raster = render_slice(pq, window, size)
    pearls = [row for row in raster.census if row["type"] in ("A", "B")]
    return raster, {
        "size": list(size), "pearls": len(pearls),
        "a_pearls": sum(row["type"] == "A" for row in pearls),
        "lonely": [row["component_id"] for row in pearls if not row["neighbours"]],
        "areas": [row["area_px"] for row in pearls],
    }


def _pearls(size, window, pq):
    q = Fraction(pq).denominator
    rows = []
    for scale in (1, 2):
        sz = (size[0] * scale, size[1] * scale)
        _, row = slice_census(sz, window, pq)
        rows.append(row)
    ok = all(r["pearls"] == q and r["a_pearls"] == 1 and not r["lonely"] for r in rows)
    return ok, {"pq": str(pq), "window": str(window), "runs": rows}


def check_pearls(size=SLICE_SIZE, window=SLICE_WINDOW, pq="2/5"):
    return _timed(7, "pearl census", 900.0, _pearls, size, window, pq)


def a_component_samples(seed=SEED, radius=0.6, max_tries=2000):
    """Parameters of Per_1(1) typed A, drawn around c = 1 (generator)."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        r = radius * np.sqrt(rng.random())
        c = complex(1 + r * np.exp(2j * np.pi * rng.random()))
        if abs(c - 1) < 1e-3:
            continue
        if classify_parameter(0, c).type_code == "A":
            yield c


def _gleaning(n, seed, budget, max_samples):
    rows = []
    violations = 0
    classified = 0
    three = CompositionType((3,))
    for c in a_component_samples(seed):
        if classified >= n or len(rows) >= max_samples:
            break
        row = {"c": c}
        rows.append(row)
        try:
            rmap = RenormalizedMap.build(CubicPerOne(0, c), 0, "+", use_cache=False)
            rep = classify_renormalized(rmap, budget)
        except (FatouError, RenderError) as exc:
            row["error"] = str(exc)
            continue
        mult = critical_multiplicity(rep)
        row.update(type_code=rep.type_code, composition=rep.composition, multiplicity=mult)
        if rep.type_code == "unknown":
            row["orbits"] = [v.status for v in rep.verdicts]
            continue
        classified += 1
        bad = mult > 2
        if rep.composition is not None:
            bad |= is_descendant(three, CompositionType.parse(rep.composition)) is None
        violations += bad
        row["violation"] = bool(bad)
    ok = classified >= n and violations == 0
    return ok, {"seed": seed, "drawn": len(rows), "classified": classified,
                "violations": violations, "samples": rows}


def check_gleaning(n=20, seed=SEED, budget=200, max_samples=100):
    return _timed(8, "gleaning inequality on the A component", 1800.0, _gleaning, n, seed,
                  budget, max_samples)


# ------------------------------------------------------------------ virtual basins


def _virtual(size, window, png):
    rmap = RenormalizedMap.build(ZExpZ(), 0, "+")
    vb = render_virtual_basins(rmap, window, size)
    if png:
        vb.raster.write_png(png)
    details = {"indices": vb.indices, "overlap_px": vb.overlap_px, "painted_px": vb.painted_px,
               "overlap_fraction": vb.overlap_fraction, "image_checked": vb.image_checked,
               "image_hits": vb.image_hits, "image_fraction": vb.image_fraction}
    ok = (len(vb.indices) >= 3 and vb.overlap_fraction <= OVERLAP_TOL
          and vb.image_fraction >= IMAGE_TOL)
    return ok, details


def check_virtual(size=VIRTUAL_SIZE, window=VIRTUAL_WINDOW, png=None):
    return _timed(9, "virtual basins", 600.0, _virtual, size, window, png)


# ------------------------------------------------------------------ determinism


def _ppm_digest(raster):
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "r.ppm")
        raster.write_ppm(path)
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()


def _determinism(basin_size, slice_size):
    out = {}
    ok = True
    for label, make in (
            ("basin", lambda: render_basin(ZExpZ(), BASIN_WINDOW, basin_size)),
            ("slice", lambda: render_slice("2/5", SLICE_WINDOW, slice_size))):
        a, b = _ppm_digest(make()), _ppm_digest(make())
        out[label] = {"first": a, "second": b}
        ok &= a == b
    return ok, out


def check_determinism(basin_size=BASIN_SIZE, slice_size=SLICE_SIZE):
    return _timed(10, "byte-identical reruns", None, _determinism, basin_size, slice_size)


CHECKS = {
    "comptype": (check_comptype, check_oracle),
    "abel": (check_abel,),
    "horn": (check_horn,),
    "basin": (check_zexpz_basin,),
    "dyn2": (check_dyn2,),
    "pearls": (check_pearls,),
    "gleaning": (check_gleaning,),
    "virtual": (check_virtual,),
    "determinism": (check_determinism,),
}


def run(names=None):
    """Run the named groups (all by default) in criterion order."""
    names = list(CHECKS) if not names else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check group(s): {', '.join(unknown)}")
    return [fn() for n in names for fn in CHECKS[n]]
