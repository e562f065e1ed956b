import json
from fractions import Fraction

import numpy as np
import pytest

from parabren.comptype import is_gleaning
from parabren.dynmaps import BlaschkeProduct, Composition, parse_map
from parabren.fatou import FatouSolver, RenormalizedMap
from parabren.render import (Code, CriticalVerdict, ClassificationReport, Raster, RenderError,
                             Window, basin_membership, classify_parameter,
                             classify_renormalized, descendant_witness, glean_from_indices,
                             parse_size, periodicity_agreement, render_basin,
                             render_psi_preimage, render_slice)

TWO_FIFTHS = Fraction(2, 5)


@pytest.fixture(scope="module")
def zexpz_solver():
    return FatouSolver(parse_map("zexpz"), use_cache=False)


def test_window_parse_and_pixels():
    w = Window.parse("[-1,3]x[-2,2]")
    assert w.bounds == (-1.0, 3.0, -2.0, 2.0)
    assert Window.parse("1,0,4,4") == w
    grid = w.pixel_centers(4, 2)
    assert grid.shape == (2, 4)
    assert grid[0, 0] == complex(-0.5, 1.0)
    r, c = w.to_pixel(np.array([grid[1, 3], 10 + 0j]), 4, 2)
    assert (r.tolist(), c.tolist()) == ([1, -1], [3, -1])
    with pytest.raises(RenderError):
        Window(0j, 0.0, 1.0)
    assert parse_size("800x600") == (800, 600)
    with pytest.raises(RenderError):
        parse_size("0x3")


def test_small_basin_render(zexpz_solver):
    r = render_basin(None, Window.from_bounds(-14, 2, -7, 7), (80, 60), solver=zexpz_solver)
    assert r.codes.shape == (60, 80)
    assert r.count(Code.UNKNOWN) == 0
    imm = r.codes >= Code.IMMEDIATE
    assert imm.any() and r.count(Code.ESCAPE) > 0
    # immediate basin lies in the strip |Im z| < 2 pi
    assert np.all(np.abs(r.window.pixel_centers(80, 60)[imm].imag) < 2 * np.pi)
    # chessboard coordinate vanishes on the critical level only
    assert np.any(r.aux[imm] < 0) and np.any(r.aux[imm] > 0)


def test_basin_membership_points(zexpz_solver):
    res = basin_membership(None, [-1.0, -5.0, 1.0], solver=zexpz_solver)
    assert [d["immediate"] for d in res] == ["yes", "yes", "no"]


def test_psi_preimage_periodic(zexpz_solver):
    r = render_psi_preimage(zexpz_solver, Window.from_bounds(-4, 1, -1.5, 1.5), (500, 300))
    assert periodicity_agreement(r, 1.0) >= 0.99
    with pytest.raises(RenderError):
        periodicity_agreement(Raster(r.codes[:, :7], r.aux[:, :7], Window.from_bounds(0, 0.7, 0, 1)))


@pytest.mark.parametrize("c,code,composition", [
    (1.42, "A", "3"),
    (-0.10 + 1.17j, "B", "2 o 2"),
    (2.78 - 1.15j, "C", "2"),
    (40.0, "D", "2"),
])
def test_slice_types(c, code, composition):
    rep = classify_parameter(TWO_FIFTHS, c)
    assert rep.type_code == code
    assert rep.composition == composition
    assert rep.consistent()


def test_degenerate_and_exceptional_parameters():
    rep = classify_parameter(0, 1)
    assert rep.degenerate and rep.type_code == "A"
    assert rep.verdicts[0].multiplicity == 2
    e = classify_parameter(0, -1)
    assert e.type_code == "E" and e.e_suspect
    with pytest.raises(RenderError):
        classify_parameter(0, 0)


def test_report_consistency_rules():
    yes = [CriticalVerdict(1, 1, "converges", 0, "yes"), CriticalVerdict(2, 1, "converges", 0, "yes")]
    assert ClassificationReport(yes, "A").consistent()
    assert not ClassificationReport(yes, "B").consistent()
    split = [CriticalVerdict(1, 1, "converges", 0, "yes"), CriticalVerdict(2, 1, "converges", 1, "yes")]
    assert ClassificationReport(split, "B").consistent()
    assert ClassificationReport(split[:1], "D").consistent()


def test_log_coordinate_slice_is_periodic():
    win = Window.from_bounds(-np.pi, np.pi, -1.0, 1.0)
    r = render_slice(0, win, (40, 20), log_coords=True)
    assert r.log_coords and r.meta["kind"] == "slice"
    # pixel columns at theta and theta + 2 pi name the same parameter
    wide = render_slice(0, Window.from_bounds(-np.pi, 3 * np.pi, -1.0, 1.0), (80, 20), log_coords=True)
    assert np.array_equal(wide.codes[:, :40], wide.codes[:, 40:])


def test_zexpz_renormalization_has_composition_two():
    rmap = RenormalizedMap.build(parse_map("zexpz"), 0, "+", use_cache=False)
    rep = classify_renormalized(rmap)
    assert rep.composition == "2"
    assert sum(v.multiplicity for v in rep.verdicts if v.status == "converges") == 1


def test_glean_from_indices_orders_by_index_then_factor():
    # three factors with 7, 4, 3 critical points (mock indices)
    entries = [(0, 0, 3), (1, 0, 1), (2, 1, 1), (1, 1, 1), (0, None, 4), (2, None, 2)]
    target, beta = glean_from_indices((7, 4, 3), entries)
    assert target == (3, 1, 1, 1)
    assert beta == (0, 1, 1, 2)
    assert is_gleaning((7, 4, 3), target) is not None
    assert glean_from_indices((2,), [(0, None, 2)]) == ((), ())


def test_descendant_witness_single_critical_point():
    f = Composition([BlaschkeProduct([0.0, 0.5], 1.0), BlaschkeProduct([0.2], 1.0)])
    wit = descendant_witness(f)
    assert wit.valid
    assert wit.source == (1,) and wit.target == (1,)
    assert str(wit.composition_type) == "2"


def test_descendant_witness_with_indexer():
    f = Composition([BlaschkeProduct([0.0, 0.3], 1.0), BlaschkeProduct([0.2, -0.4], 1.0)])
    wit = descendant_witness(f, indexer=lambda i, x: i)
    assert wit.source == (1, 1)
    assert wit.target == (1, 1) and wit.valid


def test_raster_outputs(tmp_path):
    codes = np.array([[Code.ESCAPE, Code.IMMEDIATE], [Code.BASIN, Code.UNKNOWN]], dtype=np.uint8)
    aux = np.array([[0.0, -1.0], [0.0, 0.0]])
    r = Raster(codes, aux, Window.from_bounds(0, 2, 0, 1), meta={"kind": "test"},
               census=[{"component_id": 3, "type": "A", "area_px": 1,
                        "centroid_re": 0.5, "centroid_im": 0.25}])
    r.write_ppm(tmp_path / "a.ppm")
    data = (tmp_path / "a.ppm").read_bytes()
    assert data.startswith(b"P6\n2 2\n255\n") and len(data) == len(b"P6\n2 2\n255\n") + 12
    r.write_sidecar(tmp_path / "a.json")
    side = json.loads((tmp_path / "a.json").read_text())
    assert side["width"] == 2 and side["kind"] == "test"
    assert side["window"] == "[0.0,2.0]x[0.0,1.0]"
    r.write_census(tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines == ["component_id,type,area_px,centroid_re,centroid_im", "3,A,1,0.5,0.25"]
