"""Rasters of dynamical planes, repelling-coordinate planes and parameter slices."""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage

from . import kernels as K
from . import render_kernels as RK
from .comptype import is_gleaning
from .dynmaps import Composition, CubicPerOne, MapError
from .fatou import CRITICAL_MODULUS, FatouError, FatouSolver, RenormalizedMap, rf_orbit

log = logging.getLogger(__name__)

NMAX = 100_000
ETA = 1.0
DEPTH = 8
AREA_THRESHOLD = 5e-4


class Code(enum.IntEnum):
    ESCAPE = 0
    UNKNOWN = 1
    BOUNDARY = 2
    A = 3
    B = 4
    C = 5
    D = 6
    PEARL = 7
    DOMAIN = 8
    E_SUSPECT = 9
    VIRTUAL = 10
    BASIN = 32       # + axis index
    IMMEDIATE = 64   # + axis index


PALETTE = {
    Code.ESCAPE: (255, 255, 255),
    Code.UNKNOWN: (255, 0, 255),
    Code.BOUNDARY: (64, 64, 64),
    Code.A: (232, 160, 32),
    Code.B: (40, 90, 200),
    Code.C: (240, 226, 190),
    Code.D: (255, 255, 255),
    Code.PEARL: (120, 60, 160),
    Code.DOMAIN: (200, 200, 200),
    Code.E_SUSPECT: (220, 30, 30),
}
CHESS_LOW = (240, 210, 40)
CHESS_HIGH = (130, 150, 60)
BASIN_GREY = (170, 170, 170)
VIRTUAL_COLORS = ((220, 40, 40), (40, 160, 70), (40, 90, 200), (230, 140, 20),
                  (140, 60, 170), (20, 170, 170))


class RenderError(ValueError):
    pass


# ------------------------------------------------------------------ raster


@dataclass(frozen=True)
class Window:
    """Axis-parallel rectangle given by its centre and side lengths."""

    center: complex
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise RenderError(f"empty window {self.width}x{self.height}")

    @classmethod
    def from_bounds(cls, x0, x1, y0, y1):
        return cls(complex((x0 + x1) / 2, (y0 + y1) / 2), x1 - x0, y1 - y0)

    @classmethod
    def parse(cls, text):
        """``[x0,x1]x[y0,y1]`` or ``cx,cy,w,h``."""
        t = text.replace(" ", "")
        if t.startswith("["):
            a, _, b = t.partition("]x[")
            x0, x1 = (float(v) for v in a.strip("[]").split(","))
            y0, y1 = (float(v) for v in b.strip("[]").split(","))
            return cls.from_bounds(x0, x1, y0, y1)
        vals = [float(v) for v in t.split(",")]
        if len(vals) != 4:
            raise RenderError(f"bad window {text!r}")
        return cls(complex(vals[0], vals[1]), vals[2], vals[3])

    @property
    def bounds(self):
        c = self.center
        return (c.real - self.width / 2, c.real + self.width / 2,
                c.imag - self.height / 2, c.imag + self.height / 2)

    def __str__(self):
        x0, x1, y0, y1 = self.bounds
        return f"[{x0!r},{x1!r}]x[{y0!r},{y1!r}]"

    def pixel_centers(self, width, height):
        """(height, width) array of pixel centres, row 0 at the top."""
        x0, _, _, y1 = self.bounds
        xs = x0 + (np.arange(width) + 0.5) * self.width / width
        ys = y1 - (np.arange(height) + 0.5) * self.height / height
        return xs[None, :] + 1j * ys[:, None]

    def to_pixel(self, z, width, height):
        """(row, col) integer indices, -1 outside."""
        x0, _, _, y1 = self.bounds
        z = np.asarray(z, dtype=complex)
        col = np.floor((z.real - x0) / self.width * width)
        row = np.floor((y1 - z.imag) / self.height * height)
        ok = np.isfinite(col) & np.isfinite(row) & (col >= 0) & (col < width) & (row >= 0) & (row < height)
        return np.where(ok, row, -1).astype(np.int64), np.where(ok, col, -1).astype(np.int64)


def parse_size(text):
    w, _, h = str(text).lower().partition("x")
    w, h = int(w), int(h)
    if w <= 0 or h <= 0:
        raise RenderError(f"bad size {text!r}")
    return w, h


@dataclass
class Raster:
    codes: np.ndarray
    aux: np.ndarray
    window: Window
    log_coords: bool = False
    meta: dict = field(default_factory=dict)
    census: list = field(default_factory=list)

    @property
    def height(self):
        return self.codes.shape[0]

    @property
    def width(self):
        return self.codes.shape[1]

    def count(self, code):
        return int(np.count_nonzero(self.codes == code))

    def rgb(self):
        out = np.zeros(self.codes.shape + (3,), dtype=np.uint8)
        for code, col in PALETTE.items():
            out[self.codes == code] = col
        basin = (self.codes >= Code.BASIN) & (self.codes < Code.IMMEDIATE)
        out[basin] = BASIN_GREY
        imm = self.codes >= Code.IMMEDIATE
        low = imm & (self.aux < 0)
        out[imm] = CHESS_HIGH
        out[low] = CHESS_LOW
        virt = self.codes == Code.VIRTUAL
        if virt.any():
            idx = np.mod(np.nan_to_num(self.aux[virt]).astype(np.int64), len(VIRTUAL_COLORS))
            out[virt] = np.asarray(VIRTUAL_COLORS, dtype=np.uint8)[idx]
        return out

    def write_ppm(self, path):
        img = self.rgb()
        with open(path, "wb") as fh:
            fh.write(b"P6\n%d %d\n255\n" % (self.width, self.height))
            fh.write(np.ascontiguousarray(img).tobytes())

    def write_png(self, path):
        from PIL import Image
        Image.fromarray(self.rgb(), "RGB").save(path)

    def sidecar(self):
        palette = {c.name: list(v) for c, v in PALETTE.items()}
        palette.update(CHESS_LOW=list(CHESS_LOW), CHESS_HIGH=list(CHESS_HIGH),
                       BASIN=list(BASIN_GREY), VIRTUAL=[list(v) for v in VIRTUAL_COLORS])
        return {"width": self.width, "height": self.height, "window": str(self.window),
                "log_coords": self.log_coords, "palette": palette,
                "counts": {str(int(c)): int(n) for c, n in zip(*np.unique(self.codes, return_counts=True))},
                **self.meta}

    def write_sidecar(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")

    def write_census(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["component_id", "type", "area_px", "centroid_re", "centroid_im"])
            for row in self.census:
                w.writerow([row["component_id"], row["type"], row["area_px"],
                            repr(row["centroid_re"]), repr(row["centroid_im"])])


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Fraction):
        return f"{o.numerator}/{o.denominator}"
    raise TypeError(type(o))


# ------------------------------------------------------------------ dynamical plane


def _solver(f_or_solver, **kw):
    if isinstance(f_or_solver, FatouSolver):
        return f_or_solver
    return FatouSolver(f_or_solver, **kw)


def critical_data(solver):
    """Finite critical points of f and the points disks must avoid: their images and z0.

    z0 stands in for asymptotic values (z exp z omits 0 = z0).
    """
    cps = [complex(c) for c, _ in solver.f.critical_points() if np.isfinite(c)]
    cp = np.array(cps, dtype=complex) if cps else np.zeros(0, dtype=complex)
    with np.errstate(all="ignore"):
        cv = np.asarray(solver.f(cp), dtype=complex).ravel() if cps else np.zeros(0, dtype=complex)
    cv = np.r_[cv[np.isfinite(cv)], complex(solver.germ.point)]
    return cp, cv


def _classify_grid(ps, width, height, mode, solver, nmax, eta, depth):
    """Pointwise basin data plus the immediate-basin mask of a row-major grid."""
    fd, prog = solver.fd, solver.prog
    cp, cv = critical_data(solver)
    st, ax, ph, zs, rs = RK.probe_grid(ps, mode, fd, prog, nmax, cp, cv)
    imm = RK.flood_immediate(ps, zs, st, ax, rs, width, height, mode, fd, prog, nmax, eta, depth,
                             cp, cv)
    return st, ax, ph, zs, imm


def render_basin(f, window: Window, size=(800, 600), chessboard=True, nmax=NMAX,
                 eta=ETA, depth=DEPTH, solver=None, **kw) -> Raster:
    """Basin raster: escape, per-axis basin, immediate basin (chessboard aux)."""
    solver = solver or _solver(f, **kw)
    width, height = size
    ps = window.pixel_centers(width, height).ravel()
    st, ax, ph, zs, imm = _classify_grid(ps, width, height, RK.MODE_Z, solver, nmax, eta, depth)
    codes = _basin_codes(st, ax, imm)
    aux = np.zeros(ps.shape, dtype=np.float64)
    if chessboard:
        aux = _chess_aux(solver, ph, ax, nmax)
    meta = {"kind": "basin", "map": solver.f.spec, "solver": solver.info(), "nmax": nmax,
            "eta": eta, "depth": depth, "chessboard": bool(chessboard)}
    return Raster(codes.reshape(height, width), aux.reshape(height, width), window, meta=meta)


def _basin_codes(st, ax, imm):
    codes = np.full(st.shape, Code.UNKNOWN, dtype=np.uint8)
    codes[st == K.ST_ESCAPE] = Code.ESCAPE
    ok = st == K.ST_OK
    codes[ok] = Code.BASIN + ax[ok]
    codes[imm] = Code.IMMEDIATE + ax[imm]
    return codes


def _chess_aux(solver, ph, ax, nmax):
    """Im phi minus Im phi at the critical point lying in the same axis basin."""
    aux = np.zeros(ph.shape, dtype=np.float64)
    ref = {}
    try:
        crit = solver.f.critical_points()
    except MapError:
        crit = []
    for c, _ in crit:
        if not np.isfinite(c):
            continue
        s, a, p = RK.basin_point(complex(c), solver.fd, solver.prog, nmax)
        if s == K.ST_OK and a not in ref:
            ref[a] = p.imag
    for a, v in ref.items():
        sel = ax == a
        aux[sel] = ph[sel].imag - v
    return aux


def _search_box(points, margin=1.0, n=160):
    pts = np.asarray(points, dtype=complex)
    lo = complex(pts.real.min() - margin, pts.imag.min() - margin)
    hi = complex(pts.real.max() + margin, pts.imag.max() + margin)
    side = max(hi.real - lo.real, hi.imag - lo.imag)
    return lo, side / n, n


def basin_membership(f, points, nmax=NMAX, eta=ETA, depth=DEPTH, box=None, grid=160,
                     max_visits=20_000, solver=None, **kw):
    """Per point: (status, axis, immediate verdict) with verdict in {yes, no, unknown}."""
    solver = solver or _solver(f, **kw)
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if box is None:
        corner, h, n = _search_box(np.r_[pts, solver.germ.point])
        w = hh = n
    else:
        x0, x1, y0, y1 = box.bounds
        corner = complex(x0, y0)
        h = max(box.width, box.height) / grid
        w = int(math.ceil(box.width / h))
        hh = int(math.ceil(box.height / h))
    cp, cv = critical_data(solver)
    out = []
    for z in pts:
        st, ax, _ = RK.basin_point(complex(z), solver.fd, solver.prog, nmax)
        if st != K.ST_OK:
            out.append({"point": complex(z), "status": int(st), "axis": -1, "immediate": "no"})
            continue
        v, visits = RK.immediate_search(complex(z), corner, h, w, hh, solver.fd, solver.prog,
                                        nmax, eta, depth, max_visits, cp, cv)
        out.append({"point": complex(z), "status": int(st), "axis": int(ax),
                    "immediate": {RK.IMM_YES: "yes", RK.IMM_NO: "no"}.get(v, "unknown"),
                    "visits": int(visits)})
    return out


# ------------------------------------------------------------------ repelling plane


def render_psi_preimage(solver, window: Window, size=(500, 300), nmax=NMAX, eta=ETA,
                        depth=DEPTH) -> Raster:
    """Raster over the zeta-plane: basin data of psi_rep(zeta), failures marked DOMAIN."""
    solver = _solver(solver)
    width, height = size
    ps = window.pixel_centers(width, height).ravel()
    st, ax, ph, zs, imm = _classify_grid(ps, width, height, RK.MODE_PSI, solver, nmax, eta, depth)
    imm = _carry_right(imm, st, ax, window, width, height)
    codes = _basin_codes(st, ax, imm)
    codes[st == K.ST_FAIL] = Code.DOMAIN
    aux = _chess_aux(solver, ph, ax, nmax)
    meta = {"kind": "psi", "map": solver.f.spec, "solver": solver.info(), "nmax": nmax,
            "eta": eta, "depth": depth}
    return Raster(codes.reshape(height, width), aux.reshape(height, width), window, meta=meta)


def _carry_right(imm, st, ax, window, width, height):
    """psi(zeta + 1) = g(psi(zeta)) and g maps B* into itself: copy marks one period right."""
    shift = width / window.width
    p = int(round(shift))
    if p <= 0 or p >= width or abs(shift - p) > 1e-6:
        return imm
    imm = imm.reshape(height, width).copy()
    ok = (st == K.ST_OK).reshape(height, width)
    axg = ax.reshape(height, width)
    for c in range(p, width):
        imm[:, c] |= imm[:, c - p] & ok[:, c] & (axg[:, c] == axg[:, c - p])
    return imm.ravel()


def periodicity_agreement(raster: Raster, period=1.0):
    """Fraction of comparable pixels whose code equals the code one period to the right."""
    shift = period / raster.window.width * raster.width
    s = int(round(shift))
    if abs(shift - s) > 1e-6 or s <= 0 or s >= raster.width:
        raise RenderError("window width is not a whole number of periods in pixels")
    a = raster.codes[:, :-s]
    b = raster.codes[:, s:]
    return float(np.mean(a == b))


# ------------------------------------------------------------------ virtual basins


@dataclass
class VirtualBasins:
    raster: Raster
    rf_raster: Raster
    indices: list
    overlap_px: int
    painted_px: int
    image_checked: int
    image_hits: int

    @property
    def overlap_fraction(self):
        return self.overlap_px / max(1, self.painted_px)

    @property
    def image_fraction(self):
        return self.image_hits / max(1, self.image_checked)


def rf_basin(rmap: RenormalizedMap, window: Window, size=(300, 300), nmax=400):
    """Rf-plane raster with the immediate basin of Rf (component of its trap) marked."""
    rmap.germ()
    width, height = size
    W = window.pixel_centers(width, height).ravel()
    st, ax, _ = K.rf_classify_many(W, rmap.horn.fd, rmap.horn.prog, rmap.rp, nmax)
    ok = (st == K.ST_OK).reshape(height, width)
    wmod = K.rf_model_w
    trap = np.array([z != 0 and wmod(complex(z), rmap.rp).real >= rmap.trap_radius() for z in W])
    lab, _ = ndimage.label(ok)
    keep = np.unique(lab.ravel()[trap & ok.ravel()])
    keep = keep[keep > 0]
    imm = np.isin(lab, keep)
    codes = np.full((height, width), Code.UNKNOWN, dtype=np.uint8)
    codes[(st == K.ST_ESCAPE).reshape(height, width)] = Code.ESCAPE
    codes[(st == K.ST_FAIL).reshape(height, width)] = Code.DOMAIN
    codes[ok] = Code.BASIN
    codes[imm] = Code.IMMEDIATE
    meta = {"kind": "rf-basin", "map": rmap.f.spec, "pq": str(rmap.pq), "sign": rmap.sign,
            "sigma0": rmap.sigma0, "scale": rmap.scale, "nmax": nmax}
    return Raster(codes, np.zeros((height, width)), window, meta=meta)


def lift_basin(rmap: RenormalizedMap, rf_raster: Raster):
    """A lift U0 of the marked Rf basin through E, by continuation of the argument.

    Returns the zeta samples, or raises RenderError when the continuation
    meets an inconsistent branch (the lift is not single valued on pixels).
    """
    imm = rf_raster.codes >= Code.IMMEDIATE
    H, Wd = imm.shape
    Wz = rf_raster.window.pixel_centers(Wd, H)
    if not imm.any():
        raise RenderError("the Rf basin raster has no immediate basin pixels")
    # the basin misses the repelling rays of Rf at 0; cut them so that the
    # pixel set cannot wind around 0
    k = int(rmap.rp[2])
    px = max(rf_raster.window.width / Wd, rf_raster.window.height / H)
    imm = imm.copy()
    for j in range(k):
        u = np.exp(1j * (float(rmap.rp[5]) + np.pi * (2 * j + 1) / k))
        along = (Wz * np.conj(u)).real
        across = np.abs((Wz * np.conj(u)).imag)
        imm &= ~((along > 0) & (across <= px))
    ang = np.full(imm.shape, np.nan)
    # base pixel: the marked pixel farthest from the basin boundary
    dist = ndimage.distance_transform_edt(imm)
    r0, c0 = np.unravel_index(int(np.argmax(dist)), imm.shape)
    ang[r0, c0] = np.angle(Wz[r0, c0])
    queue = [(r0, c0)]
    bad = 0
    head = 0
    while head < len(queue):
        r, c = queue[head]
        head += 1
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < H and 0 <= cc < Wd) or not imm[rr, cc]:
                continue
            step = np.angle(Wz[rr, cc] / Wz[r, c])
            val = ang[r, c] + step
            if np.isnan(ang[rr, cc]):
                ang[rr, cc] = val
                queue.append((rr, cc))
            elif abs(ang[rr, cc] - val) > 1.0:
                bad += 1
    if bad:
        raise RenderError(f"argument continuation is inconsistent at {bad} pixel edges")
    sel = ~np.isnan(ang)
    logW = np.log(np.abs(Wz[sel]) * rmap.scale) + 1j * ang[sel]
    return -rmap.sign * 1j * logW / (2 * np.pi)


def render_virtual_basins(rmap: RenormalizedMap, window: Window, size=(600, 400),
                          rf_window: Window | None = None, rf_size=(400, 400),
                          indices=range(-6, 7), base: Raster | None = None,
                          nmax=NMAX) -> VirtualBasins:
    """Paint V_n = psi_rep(U0 + n) over the basin raster of f, coloured by n."""
    solver = rmap.horn.rep
    if rf_window is None:
        rf_window = Window(0j, 6 * CRITICAL_MODULUS, 6 * CRITICAL_MODULUS)
    rfr = rf_basin(rmap, rf_window, rf_size)
    U0 = lift_basin(rmap, rfr)
    width, height = size
    if base is None:
        base = render_basin(solver.f, window, size, solver=solver, nmax=nmax)
    codes = base.codes.copy()
    aux = base.aux.copy()
    none = np.iinfo(np.int64).min
    owner = np.full((height, width), none, dtype=np.int64)
    masks = {}
    samples = {}
    used = []
    for n in indices:
        z, st = solver.repelling_param(U0 + n, strict=False)
        good = st == K.ST_OK
        r, c = window.to_pixel(z[good], width, height)
        inside = r >= 0
        samples[n] = z[good][inside]
        if not inside.any():
            continue
        used.append(int(n))
        mask = np.zeros((height, width), dtype=bool)
        mask[r[inside], c[inside]] = True
        masks[n] = mask
        owner[mask] = n
    # two sets overlap where one holds a pixel inside the other (boundary
    # pixels shared by adjacent sets do not count)
    overlap = np.zeros((height, width), dtype=bool)
    for n in used:
        core = ndimage.binary_erosion(masks[n])
        for m in used:
            if m != n:
                overlap |= core & masks[m]
    painted = owner != none
    codes[painted] = Code.VIRTUAL
    aux[painted] = owner[painted]
    # f(V_n) against the plotted V_{n+1}, up to one pixel
    checked = hits = 0
    grow = np.ones((3, 3), dtype=bool)
    for n in used:
        if n + 1 not in used:
            continue
        near = ndimage.binary_dilation(masks[n + 1], grow)
        r, c = window.to_pixel(solver.f(samples[n]), width, height)
        inside = r >= 0
        checked += int(inside.sum())
        hits += int(near[r[inside], c[inside]].sum())
    meta = dict(base.meta, kind="virtual", sigma0=rmap.sigma0, scale=rmap.scale,
                rf_window=str(rf_window), indices=used)
    raster = Raster(codes, aux, window, meta=meta)
    return VirtualBasins(raster, rfr, used, int(overlap.sum()), int(painted.sum()), checked, hits)


# ------------------------------------------------------------------ cubic parameter slices


@dataclass
class CriticalVerdict:
    point: complex
    multiplicity: int
    status: str            # converges | escapes | unknown
    axis: int | None = None
    immediate: str | None = None   # yes | no | unknown


@dataclass
class ClassificationReport:
    verdicts: list
    type_code: str          # A B C D E (or A' B' C' D' for Rf), or "unknown"
    composition: str | None = None
    critical_range: tuple | None = None
    e_suspect: bool = False
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def consistent(self):
        conv = [v for v in self.verdicts if v.status == "converges"]
        t = self.type_code.rstrip("'")
        if t == "B":
            return len({v.axis for v in conv}) >= 2 and all(v.immediate == "yes" for v in conv)
        if t == "A":
            return len({v.axis for v in conv}) == 1 and all(v.immediate == "yes" for v in conv)
        if t == "C":
            return len(conv) >= 2 and any(v.immediate == "no" for v in conv)
        if t == "D":
            return len(conv) == 1
        return True

    def as_dict(self):
        return asdict(self)


COMPOSITION_OF = {"A": "3", "B": "2 o 2", "C": "2", "D": "2"}


def _pq(pq):
    pq = Fraction(pq)
    if pq.denominator < 1:
        raise RenderError("q must be at least 1")
    return pq


def _lam(pq):
    return CubicPerOne(pq, 1.0).lam


def _immediacy(f, points, nmax, eta, depth, max_visits):
    """basin_membership over a box around the points, 0 and 1."""
    pts = np.asarray(points, dtype=complex)
    box_pts = np.r_[pts, 0.0, 1.0]
    corner, h, n = _search_box(box_pts)
    box = Window.from_bounds(corner.real, corner.real + n * h, corner.imag, corner.imag + n * h)
    solver = FatouSolver(f, use_cache=False)
    return basin_membership(f, pts, nmax=nmax, eta=eta, depth=depth, box=box, grid=n,
                            max_visits=max_visits, solver=solver)


def classify_parameter(pq, c, maxit=20_000, RT=10.0, nmax=NMAX, eta=ETA, depth=DEPTH,
                       max_visits=20_000, immediate=True) -> ClassificationReport:
    """Type of P_c in the slice Per_1(exp(2 pi i p/q)) from its two critical orbits."""
    pq = _pq(pq)
    c = complex(c)
    if c == 0:
        raise RenderError("parameter c must be nonzero")
    p, q = pq.numerator, pq.denominator
    k, s1, x1, _, s2, x2, _ = RK.cubic_classify(_lam(pq), c, p, q, RT, maxit)
    if k == 0:
        return ClassificationReport([], "unknown", notes=["degenerate germ"])
    names = {K.ST_OK: "converges", K.ST_ESCAPE: "escapes"}
    degenerate = c == 1
    pts = [(1 + 0j, 2 if degenerate else 1, s1, x1)]
    if not degenerate:
        pts.append((c, 1, s2, x2))
    verdicts = [CriticalVerdict(z, m, names.get(s, "unknown"), int(x) if s == K.ST_OK else None)
                for z, m, s, x in pts]
    rep = ClassificationReport(verdicts, "unknown", degenerate=degenerate)
    if k > q:
        # two cycles of axes: decided from the germ, not from sampling
        rep.type_code = "E"
        rep.e_suspect = True
        rep.notes.append(f"{k // q} cycles of axes at 0")
        return rep
    status = [v.status for v in verdicts]
    if "unknown" in status:
        return rep
    conv = [v for v in verdicts if v.status == "converges"]
    if len(conv) == 1 and not degenerate:
        rep.type_code = "D"
        rep.composition = COMPOSITION_OF["D"]
        return rep
    if not immediate:
        return rep
    f = CubicPerOne(pq, c)
    res = _immediacy(f, [v.point for v in conv], nmax, eta, depth, max_visits)
    for v, r in zip(conv, res):
        v.immediate = r["immediate"]
    imm = [v.immediate for v in conv]
    if degenerate:
        rep.type_code = "A" if imm == ["yes"] else "unknown"
    elif imm.count("yes") == 2:
        rep.type_code = "A" if conv[0].axis == conv[1].axis else "B"
    elif "no" in imm:
        rep.type_code = "C"
    rep.composition = COMPOSITION_OF.get(rep.type_code)
    return rep


def _slice_params(window, size, log_coords):
    grid = window.pixel_centers(*size)
    return np.exp(1j * grid) if log_coords else grid


def render_slice(pq, window: Window, size=(400, 400), log_coords=False,
                 area_threshold=AREA_THRESHOLD, maxit=20_000, RT=10.0, nmax=NMAX, eta=ETA,
                 depth=DEPTH, max_visits=20_000, verdicts=None) -> Raster:
    """Typed slice raster with its component census.

    Pixels where both critical orbits converge are split by the difference
    of their axis indices; each connected part above ``area_threshold`` (as
    a fraction of the raster) is typed from one representative parameter.
    ``verdicts`` is an optional dict (rounded c -> type) reused between calls.
    """
    pq = _pq(pq)
    p, q = pq.numerator, pq.denominator
    width, height = size
    cs = _slice_params(window, size, log_coords).ravel()
    r = RK.cubic_classify_many(_lam(pq), cs, p, q, RT, maxit)
    k = r[:, 0]
    s1, x1, s2, x2 = r[:, 1], r[:, 2], r[:, 4], r[:, 5]
    codes = np.full(cs.shape, Code.UNKNOWN, dtype=np.uint8)
    esc = (s1 == K.ST_ESCAPE) | (s2 == K.ST_ESCAPE)
    both = (s1 == K.ST_OK) & (s2 == K.ST_OK) & (k > 0)
    codes[esc & (k > 0)] = Code.D
    codes[(k > q)] = Code.E_SUSPECT
    kk = np.where(k > 0, k, 1)
    dlab = np.where(both & (k <= q), (x2 - x1) % kk, -1).reshape(height, width)
    codes = codes.reshape(height, width)
    aux = dlab.astype(np.float64)
    min_area = max(1, int(math.ceil(area_threshold * width * height)))
    census = []
    comp_id = np.zeros((height, width), dtype=np.int64)
    verdicts = {} if verdicts is None else verdicts
    cid = 0
    for d in range(max(q, 1)):
        lab, n = ndimage.label(dlab == d)
        if n == 0:
            continue
        areas = np.bincount(lab.ravel(), minlength=n + 1)
        dist = ndimage.distance_transform_edt(lab > 0)
        centers = ndimage.maximum_position(dist, lab, index=np.arange(1, n + 1))
        for j in range(1, n + 1):
            mask = lab == j
            if areas[j] < min_area:
                codes[mask] = Code.BOUNDARY
                continue
            cid += 1
            rc = centers[j - 1]
            c_rep = complex(cs[rc[0] * width + rc[1]])
            key = (round(c_rep.real, 12), round(c_rep.imag, 12))
            if key not in verdicts:
                rep = classify_parameter(pq, c_rep, maxit, RT, nmax, eta, depth, max_visits)
                verdicts[key] = rep.type_code
            t = verdicts[key]
            codes[mask] = {"A": Code.A, "B": Code.B, "C": Code.C, "E": Code.E_SUSPECT}.get(t, Code.UNKNOWN)
            comp_id[mask] = cid
            yy, xx = np.nonzero(mask)
            coords = window.pixel_centers(width, height)[yy, xx]
            census.append({"component_id": cid, "type": t, "area_px": int(areas[j]),
                           "centroid_re": float(coords.real.mean()),
                           "centroid_im": float(coords.imag.mean()), "axis_difference": d,
                           "representative": c_rep})
    pearls = [row for row in census if row["type"] in ("A", "B")]
    _pearl_neighbours(pearls, comp_id, codes)
    meta = {"kind": "slice", "pq": f"{p}/{q}", "maxit": maxit, "RT": RT,
            "area_threshold": area_threshold, "eta": eta, "depth": depth,
            "pearl_count": len(pearls), "a_count": sum(row["type"] == "A" for row in pearls)}
    return Raster(codes, aux, window, log_coords=log_coords, meta=meta, census=census)


def _pearl_neighbours(pearls, comp_id, codes, reach=None):
    """Pearls meeting within ``reach`` pixels through unknown or boundary pixels.

    Contact points are parabolic parameters where critical orbits converge too
    slowly to be typed, so the gap between touching pearls is left unknown.
    """
    if reach is None:
        reach = max(3, int(math.ceil(max(comp_id.shape) / 40)))
    ids = {row["component_id"] for row in pearls}
    struct = ndimage.generate_binary_structure(2, 1)
    passable = (codes == Code.UNKNOWN) | (codes == Code.BOUNDARY)
    for row in pearls:
        own = comp_id == row["component_id"]
        grown = ndimage.binary_dilation(own, struct, iterations=reach, mask=own | passable)
        grown = ndimage.binary_dilation(grown, struct)
        touch = set(np.unique(comp_id[grown]).tolist()) & ids
        touch.discard(row["component_id"])
        row["neighbours"] = sorted(touch)


def pearl_count(raster: Raster):
    return sum(row["type"] in ("A", "B") for row in raster.census)


# ------------------------------------------------------------------ renormalized maps


def lift_index(rmap: RenormalizedMap, zeta, max_steps=200):
    """Index of the translate of the trap lift reached by iterating sigma0 + h.

    Returns (index at the start, steps) or (None, steps) when the orbit does
    not reach the trap.  The index counts translates of the lift of the Rf
    trap and removes the shift that one lift step adds.
    """
    g = rmap.germ()
    if g.germ is None:
        return None, 0
    shift = _lift_shift(rmap)
    zeta = complex(zeta)
    for n in range(max_steps + 1):
        W = complex(rmap.E(zeta)) / rmap.scale
        if W != 0 and K.rf_model_w(W, rmap.rp).real >= rmap.trap_radius():
            m = int(round(zeta.real - _trap_base(rmap)))
            return m - n * shift, n
        h, st = rmap.horn(zeta, strict=False)
        if st[0] != K.ST_OK:
            return None, n
        zeta = rmap.sigma0 + complex(h[0])
    return None, max_steps


def _trap_base(rmap):
    """Real part of zeta on the lift of the Rf attracting direction with index 0."""
    th = float(rmap.rp[5])
    return (rmap.sign * th / (2 * np.pi)) % 1.0


def _lift_shift(rmap):
    rmap.germ()
    base = _trap_base(rmap)
    # deep point of the trap lift with index 0
    W = np.exp(1j * float(rmap.rp[5])) * min(1e-3, 0.1 / rmap.trap_radius())
    zeta = complex(rmap.E_inv(W * rmap.scale))
    zeta = complex(base + ((zeta.real - base + 0.5) % 1.0) - 0.5, zeta.imag)
    h, st = rmap.horn(zeta, strict=False)
    if st[0] != K.ST_OK:
        raise FatouError("lift of the trap is outside the horn domain")
    return int(round((rmap.sigma0 + complex(h[0])).real - base)) - int(round(zeta.real - base))


def classify_renormalized(rmap: RenormalizedMap, budget=200) -> ClassificationReport:
    """Composition-type verdict for Rf from the orbits of its critical values."""
    g = rmap.germ()
    q = rmap.pq.denominator
    cvs = rmap.critical_values()
    verdicts = []
    indices = []
    mult = 0
    for cv in cvs:
        traj, reason = rf_orbit(rmap, cv["value"], n=budget)
        status = {"petal": "converges", "escape": "escapes"}.get(reason, "unknown")
        v = CriticalVerdict(cv["value"], cv["multiplicity"], status)
        verdicts.append(v)
        if status == "converges":
            mult += cv["multiplicity"]
            idx, _ = lift_index(rmap, rmap.sigma0 + cv["phi"], budget)
            v.axis = 0
            v.immediate = "yes" if idx is not None else "unknown"
            indices.append(idx)
    rep = ClassificationReport(verdicts, "unknown")
    rep.notes.append(f"critical multiplicity in the basin: {mult}")
    if g.germ is None or g.exceptional or (g.germ is not None and g.germ.k > q):
        rep.e_suspect = True
        rep.type_code = "E"
        return rep
    if any(v.status == "unknown" for v in verdicts) or not indices:
        return rep
    found = [i for i in indices if i is not None]
    if len(indices) == 1:
        rep.type_code, rep.composition = "D'", "2"
    elif len(found) < 2:
        rep.type_code, rep.composition = "C'", "2"
    elif found[0] == found[1]:
        rep.type_code, rep.composition = "A'", "3"
    else:
        rep.type_code, rep.composition = "B'", "2 o 2"
    if not found:
        return rep
    indices = found
    rep.critical_range = (min(indices), max(indices))
    return rep


def critical_multiplicity(report: ClassificationReport):
    return sum(v.multiplicity for v in report.verdicts if v.status == "converges")


# ------------------------------------------------------------------ enriched slices


def render_enriched(pq, inner_pq, window: Window, size=(200, 120), log_coords=False,
                    block=4, budget=200, slice_kw=None) -> Raster:
    """Slice whose pearl pixels are re-typed by the composition type of R_{inner} P_c.

    One renormalization is computed per ``block`` x ``block`` tile of pearl
    pixels (tile centre), amber for 3, blue for 2 o 2, champagne for 2.
    """
    base = render_slice(pq, window, size, log_coords, **(slice_kw or {}))
    codes = base.codes.copy()
    width, height = size
    cs = _slice_params(window, size, log_coords)
    pearl = (codes == Code.A) | (codes == Code.B)
    counts = {}
    for r0 in range(0, height, block):
        for c0 in range(0, width, block):
            tile = pearl[r0:r0 + block, c0:c0 + block]
            if not tile.any():
                continue
            rr, cc = min(r0 + block // 2, height - 1), min(c0 + block // 2, width - 1)
            c = complex(cs[rr, cc])
            code = Code.UNKNOWN
            try:
                rmap = RenormalizedMap.build(CubicPerOne(pq, c), Fraction(inner_pq), use_cache=False)
                rep = classify_renormalized(rmap, budget)
                code = {"3": Code.A, "2 o 2": Code.B, "2": Code.C}.get(rep.composition, Code.UNKNOWN)
                if rep.e_suspect:
                    code = Code.E_SUSPECT
            except (FatouError, MapError, RenderError) as exc:
                log.debug("enriched pixel %s: %s", c, exc)
            sub = codes[r0:r0 + block, c0:c0 + block]
            sub[tile] = code
            counts[code.name] = counts.get(code.name, 0) + 1
    meta = dict(base.meta, kind="enriched", inner_pq=str(Fraction(inner_pq)), block=block,
                tiles=counts)
    return Raster(codes, base.aux, window, log_coords=log_coords, meta=meta, census=base.census)


# ------------------------------------------------------------------ descendant witness


def factor_critical_points(f):
    """[(factor index, critical point in the disk, multiplicity)] of a Blaschke composition."""
    factors = f.factors if isinstance(f, Composition) else [f]
    out = []
    for i, g in enumerate(factors):
        if not hasattr(g, "critical_points_in_disk"):
            raise RenderError("descendant witness needs a composition of Blaschke products")
        for x, m in g.critical_points_in_disk():
            out.append((i, complex(x), int(m)))
    return factors, out


def glean_from_indices(crit_counts, entries):
    """Gleaned sequence and witness from virtual-basin indices.

    ``entries`` holds (factor index i, virtual index mu or None, multiplicity).
    Points are ordered by t = mu + i/m; points sharing t form one entry whose
    bowl is factor i.  Points without an index are left in their bowl.
    """
    m = len(crit_counts)
    groups = {}
    for i, mu, mult in entries:
        if mu is None:
            continue
        key = Fraction(int(mu)) + Fraction(int(i), m)
        groups.setdefault(key, [i, 0])[1] += int(mult)
    keys = sorted(groups)
    target = tuple(groups[t][1] for t in keys)
    beta = tuple(groups[t][0] for t in keys)
    return target, beta


@dataclass
class DescendantWitness:
    source: tuple
    target: tuple
    beta: tuple
    valid: bool

    @property
    def composition_type(self):
        from .comptype import CompositionType
        return CompositionType.from_crit(self.target)


def descendant_witness(f, rmap: RenormalizedMap | None = None, indexer=None, budget=200):
    """Best-effort gleaned sequence of a Blaschke composition from virtual-basin indices.

    ``indexer(i, x)`` returns the virtual index of the critical point x of
    factor i (or None); by default it is computed through ``rmap`` by pulling
    the corresponding critical point of f back into the repelling petal.
    """
    factors, crit = factor_critical_points(f)
    # degree-one factors carry no critical points and no bowl
    bowls = [i for i, g in enumerate(factors) if g.degree > 1]
    counts = tuple(factors[i].degree - 1 for i in bowls)
    bowl_of = {i: j for j, i in enumerate(bowls)}
    if not counts:
        raise RenderError("composition has no critical points in the disk")
    if indexer is None:
        if sum(m for _, _, m in crit) <= 1:
            def indexer(i, x):
                return 0
        else:
            if rmap is None:
                raise RenderError("an Rf evaluator or an indexer is needed")
            indexer = _numeric_indexer(f, factors, rmap, budget)
    entries = [(bowl_of[i], indexer(i, x), m) for i, x, m in crit]
    target, beta = glean_from_indices(counts, entries)
    if not target:
        raise RenderError("no critical point received a virtual index")
    wit = is_gleaning(counts, target)
    ok = wit is not None and all(
        sum(t for t, b in zip(target, beta) if b == j) <= counts[j] for j in range(len(counts)))
    if not ok:
        log.warning("gleaned sequence %s fails against %s", target, counts)
    return DescendantWitness(counts, target, beta, ok)


def _numeric_indexer(f, factors, rmap, budget, depth=60):
    solver = rmap.horn.rep
    z0 = solver.germ.point

    def pullback(y):
        # backward orbit along the repelling direction
        for _ in range(depth):
            pre = np.asarray(f.preimages(y), dtype=complex)
            pre = pre[np.abs(pre) < 1]
            if pre.size == 0:
                return None
            w = solver.model(pre)
            y = complex(pre[int(np.argmin(w.real))])
        return y

    def indexer(i, x):
        pts = [x]
        for h in reversed(factors[:i]):
            pts = [p for y in pts for p in h.preimages(y)]
        pts = [p for p in pts if abs(p) < 1]
        found = set()
        for y in pts:
            yb = pullback(y)
            if yb is None or abs(yb - z0) > 0.5:
                continue
            zeta = complex(solver.repelling_coord(yb)) + depth
            W = complex(rmap.E(zeta)) / rmap.scale
            _, reason = rf_orbit(rmap, W, n=budget)
            if reason != "petal":
                continue
            idx, _ = lift_index(rmap, zeta, budget)
            if idx is not None:
                found.add(idx)
        return min(found) if found else None

    return indexer
