"""Holomorphic maps with a parabolic fixed point.

Every map evaluates on numpy arrays, knows its critical points, returns exact
Taylor coefficients at any point and can be lowered to a flat "program" of
stages that the compiled kernels in :mod:`parabren.kernels` understand.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import series

KIND_POLY, KIND_ZEXPZ, KIND_BLASCHKE = 0, 1, 2

COEFF_TOL = 1e-12


class MapError(ValueError):
    pass


class DegenerateGerm(MapError):
    """The iterate agrees with the identity to every computed order."""


class FirstTypeError(MapError):
    """The Blaschke product has a fixed point inside the disk."""


class NoParabolicPoint(MapError):
    pass


class DriftNotConverged(RuntimeError):
    pass


def _c(z):
    return complex(z)


def _cluster_roots(roots, tol=1e-6):
    """Group nearly equal roots into (mean, multiplicity) pairs."""
    out = []
    for r in sorted(roots, key=lambda r: (round(r.real, 6), round(r.imag, 6))):
        for i, (p, m) in enumerate(out):
            if abs(p - r) < tol * max(1.0, abs(r)):
                out[i] = ((p * m + r) / (m + 1), m + 1)
                break
        else:
            out.append((complex(r), 1))
    return out


class HoloMap:
    """Base class.  Subclasses set ``spec`` and implement the hooks."""

    spec: str = ""
    fixed_point: complex = 0j
    real: bool = False

    def __call__(self, z):
        return self.eval_d(z)[0]

    def deriv(self, z):
        return self.eval_d(z)[1]

    def eval_d(self, z):
        raise NotImplementedError

    def stages(self):
        raise NotImplementedError

    def taylor(self, z0, N):
        raise NotImplementedError

    def critical_points(self):
        raise NotImplementedError

    def preimages(self, w):
        raise MapError(f"preimages not available for {self.spec}")

    @property
    def multiplier(self):
        return complex(self.deriv(np.array([self.fixed_point]))[0])

    def rotation(self, smax=64):
        """Rational rotation number r/s of the multiplier at the fixed point."""
        lam = self.multiplier
        if abs(abs(lam) - 1) > 1e-9:
            raise MapError(f"multiplier {lam} is not of modulus one")
        x = Fraction(math.atan2(lam.imag, lam.real) / (2 * math.pi) % 1).limit_denominator(smax)
        if abs(np.exp(2j * np.pi * float(x)) - lam) > 1e-9:
            raise MapError(f"multiplier {lam} is not a root of unity of order <= {smax}")
        return x

    def program(self):
        """Flat arrays (kinds, offsets, lengths, params) for compiled kernels."""
        kinds, offs, ns, params = [], [], [], []
        for kind, p in self.stages():
            kinds.append(kind)
            offs.append(len(params))
            ns.append(len(p))
            params.extend(complex(x) for x in p)
        return (np.array(kinds, dtype=np.int64), np.array(offs, dtype=np.int64),
                np.array(ns, dtype=np.int64), np.array(params or [0j], dtype=np.complex128))

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class Polynomial(HoloMap):
    def __init__(self, coeffs, spec=None):
        """``coeffs`` in increasing degree order."""
        c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
        if len(c) < 2:
            raise MapError("polynomial must be nonconstant")
        self.coeffs = c
        self.real = bool(np.all(c.imag == 0))
        self.spec = spec or "poly coeffs=[" + ",".join(_fmt(x) for x in c) + "]"

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def eval_d(self, z):
        z = np.asarray(z, dtype=complex)
        f = np.zeros_like(z)
        d = np.zeros_like(z)
        for a in self.coeffs[::-1]:
            d = d * z + f
            f = f * z + a
        return f, d

    def stages(self):
        # Horner order: highest degree first
        return [(KIND_POLY, list(self.coeffs[::-1]))]

    def taylor(self, z0, N):
        return series.shift_poly(self.coeffs, z0, N)

    def critical_points(self):
        dc = self.coeffs[1:] * np.arange(1, len(self.coeffs))
        return _cluster_roots(np.roots(dc[::-1]))

    def preimages(self, w):
        c = self.coeffs.copy()
        c[0] -= w
        return list(np.roots(c[::-1]))


class CubicPerOne(Polynomial):
    """P_c(z) = lam z (1 - (1+c)/(2c) z + z^2/(3c)) with lam = exp(2 pi i p/q)."""

    def __init__(self, pq, c):
        pq = Fraction(pq)
        c = _c(c)
        if c == 0:
            raise MapError("parameter c must be nonzero")
        self.pq = pq
        self.c = c
        lam = np.exp(2j * np.pi * float(pq))
        if pq.denominator <= 2:
            lam = complex(round(lam.real), 0)
        self.lam = lam
        super().__init__([0, lam, -lam * (1 + c) / (2 * c), lam / (3 * c)],
                         spec=f"cubic λ={pq.numerator}/{pq.denominator} c={_fmt_pair(c)}")
        self.real = self.real and pq.denominator <= 2

    def critical_points(self):
        if self.c == 1:
            return [(1 + 0j, 2)]
        return [(1 + 0j, 1), (self.c, 1)]

    def rotation(self, smax=64):
        return self.pq


class ZExpZ(HoloMap):
    spec = "zexpz"
    real = True

    def eval_d(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(z)
            return z * e, (1 + z) * e

    def stages(self):
        return [(KIND_ZEXPZ, [])]

    def taylor(self, z0, N):
        e = series.exp(series.pad([0, 1], N), N) * np.exp(z0)
        return series.mul([z0, 1], e, N)

    def critical_points(self):
        return [(-1 + 0j, 1)]


class BlaschkeProduct(HoloMap):
    """rot * prod (z - a) / (1 - conj(a) z) over the zeros a."""

    def __init__(self, zeros, rot=1.0):
        self.zeros = np.array([_c(a) for a in zeros], dtype=complex)
        rot = _c(rot)
        if len(self.zeros) == 0:
            raise MapError("Blaschke product needs at least one zero")
        if np.any(np.abs(self.zeros) >= 1):
            raise MapError("Blaschke zeros must lie in the open unit disk")
        if abs(abs(rot) - 1) > 1e-12:
            raise MapError("rotation must have modulus one")
        self.rot = rot
        self.spec = ("blaschke zeros=[" + ",".join(_fmt(a) for a in self.zeros)
                     + f"] rot={_fmt_pair(rot)}")
        self.fixed_point = self._default_fixed_point()
        # real when the zero set is conjugation invariant and rot = +-1
        self.real = (abs(rot.imag) < 1e-15 and np.allclose(
            np.sort_complex(self.zeros), np.sort_complex(self.zeros.conj())))

    @property
    def degree(self):
        return len(self.zeros)

    def _default_fixed_point(self):
        return 1 + 0j

    def eval_d(self, z):
        z = np.asarray(z, dtype=complex)
        f = np.full_like(z, self.rot)
        d = np.zeros_like(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            for a in self.zeros:
                den = 1 - np.conj(a) * z
                m = (z - a) / den
                dm = (1 - abs(a) ** 2) / den ** 2
                d = d * m + f * dm
                f = f * m
        return f, d

    def stages(self):
        return [(KIND_BLASCHKE, [self.rot] + list(self.zeros))]

    def numerator_denominator(self):
        num = np.array([self.rot], dtype=complex)
        den = np.array([1], dtype=complex)
        for a in self.zeros:
            num = np.convolve(num, [-a, 1])
            den = np.convolve(den, [1, -np.conj(a)])
        return num, den  # increasing degree

    def taylor(self, z0, N):
        out = series.pad([self.rot], N)
        for a in self.zeros:
            fac = series.mul([z0 - a, 1], series.recip([1 - np.conj(a) * z0, -np.conj(a)], N), N)
            out = series.mul(out, fac, N)
        return out

    def critical_points(self):
        num, den = self.numerator_denominator()
        dn = np.polynomial.polynomial.polyder(num)
        dd = np.polynomial.polynomial.polyder(den)
        w = np.polynomial.polynomial.polysub(np.polynomial.polynomial.polymul(dn, den),
                                             np.polynomial.polynomial.polymul(num, dd))
        w = np.trim_zeros(w, "b")
        w[np.abs(w) < 1e-14 * np.max(np.abs(w))] = 0
        w = np.trim_zeros(w, "b")
        return _cluster_roots(np.roots(w[::-1])) if len(w) > 1 else []

    def critical_points_in_disk(self):
        return [(p, m) for p, m in self.critical_points() if abs(p) < 1]

    def preimages(self, w):
        num, den = self.numerator_denominator()
        return list(np.roots(np.polynomial.polynomial.polysub(num, w * den)[::-1]))

    def fixed_points(self):
        num, den = self.numerator_denominator()
        return list(np.roots(np.polynomial.polynomial.polysub(num, np.convolve(den, [0, 1]))[::-1]))


class Composition(HoloMap):
    """factors[0] is applied first."""

    def __init__(self, factors):
        if not factors:
            raise MapError("empty composition")
        self.factors = list(factors)
        self.spec = "compose " + ";".join(f.spec for f in self.factors)
        self.real = all(f.real for f in self.factors)
        self.fixed_point = self.factors[0].fixed_point

    def eval_d(self, z):
        f = np.asarray(z, dtype=complex)
        d = np.ones_like(f)
        for g in self.factors:
            f, dg = g.eval_d(f)
            d = d * dg
        return f, d

    def stages(self):
        return [st for g in self.factors for st in g.stages()]

    def taylor(self, z0, N):
        s = self.factors[0].taylor(z0, N)
        for g in self.factors[1:]:
            w0 = s[0]
            inner = s.copy()
            inner[0] = 0
            s = series.compose(g.taylor(w0, N), inner, N)
        return s

    def critical_points(self):
        pts = []
        for i, g in enumerate(self.factors):
            for p, m in g.critical_points():
                cur = [p]
                for h in reversed(self.factors[:i]):
                    cur = [x for y in cur for x in h.preimages(y)]
                pts.extend((x, m) for x in cur)
        return _cluster_roots([p for p, m in pts for _ in range(m)])

    def preimages(self, w):
        cur = [w]
        for h in reversed(self.factors):
            cur = [x for y in cur for x in h.preimages(y)]
        return cur

    @property
    def is_blaschke(self):
        return all(isinstance(g, BlaschkeProduct) for g in self.factors)

    def composition_degrees(self):
        return tuple(g.degree for g in self.factors)

    def fixed_points(self):
        if not self.is_blaschke:
            raise MapError("fixed points only for Blaschke compositions")
        num, den = _rational_compose(self.factors)
        return list(np.roots(np.polynomial.polynomial.polysub(num, np.convolve(den, [0, 1]))[::-1]))


def _rational_compose(factors):
    """(num, den) of a composition of Blaschke products, increasing degree."""
    P = np.polynomial.polynomial
    num, den = np.array([0, 1], dtype=complex), np.array([1], dtype=complex)
    for g in factors:
        gn, gd = g.numerator_denominator()
        d = max(len(gn), len(gd)) - 1
        # g(num/den) = sum gn_i num^i den^(d-i) / sum gd_i num^i den^(d-i)
        new_n = np.zeros(1, dtype=complex)
        new_d = np.zeros(1, dtype=complex)
        for i in range(d + 1):
            term = P.polymul(P.polypow(num, i), P.polypow(den, d - i))
            if i < len(gn):
                new_n = P.polyadd(new_n, gn[i] * term)
            if i < len(gd):
                new_d = P.polyadd(new_d, gd[i] * term)
        num, den = new_n, new_d
    return num, den


def cauliflower():
    return Polynomial([0, 1, 1], spec="cauliflower")


def model_blaschke():
    """G(z) = (3z^2 + 1)/(z^2 + 3), parabolic at 1 with two attracting axes."""
    r = 1 / math.sqrt(3)
    g = BlaschkeProduct([1j * r, -1j * r], 1.0)
    return g


# ---------------------------------------------------------------- spec parsing

def _fmt(z):
    z = complex(z)
    return repr(z.real) if z.imag == 0 else repr(z).strip("()")


def _fmt_pair(z):
    z = complex(z)
    return f"{z.real!r},{z.imag!r}"


def _parse_complex(text):
    text = text.strip()
    if "," in text:
        re_, im = text.split(",")
        return complex(float(re_), float(im))
    return complex(text.replace("i", "j").replace(" ", ""))


def _parse_list(text):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise MapError(f"expected a bracketed list: {text!r}")
    body = text[1:-1].strip()
    if not body:
        return []
    try:
        vals = ast.literal_eval("[" + body.replace("i", "j") + "]")
        return [complex(v) for v in vals]
    except (ValueError, SyntaxError) as exc:
        raise MapError(f"bad list {text!r}") from exc


def parse_map(text: str) -> HoloMap:
    """Parse the map grammar used on the command line and in config files.

    ``cubic λ=p/q c=re,im`` | ``zexpz`` | ``cauliflower`` | ``gmodel`` |
    ``poly coeffs=[...]`` | ``blaschke zeros=[...] rot=re,im`` |
    ``compose m1;m2;...`` (m1 applied first).
    """
    text = text.strip()
    if text.startswith("compose"):
        parts = [p for p in text[len("compose"):].split(";") if p.strip()]
        return Composition([parse_map(p) for p in parts])
    head, _, rest = text.partition(" ")
    kw = dict(m.groups() for m in re.finditer(r"(\w+|λ)=(\[[^\]]*\]|\S+)", rest))
    if head == "zexpz":
        return ZExpZ()
    if head == "cauliflower":
        return cauliflower()
    if head == "gmodel":
        return model_blaschke()
    if head == "cubic":
        lam = kw.get("λ", kw.get("lambda", kw.get("lam")))
        if lam is None or "c" not in kw:
            raise MapError(f"cubic needs λ and c: {text!r}")
        c = _parse_complex(kw["c"])
        if c == 0:
            raise MapError("parameter c must be nonzero")
        return CubicPerOne(Fraction(lam), c)
    if head == "poly":
        return Polynomial(_parse_list(kw["coeffs"]))
    if head == "blaschke":
        zeros = _parse_list(kw.get("zeros", "[]"))
        rot = _parse_complex(kw.get("rot", "1,0"))
        return BlaschkeProduct(zeros, rot)
    raise MapError(f"unknown map: {text!r}")


# ---------------------------------------------------------------- parabolic germ

@dataclass
class ParabolicGerm:
    """Local data of f^s at a parabolic point: f^s(z0+t) = z0 + t(1 + a t^k + ...)."""

    point: complex
    k: int
    a: complex
    b: complex
    rotation: Fraction
    coeffs: np.ndarray = field(repr=False)

    @property
    def axis_count(self):
        return self.k

    @property
    def period(self):
        return self.rotation.denominator

    def repelling_angle(self, index=0):
        """Argument of repelling axis ``index``; axis 0 has a t^k > 0 and the smallest nonnegative argument."""
        base = (-np.angle(self.a) / self.k) % (2 * np.pi / self.k)
        return base + 2 * np.pi * index / self.k

    def attracting_angle(self, index=0):
        return self.repelling_angle(0) + (2 * index + 1) * np.pi / self.k

    def axis_of(self, t):
        """Index of the attracting axis whose direction is closest to ``t``."""
        ang = (np.angle(t) - self.attracting_angle(0)) % (2 * np.pi)
        return np.round(ang * self.k / (2 * np.pi)).astype(int) % self.k

    def model(self, t):
        return -1 / (self.k * self.a * t ** self.k)


def iterate_taylor(f: HoloMap, z0, s, N):
    """Taylor series of f^s at a fixed point z0."""
    one = f.taylor(z0, N)
    if abs(one[0] - z0) > 1e-9 * max(1, abs(z0)):
        raise MapError(f"{z0} is not fixed by {f.spec}")
    inner = one.copy()
    inner[0] = 0
    out = one
    for _ in range(s - 1):
        rest = out.copy()
        rest[0] = 0
        out = series.compose(one, rest, N)
        out[0] = z0
    return out


def germ_from_series(g, z0, rotation, tol=COEFF_TOL):
    """Germ data from the Taylor series ``g`` of f^s at z0 (``g[0] = z0``)."""
    from .fatou import formal_fatou_series

    g = np.asarray(g, dtype=complex).copy()
    g[0] = 0
    if abs(g[1] - 1) > 1e-8:
        raise MapError(f"iterate has multiplier {g[1]}, expected 1")
    g[1] = 1
    tol = np.broadcast_to(np.asarray(tol, dtype=float), g.shape)
    nz = np.nonzero(np.abs(g[2:]) > tol[2:])[0]
    if len(nz) == 0:
        raise DegenerateGerm(f"identity to order {len(g) - 1}")
    k = int(nz[0]) + 1
    a = g[k + 1]
    if len(g) < 2 * k + 2:
        raise MapError("series too short for the drift coefficient")
    _, beta, _ = formal_fatou_series(g, k, 0)
    return ParabolicGerm(complex(z0), k, complex(a), complex(beta / k), Fraction(rotation), g)


def parabolic_germ(f: HoloMap, order: int = 24, point=None) -> ParabolicGerm:
    """Axis count, leading coefficient and drift of f^s at its parabolic point."""
    z0 = f.fixed_point if point is None else complex(point)
    if point is not None:
        lam = complex(f.deriv(np.array([z0]))[0])
        x = Fraction(math.atan2(lam.imag, lam.real) / (2 * math.pi) % 1).limit_denominator(64)
    else:
        x = f.rotation()
    s = x.denominator
    N = max(order, 4)
    while True:
        g = iterate_taylor(f, z0, s, N)
        gg = g.copy()
        gg[0] = 0
        nz = np.nonzero(np.abs(gg[2:]) > COEFF_TOL)[0]
        if len(nz) == 0:
            if N >= 4 * order:
                raise DegenerateGerm(f"{f.spec}: f^{s} is the identity to order {N - 1}")
            N *= 2
            continue
        k = int(nz[0]) + 1
        if N < 2 * k + 2:
            N = 2 * k + 2
            continue
        return germ_from_series(g, z0, x)


# ---------------------------------------------------------------- Blaschke boundary

def _interior_fixed_points(G):
    # multiple boundary roots split by about eps**(1/k); keep them on the circle
    pts = G.fixed_points()
    return [p for p in pts if abs(p) < 1 - 1e-3]


def blaschke_boundary_parabolic(G, samples=2**14):
    """Locate the boundary fixed point with unit multiplier of a second-type map.

    Returns ``(point, germ)``.  Raises :class:`FirstTypeError` if G has a fixed
    point in the disk and :class:`NoParabolicPoint` if none is found.
    """
    inner = _interior_fixed_points(G)
    if inner:
        raise FirstTypeError(f"{G.spec} fixes {inner[0]:.6g} inside the disk")
    theta = 2 * np.pi * np.arange(samples) / samples
    z = np.exp(1j * theta)
    r = np.angle(G(z) / z)

    def resid(th):
        w = np.exp(1j * th)
        return float(np.angle(complex(G(np.array([w]))[0]) / w))

    cands = []
    nxt = np.roll(r, -1)
    for i in np.nonzero((np.sign(r) != np.sign(nxt)) & (np.abs(r - nxt) < np.pi))[0]:
        lo, hi = theta[i], theta[i] + 2 * np.pi / samples
        rlo = resid(lo)
        if rlo == 0:
            cands.append(lo)
            continue
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            rm = resid(mid)
            if rm == 0:
                lo = hi = mid
                break
            if np.sign(rm) == np.sign(rlo):
                lo, rlo = mid, rm
            else:
                hi = mid
        cands.append(0.5 * (lo + hi))
    # tangential contacts without a sign change
    ar = np.abs(r)
    for i in np.nonzero((ar < np.roll(ar, 1)) & (ar <= np.roll(ar, -1)) & (ar < 1e-4))[0]:
        from scipy.optimize import minimize_scalar
        h = 2 * np.pi / samples
        res = minimize_scalar(lambda t: abs(resid(t)), bounds=(theta[i] - h, theta[i] + h),
                              method="bounded", options={"xatol": 1e-14})
        cands.append(res.x)
    best = None
    for th in cands:
        w = np.exp(1j * th)
        d = complex(G.deriv(np.array([w]))[0])
        if abs(d - 1) < 1e-6 and (best is None or abs(d - 1) < best[1]):
            best = (w, abs(d - 1))
    if best is None:
        raise NoParabolicPoint(f"{G.spec}: no boundary fixed point with multiplier 1")
    w = best[0]
    # a multiple root is only found to about eps**(1/(k+1)); its cluster centroid is sharp
    cluster = [p for p in G.fixed_points() if abs(p - w) < 1e-3]
    if cluster:
        c = complex(np.mean(cluster))
        w = c / abs(c)
    if abs(w - 1) < 1e-9:
        w = 1 + 0j
    germ = _boundary_germ(G, w)
    return w, germ


def _boundary_germ(G, w, order=24):
    g = G.taylor(w, order)
    g[1] = 1.0 if abs(g[1] - 1) < 1e-6 else g[1]
    g[0] = w
    return germ_from_series(g, w, Fraction(0))


# ---------------------------------------------------------------- Denjoy-Wolff drift

@dataclass
class DriftFit:
    b: complex
    tau: complex
    residual: float
    step_limit: float
    orbit: np.ndarray = field(repr=False)


def to_halfplane(z, point=1 + 0j):
    """Disk to upper half-plane sending ``point`` to infinity."""
    return 1j * (point + z) / (point - z)


def from_halfplane(u, point=1 + 0j):
    return point * (u - 1j) / (u + 1j)


def hyperbolic_step(u, v):
    """Hyperbolic distance in the upper half-plane."""
    return np.arccosh(1 + np.abs(u - v) ** 2 / (2 * u.imag * v.imag))


def denjoy_wolff_drift(G, u0, n=4000, window=(200, None), tol=1e-3, point=None):
    """Fit the half-plane orbit to ``n + b log n + tau``.

    ``G`` is a Blaschke map (conjugated to the upper half-plane at its boundary
    parabolic point) or a callable acting directly on the upper half-plane.
    """
    if isinstance(G, HoloMap):
        if point is None:
            point, _ = blaschke_boundary_parabolic(G)

        def H(u):
            return to_halfplane(G(from_halfplane(u, point)), point)
    else:
        H = G
    u = np.empty(n + 1, dtype=complex)
    u[0] = u0
    for i in range(n):
        u[i + 1] = complex(H(np.array([u[i]]))[0])
        if not np.isfinite(u[i + 1]):
            raise DriftNotConverged("orbit left the half-plane")
    lo, hi = window[0], window[1] or n
    idx = np.arange(lo, hi + 1)
    nn = idx.astype(float)
    A = np.stack([np.log(nn), np.ones_like(nn), 1 / nn, np.log(nn) / nn], axis=1)
    sol, *_ = np.linalg.lstsq(A.astype(complex), u[idx] - nn, rcond=None)
    fit = A @ sol
    resid = float(np.max(np.abs(fit - (u[idx] - nn))))
    steps = hyperbolic_step(u[1:], u[:-1])
    out = DriftFit(complex(sol[0]), complex(sol[1]), resid, float(steps[-1]), u)
    if not np.isfinite(resid) or resid > tol * max(1.0, abs(sol[1])):
        raise DriftNotConverged(f"orbit does not follow n + b log n + tau (residual {resid:.3g})")
    return out
