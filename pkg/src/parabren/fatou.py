"""Fatou coordinates, horn maps and the renormalized map.

The formal Fatou coordinate of ``g(t) = t + a t^(k+1) + ...`` is

    Phi(t) = sum_{m=1..k} alpha_{-m} t^-m + beta log t + sum_{j=1..M} alpha_j t^j

with coefficients fixed by ``Phi(g(t)) = Phi(t) + 1``.  The same series serves
the attracting and the repelling petals; only the branch of the logarithm and
the additive constant differ.  Points are carried into a petal by iterating
the map, so the extended coordinates are ``phi(z) = Phi(g^n z) - n`` and
``psi(zeta) = g^n(Phi^-1(zeta - n))``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels as K
from . import series
from .dynmaps import (BlaschkeProduct, Composition, HoloMap, MapError, ParabolicGerm,
                      blaschke_boundary_parabolic, germ_from_series, parabolic_germ)

log = logging.getLogger(__name__)

CACHE_VERSION = 1
R_CANDIDATES = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
M_CANDIDATES = (6, 10, 14, 20)
PETAL_TOL = 1e-12


class FatouError(RuntimeError):
    """Evaluation failed: not in the basin, escaped or did not converge."""


class NoConvergence(FatouError):
    pass


# ------------------------------------------------------------------ formal series

def formal_fatou_series(g, k, M):
    """Coefficients (alpha_neg, beta, alpha_pos) of the formal Fatou coordinate.

    ``g`` holds the Taylor coefficients of g(t) with g[0] = 0, g[1] = 1 and
    g[k+1] = a != 0; it must have at least ``2k + M + 2`` entries.  Matching
    the orders 0..k+M of ``Phi(g) - Phi = 1`` gives a lower triangular system:
    order n < k fixes alpha_{-(k-n)}, order k fixes beta, order k+j fixes alpha_j.
    """
    g = np.asarray(g, dtype=complex)
    L = k + M + 1
    N = 2 * k + M + 1
    if len(g) < N + 1:
        raise ValueError(f"need {N + 1} coefficients, got {len(g)}")
    u = series.pad(g[1: N + 1], N)
    u[0] = 0  # g(t)/t - 1
    one_u = u.copy()
    one_u[0] = 1
    A = np.zeros((L, L), dtype=complex)
    for m in range(1, k + 1):
        Um = series.power(one_u, -m, N)
        Um[0] -= 1
        col = k - m
        A[:, col] = Um[m: m + L]
    A[:, k] = series.log1p(u, N)[:L]
    for j in range(1, M + 1):
        Vj = series.power(one_u, j, N)
        Vj[0] -= 1
        A[j:, k + j] = Vj[: L - j]
    rhs = np.zeros(L, dtype=complex)
    rhs[0] = 1
    x = solve_triangular(A, rhs, lower=True)
    aneg = x[:k][::-1]  # index m-1 holds alpha_{-m}
    return aneg, x[k], x[k + 1:]


def formal_eval(t, aneg, beta, apos, theta):
    """Evaluate the formal coordinate at ``t`` with the log branch near ``theta``."""
    t = np.asarray(t, dtype=complex)
    ang = theta + (np.angle(t) - theta + np.pi) % (2 * np.pi) - np.pi
    out = beta * (np.log(np.abs(t)) + 1j * ang)
    for m, c in enumerate(aneg, start=1):
        out = out + c * t ** (-m)
    for j, c in enumerate(apos, start=1):
        out = out + c * t ** j
    return out


# ------------------------------------------------------------------ cache

def cache_dir():
    d = os.environ.get("PARABREN_CACHE")
    return Path(d) if d else None


def cache_key(*parts):
    text = "|".join(str(p) for p in parts) + f"|v{CACHE_VERSION}"
    return hashlib.sha256(text.encode()).hexdigest()[:32]


def _digest(payload):
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def cache_load(key):
    d = cache_dir()
    if d is None:
        return None
    p = d / f"{key}.json"
    if not p.exists():
        return None
    try:
        doc = json.loads(p.read_text())
        if doc.get("digest") != _digest(doc["payload"]) or doc.get("key") != key:
            log.warning("cache entry %s is corrupted; refitting", p.name)
            return None
    except (OSError, ValueError, KeyError):
        log.warning("cache entry %s is unreadable; refitting", p.name)
        return None
    log.info("cache hit %s", key)
    return doc["payload"]


def cache_store(key, payload, label=""):
    d = cache_dir()
    if d is None:
        return
    d.mkdir(parents=True, exist_ok=True)
    doc = {"key": key, "label": label, "payload": payload, "digest": _digest(payload)}
    tmp = d / f".{key}.{os.getpid()}.tmp"
    tmp.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    os.replace(tmp, d / f"{key}.json")


def _cx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _uncx(p):
    return complex(p[0], p[1])


# ------------------------------------------------------------------ solver

def _escape_radius(f):
    if isinstance(f, (BlaschkeProduct, Composition)) and getattr(f, "is_blaschke", True):
        return 1e12
    return 1e10


def _boundary_point(f):
    return isinstance(f, BlaschkeProduct) or (isinstance(f, Composition) and f.is_blaschke)


class FatouSolver:
    """Extended attracting coordinate and repelling parametrisation of one map.

    ``axis`` selects the attracting axis; the repelling side always uses
    repelling axis 0.  Normalisation: the attracting coordinate vanishes at
    the first critical value in the basin of ``axis``; the repelling one uses
    the logarithm branch measured from repelling axis 0 (so it is real on the
    real line when that axis is the positive real direction) and is real on
    the unit circle for Blaschke products.
    """

    def __init__(self, f: HoloMap, axis=0, germ: ParabolicGerm | None = None,
                 nmax=100_000, eps=1e-9, R=None, M=None, use_cache=True):
        self.f = f
        self.nmax = int(nmax)
        self.eps = eps
        if germ is None:
            if _boundary_point(f):
                _, germ = blaschke_boundary_parabolic(f)
            else:
                germ = parabolic_germ(f)
        self.germ = germ
        self.k = germ.k
        self.s = germ.rotation.denominator
        self.axis = int(axis) % self.k
        self.prog = f.program()
        self.esc = _escape_radius(f)
        self.th_rep = float(germ.repelling_angle(0))
        self.th_att = float(germ.attracting_angle(0))
        if _boundary_point(f):
            self._orient_boundary()
        key = cache_key("solver", f.spec, self.axis, self.th_rep, R, M)
        payload = cache_load(key) if use_cache else None
        self.cache_hit = payload is not None
        if payload is not None:
            self.R, self.M = payload["R"], payload["M"]
            self._build_series()
            self.c_rep = _uncx(payload["c_rep"])
            self.c_att = _uncx(payload["c_att"])
            self.anchor = _uncx(payload["anchor"]) if payload["anchor"] else None
        else:
            self._fit(R, M)
            if use_cache:
                cache_store(key, {"R": self.R, "M": self.M, "c_rep": _cx(self.c_rep),
                                  "c_att": _cx(self.c_att),
                                  "anchor": _cx(self.anchor) if self.anchor is not None else None,
                                  "k": self.k, "a": _cx(germ.a), "b": _cx(germ.b),
                                  "eps": self.eps},
                            label=f"solver {f.spec} axis={self.axis}")

    # -- fitting

    def _orient_boundary(self):
        """Pick the repelling axis whose neighbouring attracting axis points into the disk."""
        z0 = self.germ.point
        for j in range(self.k):
            th = self.germ.repelling_angle(j)
            att = th + np.pi / self.k
            if math.cos(att - np.angle(z0)) < -0.5:
                self.th_rep = float(th)
                self.th_att = float(att)
                return
        raise MapError("no attracting axis points into the disk")

    def _series_for(self, M):
        N = 2 * self.k + M + 2
        g = self.germ.coeffs
        if len(g) < N:
            from .dynmaps import iterate_taylor
            g = iterate_taylor(self.f, self.germ.point, self.s, N)
            g = g.copy()
            g[0] = 0
            g[1] = 1
        return formal_fatou_series(g, self.k, M)

    def _build_series(self):
        self.aneg, self.beta, self.apos = self._series_for(self.M)
        self.c_rep = 0j
        self.c_att = 0j
        self.fd = self._pack()

    def _pack(self):
        return K.pack_fatou(self.germ.point, self.germ.a, self.k, self.s, self.aneg,
                            self.beta, self.apos, self.th_rep, self.th_att, self.c_rep,
                            self.c_att, self.R, self.R, self.axis, self.esc)

    def _petal_residual(self, R, M):
        aneg, beta, apos = self._series_for(M)
        k, a, z0 = self.k, self.germ.a, self.germ.point
        y = np.linspace(-R, R, 17)
        res = 0.0
        for sgn, theta in ((1, self.att_angle(self.axis)), (-1, self.th_rep)):
            w = sgn * R + 1j * y
            r = -1 / (k * a * w)
            base = np.abs(r) ** (1 / k) * np.exp(1j * np.angle(r) / k)
            j = np.round((theta - np.angle(r) / k) * k / (2 * np.pi))
            t = base * np.exp(2j * np.pi * j / k)
            gt = K.apply_many(z0 + t, self.prog, self.s) - z0
            d = formal_eval(gt, aneg, beta, apos, theta) - formal_eval(t, aneg, beta, apos, theta) - 1
            res = max(res, float(np.max(np.abs(d))))
        return res

    def _fit(self, R, M):
        best = None
        Rs = (R,) if R else R_CANDIDATES
        Ms = (M,) if M else M_CANDIDATES
        for RR in Rs:
            for MM in Ms:
                r = self._petal_residual(RR, MM)
                if best is None or r < best[0]:
                    best = (r, RR, MM)
                if r <= PETAL_TOL:
                    break
            if best[0] <= PETAL_TOL:
                break
        self.petal_residual, self.R, self.M = best
        self._build_series()
        self.c_rep = self._repelling_constant()
        self.fd = self._pack()
        self.anchor = self._anchor_point()
        if self.anchor is not None:
            raw, st, _ = K.phi_att(complex(self.anchor), self.fd, self.prog, self.nmax, 0)
            if st != K.ST_OK:
                raise NoConvergence(f"anchor {self.anchor} not in the basin")
            self.c_att = -raw
        self.fd = self._pack()

    def _repelling_constant(self):
        f, z0 = self.f, self.germ.point
        if _boundary_point(f):
            # symmetric normalisation: Im phi_rep = 0 on the unit circle
            R = self.R
            vals = []
            for scale in (2.0, 3.0):
                w = -scale * R
                r = -1 / (self.k * self.germ.a * w)
                t_est = K.root_near(complex(r), self.k, self.th_rep)
                ang = np.angle(z0) + np.sign(math.sin(self.th_rep - np.angle(z0))) * abs(t_est)
                t = np.exp(1j * ang) - z0
                vals.append(formal_eval(t, self.aneg, self.beta, self.apos, self.th_rep))
            if abs(vals[0].imag - vals[1].imag) > 1e-8 * (1 + abs(vals[0])):
                log.warning("repelling coordinate not symmetric: %s", vals)
            return -1j * vals[0].imag
        # measure the logarithm from repelling axis 0 rather than from angle 0
        return -1j * self.beta * self.th_rep

    def _anchor_point(self):
        """First critical value lying in the basin of the selected axis."""
        try:
            crit = self.f.critical_points()
        except MapError:
            return None
        fd0 = self._pack()
        for c, _ in crit:
            if not np.isfinite(c):
                continue
            v = complex(K.g_apply(complex(c), self.prog, 1))
            _, st, _ = K.phi_att(v, fd0, self.prog, self.nmax, 0)
            if st == K.ST_OK:
                return v
        return None

    # -- geometry

    def att_angle(self, j):
        return self.th_att + 2 * np.pi * j / self.k

    def model(self, z):
        t = np.asarray(z, dtype=complex) - self.germ.point
        return -1 / (self.k * self.germ.a * t ** self.k)

    def with_axis(self, axis):
        """Solver for another attracting axis of the same map."""
        return FatouSolver(self.f, axis, self.germ, self.nmax, self.eps, self.R, self.M)

    # -- evaluation

    def attracting_coord(self, z, extra=0, strict=True):
        """phi_att at z (array).  Raises unless every point is in the basin when ``strict``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        out, st, n = K.phi_att_many(z, self.fd, self.prog, self.nmax, int(extra))
        if strict and np.any(st != K.ST_OK):
            bad = int(np.argmax(st != K.ST_OK))
            raise FatouError(f"z={z[bad]} not in the basin of axis {self.axis} (status {st[bad]})")
        return out, st

    def attracting_coord_checked(self, z):
        """phi_att with the depth-agreement check."""
        a, st = self.attracting_coord(z)
        b, _ = self.attracting_coord(z, extra=4)
        if np.max(np.abs(a - b)) > self.eps * (1 + np.max(np.abs(a))):
            raise NoConvergence("attracting coordinate depends on depth")
        return a

    def repelling_param(self, zeta, extra=0, strict=True):
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex)).ravel()
        out, st = K.psi_rep_many(zeta, self.fd, self.prog, int(extra))
        if strict and np.any(st != K.ST_OK):
            bad = int(np.argmax(st != K.ST_OK))
            raise FatouError(f"psi_rep undefined at {zeta[bad]} (status {st[bad]})")
        return out, st

    def repelling_coord(self, z):
        """Phi_rep on the repelling petal (no extension)."""
        t = np.asarray(z, dtype=complex) - self.germ.point
        return formal_eval(t, self.aneg, self.beta, self.apos, self.th_rep) + self.c_rep

    def info(self):
        return {"map": self.f.spec, "k": self.k, "a": _cx(self.germ.a), "b": _cx(self.germ.b),
                "R": self.R, "M": self.M, "axis": self.axis, "theta_rep": self.th_rep,
                "theta_att": self.th_att, "c_rep": _cx(self.c_rep), "c_att": _cx(self.c_att),
                "anchor": _cx(self.anchor) if self.anchor is not None else None,
                "nmax": self.nmax, "eps": self.eps}


def attracting_coord(solver: FatouSolver, z):
    return solver.attracting_coord(z)[0]


def repelling_param(solver: FatouSolver, zeta):
    return solver.repelling_param(zeta)[0]


# ------------------------------------------------------------------ horn map

UPPER, LOWER = +1, -1


def _side(sign):
    if sign in ("+", "upper", 1, +1):
        return UPPER
    if sign in ("-", "lower", -1):
        return LOWER
    raise ValueError(f"side must be + or -: {sign!r}")


class HornMap:
    """h = phi_att o psi_rep for the upper (+) or lower (-) end."""

    def __init__(self, att: FatouSolver, rep: FatouSolver | None = None, side=UPPER):
        self.side = _side(side)
        self.att = att
        self.rep = rep or att
        if self.rep is not att and (self.rep.f is not att.f):
            raise ValueError("both solvers must belong to the same map")
        self.fd = att.fd[:7] + (self.rep.th_rep, att.th_att, self.rep.c_rep, att.c_att) + att.fd[11:]
        self.prog = att.prog
        self.nmax = att.nmax
        self._C = {}

    @classmethod
    def build(cls, f, side=UPPER, **kw):
        side = _side(side)
        solver = FatouSolver(f, 0, **kw)
        if side == LOWER and solver.k > 1:
            solver = solver.with_axis(solver.k - 1)
        return cls(solver, side=side)

    @property
    def f(self):
        return self.att.f

    def __call__(self, zeta, strict=True):
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex)).ravel()
        out, st = K.horn_many(zeta, self.fd, self.prog, self.nmax)
        if strict and np.any(st != K.ST_OK):
            bad = int(np.argmax(st != K.ST_OK))
            raise FatouError(f"horn map undefined at {zeta[bad]} (status {st[bad]})")
        return out, st

    def mean_offset(self, H, nsamp=64):
        """Mean of h(zeta) - zeta over one period at height ``side * H``."""
        x = np.arange(nsamp) / nsamp
        zeta = x + 1j * self.side * H
        h, _ = self(zeta)
        return complex(np.mean(h - zeta))

    def constant(self, H0=3.0, H1=6.0, tol=1e-9, max_height=48.0):
        """Limit C of h(zeta) - zeta at the end of the cylinder."""
        if (H0, H1) in self._C:
            return self._C[(H0, H1)]
        key = cache_key("horn", self.f.spec, self.side, self.att.axis, H0, H1)
        payload = cache_load(key)
        if payload is not None:
            C = _uncx(payload["C"])
        else:
            c0, c1 = self.mean_offset(H0), self.mean_offset(H1)
            while abs(c0 - c1) > tol * (1 + abs(c1)):
                H0, H1 = H1, 2 * H1
                if H1 > max_height:
                    raise NoConvergence(f"horn constant does not settle ({c0} vs {c1})")
                c0, c1 = c1, self.mean_offset(H1)
            C = c1
            cache_store(key, {"C": _cx(C), "H": [H0, H1]}, label=f"horn {self.f.spec}")
        self._C[(H0, H1)] = C
        return C


def horn_eval(horn: HornMap, zeta):
    return horn(zeta)[0]


def sigma0(horn: HornMap, pq=0, sign=None, H0=3.0, H1=6.0):
    """Translation making the renormalized map have multiplier exp(2 pi i p/q)."""
    side = horn.side if sign is None else _side(sign)
    if side != horn.side:
        raise ValueError("sign does not match the horn map side")
    C = horn.constant(H0, H1)
    x = float(Fraction(pq))
    s = x - C if side == UPPER else -C - x
    return complex(s.real % 1.0, s.imag)


# ------------------------------------------------------------------ renormalized map

@dataclass
class RfGerm:
    germ: ParabolicGerm | None
    radius: float
    coeffs: np.ndarray = field(repr=False)
    exceptional: bool = False


# modulus of the first critical value under the "critical" normalization
CRITICAL_MODULUS = 4 / 27


class RenormalizedMap:
    """R_{p/q,+-} f evaluated pointwise through the horn map."""

    def __init__(self, horn: HornMap, pq=0, sign=None, sigma=None, esc=1e6,
                 normalization="critical"):
        self.horn = horn
        self.pq = Fraction(pq)
        self.sign = horn.side if sign is None else _side(sign)
        self.sigma0 = sigma0(horn, self.pq, self.sign) if sigma is None else complex(sigma)
        self.esc = esc
        self._germ = None
        self.scale = 1.0
        self.rp = K.pack_rf(self.sigma0, self.sign, 1, 1.0, np.inf, 0.0, 0,
                            self.pq.denominator, esc, horn.nmax)
        if normalization == "critical":
            cv = self.critical_values()
            if not cv:
                raise FatouError("no critical value in the basin to normalize with")
            self.scale = abs(cv[0]["value"]) / CRITICAL_MODULUS
            self.rp = self.rp[:10] + (self.scale,)
        elif normalization != "real":
            raise ValueError(f"unknown normalization {normalization!r}")
        self.normalization = normalization

    @classmethod
    def build(cls, f, pq=0, sign=UPPER, normalization="critical", **kw):
        return cls(HornMap.build(f, sign, **kw), pq, sign, normalization=normalization)

    @property
    def f(self):
        return self.horn.f

    @property
    def multiplier(self):
        return complex(np.exp(2j * np.pi * float(self.pq)))

    def __call__(self, W, strict=True):
        W = np.atleast_1d(np.asarray(W, dtype=complex)).ravel()
        out, st = K.rf_many(W, self.horn.fd, self.horn.prog, self.rp)
        if strict and np.any(st != K.ST_OK):
            bad = int(np.argmax(st != K.ST_OK))
            raise FatouError(f"{W[bad]} is outside the domain of Rf (status {st[bad]})")
        return out, st

    def lift(self, zeta, strict=True):
        """sigma0 + h(zeta): a lift of Rf through E."""
        h, st = self.horn(zeta, strict)
        return self.sigma0 + h, st

    def E(self, zeta):
        return np.exp(self.sign * 2j * np.pi * np.asarray(zeta, dtype=complex))

    def E_inv(self, W):
        return -self.sign * 1j * np.log(np.asarray(W, dtype=complex)) / (2 * np.pi)

    def derivative_at_zero(self, r=1e-4):
        """Four-point circular difference quotient at radius ``r``."""
        w = np.exp(2j * np.pi * np.arange(4) / 4)
        vals, _ = self(r * w)
        return complex(np.mean(vals / (r * w)))

    def critical_values(self):
        """E(sigma0 + phi_att(v)) for the critical values v of f in the basin."""
        out = []
        for c, m in self.f.critical_points():
            if not np.isfinite(c):
                continue
            v = K.g_apply(complex(c), self.horn.prog, 1)
            p, st, _ = K.phi_att(complex(v), self.horn.fd, self.horn.prog, self.horn.nmax, 0)
            if st != K.ST_OK:
                continue
            w = complex(self.E(self.sigma0 + p)) / self.scale
            out.append({"critical_point": complex(c), "multiplicity": int(m),
                        "critical_value": complex(v), "phi": complex(p), "value": w})
        return out

    def germ(self, radii=(0.05, 0.02, 0.01, 0.005, 0.002), N=12, npts=256):
        """Parabolic germ of Rf from Cauchy integrals on the largest usable circle."""
        if self._germ is not None:
            return self._germ
        for r in radii:
            w = np.exp(2j * np.pi * np.arange(npts) / npts)
            vals, st = self(r * w, strict=False)
            if np.any(st != K.ST_OK):
                continue
            c = np.fft.fft(vals) / npts
            c = c[:N] / r ** np.arange(N)
            noise = 1e-10 / r ** np.arange(N)
            c[0] = 0
            g = c
            q = self.pq.denominator
            if q > 1:
                from .series import compose
                one = c.copy()
                for _ in range(q - 1):
                    g = compose(one, g, N)
            try:
                germ = germ_from_series(g, 0j, Fraction(0), tol=noise)
            except MapError:
                self._germ = RfGerm(None, r, g, exceptional=True)
                return self._germ
            self._germ = RfGerm(germ, r, g, exceptional=germ.k > 1 and q == 1)
            gm = germ
            thR = float(gm.attracting_angle(0))
            RT = _rf_trap_radius(g, gm, r)
            self.rp = K.pack_rf(self.sigma0, self.sign, gm.k, gm.a, RT, thR, 0,
                                q, self.esc, self.horn.nmax, self.scale)
            return self._germ
        raise NoConvergence("no circle around 0 inside the domain of Rf")

    def trap_radius(self):
        return float(self.rp[4])


def _rf_trap_radius(g, germ, r):
    """Model radius beyond which Rf is close to its leading normal form."""
    k, a = germ.k, germ.a
    rho = r / 2
    # shrink until the tail is small compared with the leading term
    tail = np.abs(g[k + 2:])
    while rho > 1e-8:
        rest = float(np.sum(tail * rho ** (np.arange(len(tail)) + k + 1)))
        if rest <= 0.2 * abs(a) * rho ** k:
            break
        rho /= 2
    return max(8.0, 1 / (k * abs(a) * rho ** k))


def renormalized_eval(rmap: RenormalizedMap, z):
    return rmap(z)[0]


def rf_orbit(rmap: RenormalizedMap, z, n=200):
    """Forward orbit under Rf; returns (trajectory, stop reason).

    Stop reasons: ``steps``, ``fixed``, ``domain``, ``escape`` and, when the
    germ of Rf is known, ``petal`` on entering its attracting trap.
    """
    traj = [complex(z)]
    try:
        g = rmap.germ()
    except NoConvergence:
        g = None
    for _ in range(n):
        W = traj[-1]
        if W == 0:
            return traj, "fixed"
        if g is not None and g.germ is not None:
            w = -1 / (g.germ.k * g.germ.a * W ** g.germ.k)
            if w.real >= rmap.trap_radius():
                return traj, "petal"
        out, st = K.rf_eval(complex(W), rmap.horn.fd, rmap.horn.prog, rmap.rp)
        if st != K.ST_OK:
            return traj, "domain" if st != K.ST_ESCAPE else "escape"
        if abs(out) > rmap.esc:
            traj.append(complex(out))
            return traj, "escape"
        traj.append(complex(out))
    return traj, "steps"


def blaschke_renorm(G, **kw) -> RenormalizedMap:
    """Upper renormalization of a Blaschke map with a boundary parabolic point."""
    point, germ = blaschke_boundary_parabolic(G)
    if germ.k != 2:
        raise MapError(f"expected two attracting axes at {point}, found {germ.k}")
    solver = FatouSolver(G, 0, germ=germ, **kw)
    return RenormalizedMap(HornMap(solver, side=UPPER), 0, UPPER, normalization="real")
