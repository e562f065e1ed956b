"""Compiled inner loops.

A map is passed as a *program* ``(kinds, offs, ns, params)``: a list of stages
applied in order, each reading its parameters from ``params[off:off+n]``.
Local data at the parabolic point is passed as a flat tuple ``fd`` built by
:func:`pack_fatou`; see that function for the field order.
"""

import math

import numpy as np
from numba import njit, prange

KIND_POLY, KIND_ZEXPZ, KIND_BLASCHKE = 0, 1, 2

# orbit / evaluation status codes
ST_OK = 0
ST_ESCAPE = 1
ST_UNKNOWN = 2
ST_OTHER_AXIS = 3
ST_FAIL = 4

TWO_PI = 2.0 * math.pi


# ------------------------------------------------------------------ maps

@njit(cache=True)
def f_apply(z, kinds, offs, ns, params):
    for i in range(kinds.shape[0]):
        kd = kinds[i]
        o = offs[i]
        n = ns[i]
        if kd == KIND_POLY:
            acc = params[o]
            for j in range(1, n):
                acc = acc * z + params[o + j]
            z = acc
        elif kd == KIND_ZEXPZ:
            if z.real > 700.0:
                return complex(np.inf, 0.0)
            z = z * np.exp(z)
        else:
            acc = params[o]
            for j in range(1, n):
                a = params[o + j]
                acc = acc * (z - a) / (1.0 - a.conjugate() * z)
            z = acc
    return z


@njit(cache=True)
def f_apply_d(z, kinds, offs, ns, params):
    d = 1.0 + 0.0j
    for i in range(kinds.shape[0]):
        kd = kinds[i]
        o = offs[i]
        n = ns[i]
        if kd == KIND_POLY:
            acc = params[o]
            dacc = 0.0j
            for j in range(1, n):
                dacc = dacc * z + acc
                acc = acc * z + params[o + j]
            z = acc
            d = d * dacc
        elif kd == KIND_ZEXPZ:
            if z.real > 700.0:
                return complex(np.inf, 0.0), complex(np.inf, 0.0)
            e = np.exp(z)
            d = d * (1.0 + z) * e
            z = z * e
        else:
            acc = params[o]
            dacc = 0.0j
            for j in range(1, n):
                a = params[o + j]
                den = 1.0 - a.conjugate() * z
                m = (z - a) / den
                dm = (1.0 - abs(a) ** 2) / (den * den)
                dacc = dacc * m + acc * dm
                acc = acc * m
            z = acc
            d = d * dacc
    return z, d


@njit(cache=True)
def landing_direction(z, prog, s):
    """Unit vector of g(z) - 0 when that value underflows to 0; 0 when unknown.

    Only z*exp(z) is handled: its logarithm log(z) + z stays representable.
    """
    kinds = prog[0]
    if s == 1 and kinds.shape[0] == 1 and kinds[0] == KIND_ZEXPZ and z != 0:
        ang = math.atan2(z.imag, z.real) + z.imag
        return complex(math.cos(ang), math.sin(ang))
    return 0.0j


# beyond this |Im w| the real part of w is lost to rounding
FAR = 1e12


@njit(cache=True)
def far_landing(t, w, fd):
    """Where translation w -> w + n takes a point with huge |Im w|: the trap edge."""
    k = fd[2]
    wt = complex(fd[11] + 2.0, w.imag)
    return root_near(-1.0 / (k * fd[1] * wt), k, math.atan2(t.imag, t.real))


# stand-in modulus for an orbit point that underflowed onto the fixed point
TINY = 1e-300


@njit(cache=True)
def g_apply(z, prog, s):
    kinds, offs, ns, params = prog
    for _ in range(s):
        z = f_apply(z, kinds, offs, ns, params)
    return z


@njit(cache=True)
def g_apply_d(z, prog, s):
    kinds, offs, ns, params = prog
    d = 1.0 + 0.0j
    for _ in range(s):
        z, dz = f_apply_d(z, kinds, offs, ns, params)
        d = d * dz
    return z, d


@njit(cache=True)
def finite(z):
    return math.isfinite(z.real) and math.isfinite(z.imag)


@njit(parallel=True, cache=True)
def apply_many(z, prog, s):
    out = np.empty_like(z)
    for i in prange(z.shape[0]):
        out[i] = g_apply(z[i], prog, s)
    return out


@njit(parallel=True, cache=True)
def apply_many_d(z, prog, s):
    out = np.empty_like(z)
    der = np.empty_like(z)
    for i in prange(z.shape[0]):
        out[i], der[i] = g_apply_d(z[i], prog, s)
    return out, der


# ------------------------------------------------------------------ local data

def pack_fatou(z0, a, k, s, aneg, beta, apos, th_rep, th_att, c_rep, c_att,
               R, RT, axis, esc):
    """Field order of the ``fd`` tuple used by every kernel below.

    0 z0, 1 a, 2 k, 3 s, 4 aneg (alpha_{-1..-k}), 5 beta, 6 apos (alpha_{1..M}),
    7 angle of repelling axis 0, 8 angle of attracting axis 0, 9 repelling
    constant, 10 attracting constant, 11 evaluation radius R, 12 trap radius,
    13 selected attracting axis, 14 escape radius.
    """
    return (complex(z0), complex(a), np.int64(k), np.int64(s),
            np.ascontiguousarray(aneg, dtype=np.complex128), complex(beta),
            np.ascontiguousarray(apos, dtype=np.complex128), float(th_rep), float(th_att),
            complex(c_rep), complex(c_att), float(R), float(RT), np.int64(axis), float(esc))


@njit(cache=True)
def model_w(t, fd):
    return -1.0 / (fd[2] * fd[1] * t ** fd[2])


@njit(cache=True)
def wrap_pi(x):
    x = (x + math.pi) % TWO_PI - math.pi
    return x


@njit(cache=True)
def axis_index(t, theta0, k):
    ang = (math.atan2(t.imag, t.real) - theta0) % TWO_PI
    j = int(math.floor(ang * k / TWO_PI + 0.5)) % k
    return j


@njit(cache=True)
def branch_log(t, theta):
    ang = theta + wrap_pi(math.atan2(t.imag, t.real) - theta)
    return complex(math.log(abs(t)), ang)


@njit(cache=True)
def Phi(t, fd, theta):
    """Formal Fatou series with log branch centred on direction ``theta``."""
    k = fd[2]
    aneg = fd[4]
    apos = fd[6]
    tinv = 1.0 / t
    neg = 0.0j
    for m in range(k, 0, -1):
        neg = (neg + aneg[m - 1]) * tinv
    pos = 0.0j
    for j in range(apos.shape[0], 0, -1):
        pos = (pos + apos[j - 1]) * t
    return neg + fd[5] * branch_log(t, theta) + pos


@njit(cache=True)
def dPhi(t, fd):
    k = fd[2]
    aneg = fd[4]
    apos = fd[6]
    tinv = 1.0 / t
    neg = 0.0j
    for m in range(k, 0, -1):
        neg = (neg - m * aneg[m - 1]) * tinv
    neg = neg * tinv
    pos = 0.0j
    M = apos.shape[0]
    for j in range(M, 0, -1):
        pos = pos * t + j * apos[j - 1]
    return neg + fd[5] * tinv + pos


@njit(cache=True)
def root_near(r, k, theta):
    """The k-th root of r whose argument is closest to theta."""
    mod = abs(r) ** (1.0 / k)
    base = math.atan2(r.imag, r.real) / k
    j = math.floor((theta - base) * k / TWO_PI + 0.5)
    ang = base + TWO_PI * j / k
    return complex(mod * math.cos(ang), mod * math.sin(ang))


@njit(cache=True)
def Psi0(target, fd, theta):
    """Solve Phi(t) = target on the branch around ``theta`` by Newton."""
    k = fd[2]
    a = fd[1]
    wt = target
    t = root_near(-1.0 / (k * a * wt), k, theta)
    wt = target - fd[5] * branch_log(t, theta)
    t = root_near(-1.0 / (k * a * wt), k, theta)
    for _ in range(60):
        F = Phi(t, fd, theta) - target
        dt = F / dPhi(t, fd)
        t = t - dt
        if abs(dt) <= 1e-15 * abs(t):
            break
    err = abs(Phi(t, fd, theta) - target)
    return t, err


# ------------------------------------------------------------------ orbits

# step counts saturate here; only the real part of phi depends on them
MAX_STEPS = float(1 << 60)


@njit(cache=True)
def teleport(t, fd, max_jump):
    """Jump through a repelling petal, or past the gap between petals, in Fatou coordinates.

    Returns (new_t, m) where m >= 1 is the (float) number of g-steps
    skipped, at most ``max_jump``, or (t, 0) when t is not deep enough.
    """
    k = fd[2]
    R = fd[11]
    j = axis_index(t, fd[7], k)
    theta = fd[7] + TWO_PI * j / k
    zeta = Phi(t, fd, theta)
    depth = -R - 2.0 - abs(zeta.imag)
    m = np.floor(depth - zeta.real)
    if not (m >= 1.0):
        # between the petals, far from z0, the orbit still moves by +1 in zeta
        w = model_w(t, fd)
        if abs(w.imag) < 4.0 * R or w.real >= R:
            return t, 0.0
        m = np.floor(R + 2.0 - zeta.real)
        if not (m >= 1.0):
            return t, 0.0
    if m > max_jump:
        m = np.floor(max_jump)
    t2, err = Psi0(zeta + m, fd, theta)
    if not (err < 1e-9 * (1.0 + abs(zeta))):
        return t, 0.0
    return t2, m


@njit(cache=True)
def orbit_to_petal(z, fd, prog, nmax, radius, use_teleport):
    """Iterate g until ``Re w >= radius`` near z0.

    Returns (t_final, n_steps, status, axis).  Steps skipped by teleporting
    are included in ``n_steps``.
    """
    z0 = fd[0]
    k = fd[2]
    s = fd[3]
    R = fd[11]
    esc = fd[14]
    n = 0
    it = 0
    while it <= nmax:
        if not finite(z) or abs(z) > esc:
            return z - z0, n, ST_ESCAPE, -1
        t = z - z0
        if t == 0:
            return t, n, ST_UNKNOWN, -1
        w = model_w(t, fd)
        if w.real >= radius:
            return t, n, ST_OK, axis_index(t, fd[8], k)
        if abs(w.imag) >= FAR:
            t = far_landing(t, w, fd)
            return t, n, ST_OK, axis_index(t, fd[8], k)
        if use_teleport and (w.real <= -R - 2.0 or abs(w.imag) >= 4.0 * R):
            t2, m = teleport(t, fd, math.inf)
            if m > 0:
                z = z0 + t2
                n += np.int64(min(m, MAX_STEPS - n))
                it += 1
                continue
        zn = g_apply(z, prog, s)
        if zn == z0 and z0 == 0:
            u = landing_direction(z, prog, s)
            if u != 0:
                return TINY * u, n + 1, ST_OK, axis_index(u, fd[8], k)
        z = zn
        n += 1
        it += 1
    return z - z0, n, ST_UNKNOWN, -1


@njit(cache=True)
def phi_att(z, fd, prog, nmax, extra):
    """Attracting coordinate of the selected axis; ``extra`` adds depth."""
    t, n, st, ax = orbit_to_petal(z, fd, prog, nmax, fd[11], True)
    if st != ST_OK:
        return 0.0j, st, n
    if ax != fd[13]:
        return 0.0j, ST_OTHER_AXIS, n
    z0 = fd[0]
    s = fd[3]
    for _ in range(extra):
        t = g_apply(z0 + t, prog, s) - z0
        n += 1
    return Phi(t, fd, fd[8] + TWO_PI * fd[13] / fd[2]) - n + fd[10], ST_OK, n


@njit(cache=True)
def psi_rep(zeta, fd, prog, extra):
    """Repelling parametrisation for repelling axis 0; ``extra`` adds depth."""
    R = fd[11]
    n = int(math.ceil(zeta.real + R + 2.0 + abs(zeta.imag)))
    if n < 0:
        n = 0
    n += extra
    t, err = Psi0(zeta - n - fd[9], fd, fd[7])
    if not (err < 1e-9 * (1.0 + abs(zeta) + n)):
        return 0.0j, ST_FAIL
    z = fd[0] + t
    s = fd[3]
    esc = fd[14]
    for _ in range(n):
        z = g_apply(z, prog, s)
        if not finite(z) or abs(z) > esc:
            return z, ST_ESCAPE
    return z, ST_OK


@njit(parallel=True, cache=True)
def phi_att_many(z, fd, prog, nmax, extra):
    out = np.empty_like(z)
    st = np.empty(z.shape[0], dtype=np.int64)
    nn = np.empty(z.shape[0], dtype=np.int64)
    for i in prange(z.shape[0]):
        out[i], st[i], nn[i] = phi_att(z[i], fd, prog, nmax, extra)
    return out, st, nn


@njit(parallel=True, cache=True)
def psi_rep_many(zeta, fd, prog, extra):
    out = np.empty_like(zeta)
    st = np.empty(zeta.shape[0], dtype=np.int64)
    for i in prange(zeta.shape[0]):
        out[i], st[i] = psi_rep(zeta[i], fd, prog, extra)
    return out, st


@njit(parallel=True, cache=True)
def Phi_many(t, fd, theta):
    out = np.empty_like(t)
    for i in prange(t.shape[0]):
        out[i] = Phi(t[i], fd, theta)
    return out


# ------------------------------------------------------------------ renormalized map

def pack_rf(sigma0, sign, kR, aR, RTR, thR, axisR, sR, escR, nmax, scale=1.0):
    """Field order of the ``rp`` tuple: 0 sigma0, 1 sign (+1/-1), 2 axis count
    of Rf, 3 its leading coefficient, 4 trap radius, 5 angle of attracting
    axis 0 of Rf, 6 selected axis, 7 period of the rotation, 8 escape radius,
    9 step budget for inner orbits, 10 conjugating scale (Rf is replaced by
    W -> Rf(scale W) / scale)."""
    return (complex(sigma0), np.int64(sign), np.int64(kR), complex(aR), float(RTR),
            float(thR), np.int64(axisR), np.int64(sR), float(escR), np.int64(nmax),
            float(scale))


@njit(cache=True)
def horn(zeta, fd, prog, nmax):
    z, st = psi_rep(zeta, fd, prog, 0)
    if st != ST_OK:
        return 0.0j, st
    p, st, n = phi_att(z, fd, prog, nmax, 0)
    return p, st


@njit(cache=True)
def E_map(zeta, sign):
    u = sign * 2j * math.pi * zeta
    if u.real > 700.0:
        return complex(np.inf, 0.0)
    return np.exp(u)


@njit(cache=True)
def E_inv(W, sign):
    lw = np.log(W)
    return -sign * 1j * lw / TWO_PI


@njit(cache=True)
def lift_eval(zeta, fd, prog, rp):
    """sigma0 + h(zeta)."""
    p, st = horn(zeta, fd, prog, rp[9])
    return rp[0] + p, st


@njit(cache=True)
def rf_eval(W, fd, prog, rp):
    if W == 0:
        return 0.0j, ST_OK
    if not finite(W):
        return W, ST_ESCAPE
    u, st = lift_eval(E_inv(W * rp[10], rp[1]), fd, prog, rp)
    if st != ST_OK:
        return 0.0j, st
    out = E_map(u, rp[1]) / rp[10]
    if not finite(out):
        return out, ST_ESCAPE
    return out, ST_OK


@njit(parallel=True, cache=True)
def rf_many(W, fd, prog, rp):
    out = np.empty_like(W)
    st = np.empty(W.shape[0], dtype=np.int64)
    for i in prange(W.shape[0]):
        out[i], st[i] = rf_eval(W[i], fd, prog, rp)
    return out, st


@njit(parallel=True, cache=True)
def horn_many(zeta, fd, prog, nmax):
    out = np.empty_like(zeta)
    st = np.empty(zeta.shape[0], dtype=np.int64)
    for i in prange(zeta.shape[0]):
        out[i], st[i] = horn(zeta[i], fd, prog, nmax)
    return out, st


@njit(cache=True)
def rf_model_w(W, rp):
    return -1.0 / (rp[2] * rp[3] * W ** rp[2])


@njit(cache=True)
def rf_orbit_to_trap(W, fd, prog, rp, nmax):
    """Iterate Rf^s until its own trap.  Returns (W, n, status, axis)."""
    k = rp[2]
    for n in range(nmax + 1):
        if W == 0:
            return W, n, ST_UNKNOWN, -1
        if not finite(W) or abs(W) > rp[8]:
            return W, n, ST_ESCAPE, -1
        w = rf_model_w(W, rp)
        if w.real >= rp[4]:
            return W, n, ST_OK, axis_index(W, rp[5], k)
        for _ in range(rp[7]):
            W, st = rf_eval(W, fd, prog, rp)
            if st != ST_OK:
                return W, n, ST_ESCAPE, -1
    return W, nmax, ST_UNKNOWN, -1


@njit(parallel=True, cache=True)
def rf_classify_many(W, fd, prog, rp, nmax):
    st = np.empty(W.shape[0], dtype=np.int64)
    ax = np.empty(W.shape[0], dtype=np.int64)
    nn = np.empty(W.shape[0], dtype=np.int64)
    for i in prange(W.shape[0]):
        _, nn[i], st[i], ax[i] = rf_orbit_to_trap(W[i], fd, prog, rp, nmax)
    return st, ax, nn
