"""Compiled loops for rasters: basin classification, segment linking, slices."""

import heapq
import math

import numpy as np
from numba import njit, prange

from .kernels import (FAR, ST_ESCAPE, ST_FAIL, ST_OK, ST_UNKNOWN, TWO_PI, Phi, Psi0, axis_index,
                      dPhi, f_apply, f_apply_d, far_landing, finite, g_apply, landing_direction,
                      model_w, orbit_to_petal, psi_rep, teleport)

# ------------------------------------------------------------------ dynamical plane


@njit(cache=True)
def basin_point(z, fd, prog, nmax):
    """(status, axis, phi) with phi the attracting coordinate of the entry axis.

    ``phi`` omits the normalisation constant; it is only compared between
    nearby points.
    """
    t, n, st, ax = orbit_to_petal(z, fd, prog, nmax, fd[11], True)
    if st != ST_OK:
        return st, -1, 0.0j
    theta = fd[8] + TWO_PI * ax / fd[2]
    return ST_OK, ax, Phi(t, fd, theta) - n


@njit(cache=True)
def in_trap(z, fd):
    """Attracting trap, widened by the band between petals that translates into it."""
    t = z - fd[0]
    if t == 0:
        return False
    w = model_w(t, fd)
    R = fd[11]
    return w.real >= R or (abs(w.imag) >= 4.0 * R and w.real > -R - 2.0)


MODE_Z, MODE_PSI = 0, 1


@njit(cache=True)
def probe(p, mode, fd, prog, nmax):
    """(status, axis, phi, z) at a sample point: z = p, or z = psi_rep(p)."""
    z = p
    if mode == MODE_PSI:
        z, st = psi_rep(p, fd, prog, 0)
        if st == ST_ESCAPE:
            return ST_ESCAPE, -1, 0.0j, z
        if st != ST_OK:
            return ST_FAIL, -1, 0.0j, z
    st, ax, ph = basin_point(z, fd, prog, nmax)
    return st, ax, ph, z


@njit(cache=True)
def _nearest(z, pts):
    d = math.inf
    for i in range(pts.shape[0]):
        e = abs(z - pts[i])
        if e < d:
            d = e
    return d


@njit(cache=True)
def _room(t, w, fd):
    """Log radius, in z, of a disk around z0 + t on which the model coordinate is univalent.

    Measured in w: the attracting half plane Re w > R/2, the band between
    petals |Im w| > 2R, or the repelling half plane Re w < -R/2.
    """
    R = fd[11]
    room = max(w.real - 0.5 * R, abs(w.imag) - 2.0 * R, -0.5 * R - w.real)
    if not (room > 0.0):
        return -math.inf
    return math.log(room) + math.log(abs(t)) - math.log(fd[2] * abs(w))


CRIT = -1


@njit(cache=True)
def _radius_orbit(z, logd, best, fd, prog, nmax, cv):
    """Follow z to the trap while pulling disks back along its orbit.

    ``logd`` is log|d(current point)/d(start)| and ``best`` the log radius
    found so far.  Every f-step bounds the disk by the distance to the
    critical values ``cv``; teleports bound it by the room of the model
    coordinate.  Returns (status, axis, log radius); status CRIT when the
    orbit hits a critical point.
    """
    z0 = fd[0]
    k = fd[2]
    s = fd[3]
    R = fd[11]
    esc = fd[14]
    kinds, offs, ns, params = prog
    it = 0
    while it <= nmax:
        if not finite(z) or abs(z) > esc:
            return ST_ESCAPE, -1, -math.inf
        t = z - z0
        if t == 0:
            return ST_UNKNOWN, -1, -math.inf
        w = model_w(t, fd)
        if abs(w.imag) >= FAR:
            ax = axis_index(far_landing(t, w, fd), fd[8], k)
            return ST_OK, ax, min(best, _room(t, w, fd) - logd)
        if w.real >= R:
            return ST_OK, axis_index(t, fd[8], k), min(best, _room(t, w, fd) - logd)
        if w.real <= -R - 2.0 or abs(w.imag) >= 4.0 * R:
            t2, m = teleport(t, fd, math.inf)
            if m > 0:
                logd += math.log(abs(dPhi(t, fd))) - math.log(abs(dPhi(t2, fd)))
                best = min(best, _room(t2, model_w(t2, fd), fd) - logd)
                z = z0 + t2
                it += 1
                continue
        for _ in range(s):
            zn, dz = f_apply_d(z, kinds, offs, ns, params)
            if zn == z0 and z0 == 0:
                u = landing_direction(z, prog, 1)
                if u != 0:
                    return ST_OK, axis_index(u, fd[8], k), best
                return ST_UNKNOWN, -1, -math.inf
            if dz == 0:
                return CRIT, -1, -math.inf
            logd += math.log(abs(dz))
            z = zn
            if not finite(z):
                break
            dist = _nearest(z, cv)
            if dist == 0.0:
                return CRIT, -1, -math.inf
            best = min(best, math.log(dist) - logd)
        it += 1
    return ST_UNKNOWN, -1, -math.inf


@njit(cache=True)
def disk_radius(z, fd, prog, nmax, cp, cv):
    """(status, axis, r): the disk of radius r about z lies in one Fatou component.

    Koebe's quarter theorem on the pulled-back disk; at a critical point of
    f the disk at its image is pulled back through a local square root.
    """
    if _nearest(z, cp) <= 1e-12 * (1.0 + abs(z)):
        st, ax, ph = basin_point(z, fd, prog, nmax)
        if st != ST_OK:
            return st, -1, 0.0
        kinds, offs, ns, params = prog
        v = f_apply(z, kinds, offs, ns, params)
        st2, _, lr = _radius_orbit(v, 0.0, math.inf, fd, prog, nmax, cv)
        if st2 != ST_OK:
            return ST_UNKNOWN, -1, 0.0
        h = 1e-6 * (1.0 + abs(z))
        _, d1 = f_apply_d(z + h, kinds, offs, ns, params)
        _, d2 = f_apply_d(z - h, kinds, offs, ns, params)
        f2 = abs(d1 - d2) / (2.0 * h)
        if not (f2 > 0.0):
            return ST_UNKNOWN, -1, 0.0
        return ST_OK, ax, 0.5 * math.sqrt(0.25 * math.exp(lr) / (0.5 * f2))
    st, ax, lr = _radius_orbit(z, 0.0, math.inf, fd, prog, nmax, cv)
    if st == CRIT:
        return ST_UNKNOWN, -1, 0.0
    if st != ST_OK:
        return st, -1, 0.0
    return ST_OK, ax, 0.25 * math.exp(lr)


@njit(cache=True)
def point_data(p, mode, fd, prog, nmax, cp, cv):
    """(status, axis, r) for a sample p; in MODE_PSI, r is measured in the zeta-plane."""
    if mode == MODE_Z:
        return disk_radius(p, fd, prog, nmax, cp, cv)
    R = fd[11]
    n = math.ceil(p.real + R + 2.0 + abs(p.imag))
    if n < 0:
        n = 0
    zeta = p - n - fd[9]
    t, err = Psi0(zeta, fd, fd[7])
    if not (err < 1e-9 * (1.0 + abs(p) + n)):
        return ST_FAIL, -1, 0.0
    logd = -math.log(abs(dPhi(t, fd)))
    best = math.log(max(-0.5 * R - zeta.real, 1e-300))
    st, ax, lr = _radius_orbit(fd[0] + t, logd, best, fd, prog, nmax, cv)
    if st == CRIT:
        return ST_UNKNOWN, -1, 0.0
    if st != ST_OK:
        return st, -1, 0.0
    return ST_OK, ax, 0.25 * math.exp(lr)


@njit(cache=True)
def segment_link(p1, s1, a1, r1, p2, s2, a2, r2, mode, fd, prog, nmax, eta, depth, cp, cv):
    """True when the segment [p1, p2] is covered by a chain of disks in one Fatou component.

    Pieces whose end disks (radii scaled by ``eta``) overlap are accepted;
    others are halved, at most ``depth`` times.  Any sample outside the
    basin of the common axis rejects the segment.
    """
    cap = 4 * depth + 8
    pa_ = np.empty(cap, dtype=np.complex128)
    pb_ = np.empty(cap, dtype=np.complex128)
    sa_ = np.empty(cap, dtype=np.int64)
    sb_ = np.empty(cap, dtype=np.int64)
    aa_ = np.empty(cap, dtype=np.int64)
    ab_ = np.empty(cap, dtype=np.int64)
    ra_ = np.empty(cap, dtype=np.float64)
    rb_ = np.empty(cap, dtype=np.float64)
    lv_ = np.empty(cap, dtype=np.int64)
    pa_[0], sa_[0], aa_[0], ra_[0] = p1, s1, a1, r1
    pb_[0], sb_[0], ab_[0], rb_[0] = p2, s2, a2, r2
    lv_[0] = 0
    top = 1
    while top > 0:
        top -= 1
        pa, sa, aa, ra = pa_[top], sa_[top], aa_[top], ra_[top]
        pb, sb, ab, rb = pb_[top], sb_[top], ab_[top], rb_[top]
        lv = lv_[top]
        if sa != ST_OK or sb != ST_OK or aa != ab:
            return False
        if abs(pb - pa) <= eta * (ra + rb):
            continue
        if lv >= depth or top + 2 > cap:
            return False
        pm = 0.5 * (pa + pb)
        sm, am, rm = point_data(pm, mode, fd, prog, nmax, cp, cv)
        pa_[top], sa_[top], aa_[top], ra_[top] = pa, sa, aa, ra
        pb_[top], sb_[top], ab_[top], rb_[top] = pm, sm, am, rm
        lv_[top] = lv + 1
        top += 1
        pa_[top], sa_[top], aa_[top], ra_[top] = pm, sm, am, rm
        pb_[top], sb_[top], ab_[top], rb_[top] = pb, sb, ab, rb
        lv_[top] = lv + 1
        top += 1
    return True


@njit(cache=True)
def link_points(p1, p2, mode, fd, prog, nmax, eta, depth, cp, cv):
    s1, a1, r1 = point_data(p1, mode, fd, prog, nmax, cp, cv)
    s2, a2, r2 = point_data(p2, mode, fd, prog, nmax, cp, cv)
    return segment_link(p1, s1, a1, r1, p2, s2, a2, r2, mode, fd, prog, nmax, eta, depth, cp, cv)


@njit(cache=True)
def self_link(z, fd, prog, nmax, eta, depth, cp, cv):
    """Whether z and its g-image are seen in one component (so it is periodic)."""
    if in_trap(z, fd):
        return True
    w = g_apply(z, prog, fd[3])
    if not finite(w):
        return False
    return link_points(z, w, MODE_Z, fd, prog, nmax, eta, depth, cp, cv)


@njit(cache=True)
def flood_immediate(ps, zs, st, ax, rs, width, height, mode, fd, prog, nmax, eta, depth, cp, cv):
    """Mark the pixels joined by segment links to a trap pixel or a periodic seed.

    Seeds are pixels whose image point lies in the trap; a pixel component
    of one axis without such a pixel is seeded when its pixel of largest
    attracting real part passes :func:`self_link`.
    """
    n = width * height
    mark = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for i in range(n):
        if st[i] == ST_OK and in_trap(zs[i], fd):
            mark[i] = True
            queue[tail] = i
            tail += 1
    # components (same axis, 4-connected) without a trap pixel get one
    # periodicity test at their pixel of largest attracting real part
    comp = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    min_size = max(16, n // 10000)
    for i0 in range(n):
        if comp[i0] >= 0 or st[i0] != ST_OK:
            continue
        comp[i0] = i0
        top = 0
        stack[0] = i0
        size = 0
        seeded = mark[i0]
        best = i0
        bestw = model_w(zs[i0] - fd[0], fd).real
        while top >= 0:
            i = stack[top]
            top -= 1
            size += 1
            seeded = seeded or mark[i]
            w = model_w(zs[i] - fd[0], fd).real
            if w > bestw:
                bestw = w
                best = i
            x = i % width
            y = i // width
            for e in range(4):
                xx, yy = x, y
                if e == 0:
                    xx += 1
                elif e == 1:
                    xx -= 1
                elif e == 2:
                    yy += 1
                else:
                    yy -= 1
                if xx < 0 or yy < 0 or xx >= width or yy >= height:
                    continue
                j = yy * width + xx
                if comp[j] >= 0 or st[j] != ST_OK or ax[j] != ax[i0]:
                    continue
                comp[j] = i0
                top += 1
                stack[top] = j
        if seeded or size < min_size:
            continue
        if self_link(zs[best], fd, prog, nmax, eta, depth, cp, cv):
            mark[best] = True
            queue[tail] = best
            tail += 1
    while head < tail:
        i = queue[head]
        head += 1
        x = i % width
        y = i // width
        for e in range(4):
            xx, yy = x, y
            if e == 0:
                xx += 1
            elif e == 1:
                xx -= 1
            elif e == 2:
                yy += 1
            else:
                yy -= 1
            if xx < 0 or yy < 0 or xx >= width or yy >= height:
                continue
            j = yy * width + xx
            if mark[j] or st[j] != ST_OK or ax[j] != ax[i]:
                continue
            if segment_link(ps[i], st[i], ax[i], rs[i], ps[j], st[j], ax[j], rs[j], mode, fd, prog,
                            nmax, eta, depth, cp, cv):
                mark[j] = True
                queue[tail] = j
                tail += 1
    return mark


@njit(parallel=True, cache=True)
def probe_grid(ps, mode, fd, prog, nmax, cp, cv):
    n = ps.shape[0]
    st = np.empty(n, dtype=np.int64)
    ax = np.empty(n, dtype=np.int64)
    ph = np.empty(n, dtype=np.complex128)
    zs = np.empty(n, dtype=np.complex128)
    rs = np.zeros(n, dtype=np.float64)
    for i in prange(n):
        st[i], ax[i], ph[i], zs[i] = probe(ps[i], mode, fd, prog, nmax)
        if st[i] == ST_OK:
            s2, a2, r2 = point_data(ps[i], mode, fd, prog, nmax, cp, cv)
            if s2 == ST_OK and a2 == ax[i]:
                rs[i] = r2
    return st, ax, ph, zs, rs


# ------------------------------------------------------------------ cubic slices


@njit(cache=True)
def cubic_coeffs(lam, c):
    """(a1, a2, a3) with P_c(z) = a1 z + a2 z^2 + a3 z^3."""
    return lam, -lam * (1.0 + c) / (2.0 * c), lam / (3.0 * c)


@njit(cache=True)
def cubic_apply(z, a1, a2, a3):
    return z * (a1 + z * (a2 + z * a3))


@njit(cache=True)
def _series_mul(x, y, N):
    out = np.zeros(N, dtype=np.complex128)
    for i in range(N):
        if x[i] == 0:
            continue
        for j in range(N - i):
            out[i + j] += x[i] * y[j]
    return out


@njit(cache=True)
def cubic_iterate_series(a1, a2, a3, q, N):
    """Taylor coefficients of P^q at 0, truncated to length N."""
    g = np.zeros(N, dtype=np.complex128)
    g[1] = a1
    if N > 2:
        g[2] = a2
    if N > 3:
        g[3] = a3
    for _ in range(q - 1):
        g2 = _series_mul(g, g, N)
        g3 = _series_mul(g2, g, N)
        g = a1 * g + a2 * g2 + a3 * g3
    return g


@njit(cache=True)
def cubic_germ(a1, a2, a3, q, tol):
    """(k, a): P^q(z) = z + a z^(k+1) + ..., k in {q, 2q}; k = 0 if degenerate."""
    N = 2 * q + 2
    g = cubic_iterate_series(a1, a2, a3, q, N)
    if abs(g[q + 1]) > tol:
        return q, g[q + 1]
    if abs(g[2 * q + 1]) > tol:
        return 2 * q, g[2 * q + 1]
    return 0, 0.0j


@njit(cache=True)
def ipow(z, k):
    out = 1.0 + 0.0j
    while k:
        if k & 1:
            out *= z
        z *= z
        k >>= 1
    return out


@njit(cache=True)
def cubic_orbit(x, a1, a2, a3, q, shift, k, a, RT, esc, maxit):
    """Follow x under P until its q-th iterate behaves like translation.

    Returns (status, origin axis, steps): the axis is the one whose basin
    contains x, recovered from the entry axis by undoing ``shift`` per step.
    """
    th0 = math.atan2((-1.0 / (k * a)).imag, (-1.0 / (k * a)).real) / k
    th0 = th0 % (TWO_PI / k)
    z = x
    for n in range(maxit):
        if not finite(z) or abs(z) > esc:
            return ST_ESCAPE, -1, n
        if z != 0:
            w = -1.0 / (k * a * ipow(z, k))
            if w.real >= RT:
                z2 = z
                for _ in range(q):
                    z2 = cubic_apply(z2, a1, a2, a3)
                w2 = -1.0 / (k * a * ipow(z2, k))
                if abs(w2 - w - 1.0) < 0.25:
                    j = axis_index(z, th0, k)
                    return ST_OK, (j - n * shift) % k, n
        z = cubic_apply(z, a1, a2, a3)
    return ST_UNKNOWN, -1, maxit


@njit(cache=True)
def cubic_classify(lam, c, p, q, RT, maxit):
    """(k, status1, axis1, steps1, status_c, axis_c, steps_c) for P_c."""
    a1, a2, a3 = cubic_coeffs(lam, c)
    k, a = cubic_germ(a1, a2, a3, q, 1e-10)
    if k == 0:
        return 0, ST_FAIL, -1, 0, ST_FAIL, -1, 0
    shift = (p * (k // q)) % k
    esc = 1e6 * max(1.0, abs(c))
    s1, x1, n1 = cubic_orbit(1.0 + 0.0j, a1, a2, a3, q, shift, k, a, RT, esc, maxit)
    s2, x2, n2 = cubic_orbit(c, a1, a2, a3, q, shift, k, a, RT, esc, maxit)
    return k, s1, x1, n1, s2, x2, n2


@njit(parallel=True, cache=True)
def cubic_classify_many(lam, cs, p, q, RT, maxit):
    n = cs.shape[0]
    out = np.empty((n, 7), dtype=np.int64)
    for i in prange(n):
        r = cubic_classify(lam, cs[i], p, q, RT, maxit)
        for j in range(7):
            out[i, j] = r[j]
    return out




# ------------------------------------------------------------------ immediate basin search

IMM_NO, IMM_YES, IMM_UNKNOWN = 0, 1, 2


@njit(cache=True)
def immediate_search(x, corner, h, width, height, fd, prog, nmax, eta, depth, max_visits, cp, cv):
    """Decide whether x lies in an immediate basin by best-first grid search.

    Pixels linked to x through segment tests are explored in order of
    decreasing Re(phi).  Reaching the trap, or a pixel whose segment to its
    own g-image passes the test (a periodic component), answers yes;
    exhausting the component answers no.  Returns (verdict, visits).
    """
    st, ax, px = basin_point(x, fd, prog, nmax)
    if st != ST_OK:
        return IMM_NO, 0
    if self_link(x, fd, prog, nmax, eta, depth, cp, cv):
        return IMM_YES, 0
    sx, axx, rx = point_data(x, MODE_Z, fd, prog, nmax, cp, cv)
    n = width * height
    # 0 unseen, 1 queued/visited, 2 rejected
    seen = np.zeros(n, dtype=np.int8)
    sts = np.zeros(n, dtype=np.int64)
    axs = np.zeros(n, dtype=np.int64)
    rad = np.zeros(n, dtype=np.float64)
    heap = [(0.0, np.int64(0))]
    heap.pop()
    i0 = int(math.floor((x.real - corner.real) / h))
    j0 = int(math.floor((x.imag - corner.imag) / h))
    for di in range(-1, 2):
        for dj in range(-1, 2):
            i, j = i0 + di, j0 + dj
            if i < 0 or j < 0 or i >= width or j >= height:
                continue
            k = j * width + i
            z = corner + (i + 0.5) * h + 1j * (j + 0.5) * h
            s2, a2, p2 = basin_point(z, fd, prog, nmax)
            if s2 != ST_OK or a2 != ax:
                seen[k] = 2
                continue
            s3, a3, r3 = point_data(z, MODE_Z, fd, prog, nmax, cp, cv)
            if segment_link(x, sx, axx, rx, z, s3, a3, r3, MODE_Z, fd, prog, nmax, eta, depth, cp, cv):
                seen[k] = 1
                sts[k], axs[k], rad[k] = s3, a3, r3
                heapq.heappush(heap, (-p2.real, np.int64(k)))
    visits = 0
    while len(heap) > 0:
        _, k = heapq.heappop(heap)
        visits += 1
        if visits > max_visits:
            return IMM_UNKNOWN, visits
        i = k % width
        j = k // width
        z = corner + (i + 0.5) * h + 1j * (j + 0.5) * h
        if self_link(z, fd, prog, nmax, eta, depth, cp, cv):
            return IMM_YES, visits
        for e in range(4):
            ii, jj = i, j
            if e == 0:
                ii += 1
            elif e == 1:
                ii -= 1
            elif e == 2:
                jj += 1
            else:
                jj -= 1
            if ii < 0 or jj < 0 or ii >= width or jj >= height:
                continue
            kk = jj * width + ii
            if seen[kk] != 0:
                continue
            zz = corner + (ii + 0.5) * h + 1j * (jj + 0.5) * h
            s2, a2, p2 = basin_point(zz, fd, prog, nmax)
            if s2 != ST_OK or a2 != ax:
                seen[kk] = 2
                continue
            s3, a3, r3 = point_data(zz, MODE_Z, fd, prog, nmax, cp, cv)
            if segment_link(z, sts[k], axs[k], rad[k], zz, s3, a3, r3, MODE_Z, fd, prog, nmax,
                            eta, depth, cp, cv):
                seen[kk] = 1
                sts[kk], axs[kk], rad[kk] = s3, a3, r3
                heapq.heappush(heap, (-p2.real, np.int64(kk)))
    return IMM_NO, visits
