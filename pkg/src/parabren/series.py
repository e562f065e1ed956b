"""Truncated power series with complex coefficients.

A series is a 1-D complex array ``s`` standing for ``sum(s[n] * t**n)``;
every operation truncates to a requested length ``N``.
"""

import numpy as np


def zeros(N):
    return np.zeros(N, dtype=complex)


def pad(s, N):
    out = zeros(N)
    s = np.asarray(s, dtype=complex)[:N]
    out[: len(s)] = s
    return out


def mul(a, b, N):
    return pad(np.convolve(pad(a, N), pad(b, N)), N)


def recip(a, N):
    """1/a for a[0] != 0."""
    a = pad(a, N)
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term")
    out = zeros(N)
    out[0] = 1 / a[0]
    for n in range(1, N):
        out[n] = -np.dot(a[1: n + 1], out[n - 1:: -1][:n]) / a[0]
    return out


def power(a, m, N):
    """a**m for integer m (negative allowed when a[0] != 0)."""
    if m < 0:
        return power(recip(a, N), -m, N)
    out = pad([1], N)
    base = pad(a, N)
    while m:
        if m & 1:
            out = mul(out, base, N)
        base = mul(base, base, N)
        m >>= 1
    return out


def compose(f, g, N):
    """f(g(t)) where g[0] == 0."""
    g = pad(g, N)
    if g[0] != 0:
        raise ValueError("inner series must vanish at 0")
    f = pad(f, N)
    out = zeros(N)
    # Horner in g
    for c in f[::-1]:
        out = mul(out, g, N)
        out[0] += c
    return out


def log1p(u, N):
    """log(1 + u) for u[0] == 0."""
    u = pad(u, N)
    if u[0] != 0:
        raise ValueError("log1p needs u[0] == 0")
    # d/dt log(1+u) = u' / (1+u)
    du = np.arange(1, N) * u[1:]
    q = mul(pad(du, N), recip(u + pad([1], N), N), N)
    out = zeros(N)
    out[1:] = q[: N - 1] / np.arange(1, N)
    return out


def exp(u, N):
    """exp(u) for u[0] == 0."""
    u = pad(u, N)
    if u[0] != 0:
        raise ValueError("exp needs u[0] == 0")
    out = zeros(N)
    out[0] = 1
    du = np.arange(N) * u
    for n in range(1, N):
        out[n] = np.dot(du[1: n + 1], out[n - 1:: -1][:n]) / n
    return out


def shift_poly(coeffs, z0, N):
    """Taylor coefficients at z0 of the polynomial sum(coeffs[n] z**n)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    out = pad(coeffs[-1:], N)
    lin = pad([z0, 1], N)
    for c in coeffs[-2::-1]:
        out = mul(out, lin, N)
        out[0] += c
    return out


def cauchy_coeffs(f, z0, radius, N, npts=None):
    """Taylor coefficients of a holomorphic callable from samples on a circle."""
    npts = npts or max(4 * N, 64)
    w = np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = np.asarray(f(z0 + radius * w), dtype=complex)
    c = np.fft.fft(vals) / npts
    return c[:N] / radius ** np.arange(N)


def evaluate(s, t):
    out = np.zeros_like(np.asarray(t, dtype=complex))
    for c in s[::-1]:
        out = out * t + c
    return out
