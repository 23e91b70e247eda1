"""Compiled Monte Carlo kernel for the short-rate discount-factor oracle.

Simulates r = y^2 with exact-in-distribution Euler steps on y and records
trapezoid integrals of r at requested horizons.  Speed matters here (the
validation run is 10^6 paths x 64000 steps), so the kernel carries its own
inline RNG: one xoshiro256++ stream per path, seeded from (seed, path index)
via splitmix64, with standard normals drawn by a 256-layer ziggurat.  Every
path owns its stream and its output slot, so results are bit-identical
regardless of thread count or scheduling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

__all__ = ["euler_zcb_integrals", "kernel_standard_normals", "ZIG_R"]

# outermost ziggurat layer edge for the 256-layer standard normal
ZIG_R = 3.6541528853610088
_M53 = 9007199254740992.0  # 2**53
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _build_tables():
    n = 256
    r = ZIG_R
    f_r = math.exp(-0.5 * r * r)
    # layer area implied by the edge: rectangle part plus the tail
    v = r * f_r + math.sqrt(math.pi / 2.0) * math.erfc(r / math.sqrt(2.0))
    assert abs(v - 0.00492867323399) < 1e-12
    kn = np.zeros(n, dtype=np.uint64)
    wn = np.zeros(n, dtype=np.float64)
    fn = np.zeros(n, dtype=np.float64)
    q = v / f_r
    kn[0] = np.uint64((r / q) * _M53)
    kn[1] = 0
    wn[0] = q / _M53
    wn[n - 1] = r / _M53
    fn[0] = 1.0
    fn[n - 1] = f_r
    dn = r
    tn = r
    for i in range(n - 2, 0, -1):
        dn = math.sqrt(-2.0 * math.log(v / dn + math.exp(-0.5 * dn * dn)))
        kn[i + 1] = np.uint64((dn / tn) * _M53)
        tn = dn
        fn[i] = math.exp(-0.5 * dn * dn)
        wn[i] = dn / _M53
    # innermost edge of a 256-layer table sits near (2v)^(1/3)
    assert 0.0 < dn < 0.3
    assert np.all(np.diff(fn[1:]) < 0.0)
    return kn, wn, fn


_KN, _WN, _FN = _build_tables()


@njit(cache=True, inline="always")
def _splitmix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@njit(cache=True, inline="always")
def _stream_init(seed, stream):
    st = seed ^ (np.uint64(0x9E3779B97F4A7C15) * (stream + np.uint64(1)))
    st, s0 = _splitmix64(st)
    st, s1 = _splitmix64(st)
    st, s2 = _splitmix64(st)
    st, s3 = _splitmix64(st)
    return s0, s1, s2, s3


@njit(cache=True, inline="always")
def _next_u64(s0, s1, s2, s3):
    out = (_rotl(s0 + s3, np.uint64(23)) + s0) & _MASK64
    t = (s1 << np.uint64(17)) & _MASK64
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, np.uint64(45))
    return out, s0, s1, s2, s3


@njit(cache=True, inline="always")
def _u01(mag):
    # mag holds 53 random bits; map to the open interval (0, 1)
    return (np.float64(mag) + 0.5) * (1.0 / _M53)


@njit(cache=True, inline="always")
def _normal(s0, s1, s2, s3, kn, wn, fn):
    while True:
        u, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
        iz = np.int64(u & np.uint64(255))
        neg = (u >> np.uint64(8)) & np.uint64(1)
        mag = u >> np.uint64(11)
        if mag < kn[iz]:
            x = np.float64(mag) * wn[iz]
            if neg:
                x = -x
            return x, s0, s1, s2, s3
        if iz == 0:
            while True:
                u1, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
                u2, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
                xt = -math.log(_u01(u1 >> np.uint64(11))) / ZIG_R
                yt = -math.log(_u01(u2 >> np.uint64(11)))
                if yt + yt >= xt * xt:
                    x = ZIG_R + xt
                    if neg:
                        x = -x
                    return x, s0, s1, s2, s3
        else:
            x = np.float64(mag) * wn[iz]
            u2, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
            if fn[iz] + _u01(u2 >> np.uint64(11)) * (fn[iz - 1] - fn[iz]) < math.exp(
                -0.5 * x * x
            ):
                if neg:
                    x = -x
                return x, s0, s1, s2, s3


@njit(cache=True, parallel=True)
def _euler_integrals(seed, n_paths, dt, marker_steps, y0, drift, vol, kn, wn, fn):
    n_mark = marker_steps.shape[0]
    total = marker_steps[n_mark - 1]
    out = np.empty((n_paths, n_mark), dtype=np.float64)
    for p in prange(n_paths):
        s0, s1, s2, s3 = _stream_init(np.uint64(seed), np.uint64(p))
        y = y0
        acc = 0.5 * y * y
        m = 0
        for step in range(1, total + 1):
            z, s0, s1, s2, s3 = _normal(s0, s1, s2, s3, kn, wn, fn)
            y = y + drift + vol * z
            acc += y * y
            if step == marker_steps[m]:
                out[p, m] = dt * (acc - 0.5 * y * y)
                m += 1
    return out


@njit(cache=True)
def _normals_fill(seed, stream, n, kn, wn, fn):
    out = np.empty(n, dtype=np.float64)
    s0, s1, s2, s3 = _stream_init(np.uint64(seed), np.uint64(stream))
    for i in range(n):
        out[i], s0, s1, s2, s3 = _normal(s0, s1, s2, s3, kn, wn, fn)
    return out


def euler_zcb_integrals(
    theta: float,
    sigma: float,
    r0: float,
    horizons,
    dt: float,
    n_paths: int,
    seed: int,
) -> np.ndarray:
    """Trapezoid integrals of r over [0, h] for each horizon h, per path.

    Horizons must be positive multiples of ``dt`` in increasing order.
    Returns an (n_paths, len(horizons)) array; the discount factors are
    exp(-result).
    """
    horizons = np.asarray(horizons, dtype=float)
    if horizons.ndim != 1 or horizons.size == 0:
        raise ValueError("horizons must be a nonempty 1-d sequence")
    if np.any(np.diff(horizons) <= 0.0) or horizons[0] <= 0.0:
        raise ValueError("horizons must be positive and strictly increasing")
    markers = np.rint(horizons / dt).astype(np.int64)
    if not np.allclose(markers * dt, horizons, rtol=0, atol=1e-9):
        raise ValueError("each horizon must be an integer multiple of dt")
    drift = -0.5 * theta * dt
    vol = 0.5 * sigma * math.sqrt(dt)
    return _euler_integrals(
        seed, n_paths, dt, markers, math.sqrt(r0), drift, vol, _KN, _WN, _FN
    )


def kernel_standard_normals(seed: int, n: int, stream: int = 0) -> np.ndarray:
    """Standard normals from the kernel's own RNG, for distribution tests."""
    return _normals_fill(seed, stream, n, _KN, _WN, _FN)
