"""Independent reference computations used to check the package.

Nothing here imports the solver paths under test: currents come from plain
bisection with the saturation current re-derived from the datasheet values.
"""

import math

K_B = 1.380649e-23
Q_E = 1.602176634e-19


def diode_constants(g, t, p):
    a = p.n_series * p.ideality * K_B * (t + 273.15) / Q_E
    voc_t = p.voc_n + p.kv * (t - 25.0)
    isc_t = max(p.isc_n + p.ki * (t - 25.0), 0.0)
    i0 = (isc_t - voc_t / p.r_sh) / math.expm1(voc_t / a)
    return isc_t * g / 1000.0, i0, a


def bisect_current(v, g, t, p):
    iph, i0, a = diode_constants(g, t, p)

    def f(i):
        vd = v + i * p.r_s
        return iph - i0 * math.expm1(vd / a) - vd / p.r_sh - i

    lo, hi = -10 * p.isc_n, 2 * p.isc_n
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_voc(g, t, p):
    lo, hi = 0.0, 2 * p.voc_n
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if bisect_current(mid, g, t, p) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def brute_force_mpp(g, t, p, n=4001):
    """Dense-grid maximum of v*I(v) over [0, Voc]; returns (v, i, power, voc)."""
    voc = bisect_voc(g, t, p)
    best = (0.0, 0.0, -1.0)
    for k in range(n):
        v = voc * k / (n - 1)
        i = bisect_current(v, g, t, p)
        if v * i > best[2]:
            best = (v, i, v * i)
    return (*best, voc)


def square_wave_thd_series(n_harmonics=None, terms=2_000_000):
    """THD (%) of an ideal square wave from its 4/(pi*h) odd-harmonic series.

    Harmonic h has relative amplitude 1/h, so THD = sqrt(sum 1/h^2) over odd
    h >= 3, truncated at ``n_harmonics`` when given.
    """
    top = n_harmonics if n_harmonics is not None else 2 * terms + 1
    s = math.fsum(1.0 / h**2 for h in range(3, top + 1, 2))
    return 100.0 * math.sqrt(s)
