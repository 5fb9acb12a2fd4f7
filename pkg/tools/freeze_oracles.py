"""Recompute the frozen reference values used by the test-suite.

Independent of the package: closed forms and series in 40-digit mpmath, ODEs
with scipy's DOP853 at tight tolerances, and the estimate-and-discriminate
average as a direct 2-D mpmath integral. Needs ``mpmath`` (not a runtime
dependency). Prints the body of a Python dict literal.
"""
from __future__ import annotations

import math

import mpmath as mp
from scipy.integrate import quad, solve_ivp

mp.mp.dps = 40


def helstrom(a2):
    return mp.mpf(1) / 2 * (1 + mp.sqrt(1 - mp.exp(-4 * a2)))


def bound(n, a2):
    mean = (n + 1) * a2
    r2 = (mp.mpf(n - 1) / (n + 1)) ** 2
    s = mp.nsum(lambda m: mp.exp(m * mp.log(mean) - mean - mp.loggamma(m + 1)) * mp.sqrt(1 - r2**m), [1, mp.inf])
    return (1 - s) / 2


def rice_pdf(r, sigma, xc):
    return r / sigma**2 * mp.exp(-(r * r + xc * xc) / (2 * sigma**2)) * mp.besseli(0, r * xc / sigma**2)


def bound_with_prior(n, sigma, xc):
    r2 = (mp.mpf(n - 1) / (n + 1)) ** 2

    def dist(r):
        mean = (n + 1) * r * r
        return mp.nsum(lambda m: mp.exp(-mean) * mean**m / mp.factorial(m) * mp.sqrt(1 - r2**m), [1, mp.inf])

    avg = mp.quad(lambda r: rice_pdf(r, sigma, xc) * dist(r), [0, xc, xc + 12 * sigma])
    return (1 - avg) / 2


def agnostic_terminal(a_true, a_ctrl, n):
    """Propagate under the control for ``a_ctrl``; both ODEs integrated jointly."""

    def f(t, y):
        xc, x = y
        two_theta = math.atan2(math.sqrt(n), (n - 1) * xc)
        dxc = a_ctrl * (math.sqrt((n - 1) ** 2 * xc**2 + n) - (n + 1) * xc)
        dx = a_true * math.sqrt(n) * math.sin(two_theta) - a_true * ((n + 1) - (n - 1) * math.cos(two_theta)) * x
        return [dxc, dx]

    sol = solve_ivp(f, (0, 1), [0.0, 0.0], method="DOP853", rtol=1e-13, atol=1e-15)
    return 0.5 + sol.y[1, -1]


def miscal(beta, alpha):
    a2, b2 = alpha * alpha, beta * beta
    return mp.mpf(1) / 2 + alpha * beta * (1 - mp.exp(-2 * (a2 + b2))) / ((a2 + b2) * mp.sqrt(1 - mp.exp(-4 * b2)))


def eande(alpha, n):
    alpha = mp.mpf(alpha)

    def integrand(r, phi):
        if r < mp.mpf(10) ** -15:
            return mp.mpf(0)  # integrand vanishes linearly at the origin
        br, bi = r * mp.cos(phi), r * mp.sin(phi)
        w = n / mp.pi * mp.exp(-n * ((br - alpha) ** 2 + bi**2))
        a2, b2 = alpha**2, r * r
        ex = alpha * br * (1 - mp.exp(-2 * (a2 + b2))) / ((a2 + b2) * mp.sqrt(1 - mp.exp(-4 * b2)))
        return w * ex * r

    hi = alpha + 9 / mp.sqrt(n)
    return mp.mpf(1) / 2 + mp.quad(integrand, [0, alpha, hi], [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])


def photon_split(alpha, n, m):
    a2 = alpha * alpha
    mean = m * a2
    tot = 0.0
    for k in range(0, 60):
        p = math.exp(k * math.log(mean) - mean - math.lgamma(k + 1))
        tot += p * (agnostic_terminal(a2, k / m, n - m) if k else agnostic_terminal(a2, 0.0, n - m))
    return tot


def heterodyne_split(alpha, n, m):
    nu = math.sqrt(m) * alpha

    def integrand(r):
        dens = 2 * r * math.exp(-((r - nu) ** 2)) * float(mp.besseli(0, 2 * r * nu) * mp.exp(-2 * r * nu))
        return dens * agnostic_terminal(alpha * alpha, r * r / m, n - m)

    val, _ = quad(integrand, 0, nu + 9, epsabs=1e-11, epsrel=1e-11, limit=200, points=[nu])
    return val


if __name__ == "__main__":
    out = {
        "helstrom": {a: float(helstrom(mp.mpf(a) ** 2)) for a in (0.1, 0.25, 0.625, 1.0, 2.0)},
        "bound": {(n, a): float(bound(n, mp.mpf(a) ** 2)) for n in (2, 5, 8, 100) for a in (0.25, 0.625, 1.0)},
        "bound_prior": {(n, s, x): float(bound_with_prior(n, mp.mpf(s), mp.mpf(x))) for n, s, x in ((4, 0.1, 0.5), (8, 0.1, 0.9), (8, 0.3, 0.2))},
        "agnostic": {(n, a): agnostic_terminal(a * a, a * a, n) for n in (2, 8, 16) for a in (0.25, 0.5, 1.0)},
        "agnostic_miscal": {(n, a, c): agnostic_terminal(a * a, c * c, n) for n, a, c in ((8, 0.5, 1.0), (4, 0.625, 0.3))},
        "miscal": {(b, a): float(miscal(mp.mpf(b), mp.mpf(a))) for b, a in ((0.5, 0.25), (0.25, 0.5), (0.625, 0.625))},
        "eande": {(n, a): float(eande(a, n)) for n, a in ((1, 0.625), (4, 0.5), (16, 1.0))},
        "photon_split": {(n, m, a): photon_split(a, n, m) for n, m, a in ((8, 3, 0.5), (4, 2, 1.0))},
        "heterodyne_split": {(n, m, a): heterodyne_split(a, n, m) for n, m, a in ((8, 3, 0.5), (4, 2, 1.0))},
    }
    for key, table in out.items():
        print(f"{key!r}: {{")
        for k, v in table.items():
            print(f"    {k!r}: {float(v)!r},")
        print("},")
