"""Reference S3 values and the |Im S3(w, w)| diagonal peak for a single-level dot.

Independent of the C++ code: builds the 2x2 Keldysh matrices explicitly and
integrates with scipy's QUADPACK wrapper at 1e-12. Prints the values frozen
into tests/oracle_values.hpp.
"""

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

VERTEX = np.diag([1.0, 0.25]).astype(complex)


def green(w, eps, gamma, kt):
    gr = 1j / (w - eps + 1j * gamma / 2)
    ga = -np.conj(gr)
    occ = np.sign(w) if kt == 0 else np.tanh(w / (2 * kt))
    gk = occ * gamma / (2 * (w - eps) ** 2 + gamma ** 2 / 2)
    return np.array([[gk, gr], [ga, 0]])


def trace(a, w, wp, eps, gamma, kt):
    m = green(a, eps, gamma, kt) @ VERTEX
    m = m @ (green(a + w, eps, gamma, kt) + green(a + wp, eps, gamma, kt)) @ VERTEX
    m = m @ green(a + w + wp, eps, gamma, kt) @ VERTEX
    return np.trace(m)


def s3(w, wp, eps, gamma=1.0, kt=0.0):
    edges = [-np.inf] + sorted({0.0, -w, -wp, -w - wp}) + [np.inf]
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        re, _ = quad(lambda a: trace(a, w, wp, eps, gamma, kt).real, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=1000)
        im, _ = quad(lambda a: trace(a, w, wp, eps, gamma, kt).imag, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=1000)
        total += re + 1j * im
    return -total / (2 * np.pi)


def peak(eps, wmax=3.0, grid=121):
    ws = np.linspace(wmax / grid, wmax, grid)
    vals = [abs(s3(w, w, eps).imag) for w in ws]
    k = int(np.argmax(vals))
    lo, hi = ws[max(k - 1, 0)], ws[min(k + 1, grid - 1)]
    res = minimize_scalar(lambda w: -abs(s3(w, w, eps).imag), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9})
    return res.x, -res.fun


if __name__ == "__main__":
    for w, wp, eps, kt in ((1.0, 1.0, 0.5, 0.0), (1.0, 0.4, 0.5, 0.0), (1.0, 1.0, 0.5, 1.0), (1.0, 1.0, 20.0, 0.0)):
        v = s3(w, wp, eps, kt=kt)
        print(f"s3({w!r}, {wp!r}; eps={eps!r}, kT={kt!r}) = {v.real:.17g} {v.imag:+.17g}i")
    for eps in (1.0, 0.5, 0.2):
        w, v = peak(eps)
        print(f"eps={eps!r}: omega_peak={w:.17g} im_peak={v:.17g}")
