"""Independent reference computations used to freeze expected test values.

Everything here is derived by hand from the defining integrals and
implemented with plain closed forms or brute-force Riemann sums, without
importing the package, so agreement with the package is evidence rather than
tautology.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, sici


# ---------------------------------------------------------------------------
# per-axis frequency integral, Laplace reciprocal, flat taper


def axis_j_closed(delta: float, h: float, lam: float) -> float:
    """J(delta) = int_{-1}^{1} exp(-i w delta/h) (1 + w^2/(lam^2 h^2)) dw.

    Evenness gives the cosine form; antiderivatives:
    int cos(wc) dw = sin(wc)/c and
    int w^2 cos(wc) dw = ((w^2 c^2 - 2) sin(wc) + 2 wc cos(wc)) / c^3.
    """
    c = delta / h
    if abs(c) < 1e-12:
        return 2.0 + 2.0 / (3.0 * lam * lam * h * h)
    base = 2.0 * math.sin(c) / c
    quad = 2.0 * ((c * c - 2.0) * math.sin(c) + 2.0 * c * math.cos(c)) / c ** 3
    return base + quad / (lam * lam * h * h)


def axis_j_riemann(delta: float, h: float, lam: float,
                   measure_mass: float | None = None,
                   points: int = 400001) -> float:
    """Brute midpoint rule for the same integral, optionally with the flat
    measure transform factor 2 sin(w/h)/(w/h) (mass 2) or its normalized
    variant (mass 1) inserted."""
    w = np.linspace(-1.0, 1.0, points)
    dw = w[1] - w[0]
    mid = 0.5 * (w[:-1] + w[1:])
    vals = np.cos(mid * delta / h) * (1.0 + mid * mid / (lam * lam * h * h))
    if measure_mass is not None:
        y = mid / h
        ell = 2.0 * np.sinc(y / np.pi)
        vals = vals * ell * (measure_mass / 2.0)
    return float(np.sum(vals) * dw)


# ---------------------------------------------------------------------------
# closed-form suite (lam = 1 unless stated)


def band_integral_plain(h: float, lam: float = 1.0) -> float:
    """int_{-1}^{1} (1 + w^2/(lam h)^2) dw = 2 + 2/(3 lam^2 h^2)."""
    return 2.0 + 2.0 / (3.0 * lam * lam * h * h)


def band_integral_squared(h: float, lam: float = 1.0) -> float:
    """int_{-1}^{1} (1 + w^2/(lam h)^2)^2 dw."""
    u = 1.0 / (lam * lam * h * h)
    return 2.0 + 4.0 * u / 3.0 + 2.0 * u * u / 5.0


def band_integral_weighted(h: float) -> float:
    """int_{-1}^{1} (2 sin(w/h)/(w/h))^2 (1 + w^2/h^2)^2 dw, lam = 1.

    With U = 1/h and y = w/h: 8h int_0^U sin^2(y) (y^2 + 2 + y^{-2}) dy,
    evaluated with int_0^U sin^2(y)/y^2 dy = Si(2U) - sin^2(U)/U.
    """
    u = 1.0 / h
    si2u, _ = sici(2.0 * u)
    s2u = math.sin(2.0 * u)
    total = (u ** 3 / 6.0 - u * u * s2u / 4.0 - u * math.cos(2.0 * u) / 4.0
             + s2u / 8.0 + u - s2u / 2.0 - math.sin(u) ** 2 / u + si2u)
    return 8.0 * h * total


def suite_values(h: float) -> dict:
    """The four 2-D frequency integrals at lam = 1 with their leading terms."""
    f1 = band_integral_weighted(h)
    return {
        "int1": band_integral_plain(h) ** 2,
        "int2": band_integral_squared(h) ** 2,
        "int3": f1 * band_integral_squared(h),
        "int4": f1 * f1,
        "int3_leading": 8.0 / (15.0 * h ** 6),
        "int4_leading": 16.0 / (9.0 * h ** 4),
    }


# ---------------------------------------------------------------------------
# forward convolution closed forms (Laplace kernel, density lam/2 e^{-lam|x|})


def laplace_conv_gauss(z, lam: float, scale: float, rate: float,
                       center: float):
    """(Laplace(lam) conv scale * exp(-rate (x - center)^2))(z).

    Splitting e^{-lam|s|} at s = 0 and completing the square gives two erfc
    terms; sr = sqrt(rate).
    """
    z = np.asarray(z, dtype=float)
    a = z - center
    sr = math.sqrt(rate)
    lead = scale * (lam / 4.0) * math.sqrt(math.pi / rate)
    shift = lam * lam / (4.0 * rate)
    up = np.exp(lam * a + shift) * erfc(sr * a + lam / (2.0 * sr))
    down = np.exp(-lam * a + shift) * erfc(-sr * a + lam / (2.0 * sr))
    return lead * (up + down)


def laplace_conv_absexp(z, lam: float, scale: float, rate: float,
                        center: float):
    """(Laplace(lam) conv scale * exp(-rate |x - center|))(z), rate != lam."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z - center)
    mu = rate
    return scale * lam * (lam * np.exp(-mu * a) - mu * np.exp(-lam * a)) / (
        lam * lam - mu * mu)


def conv_riemann(z: float, lam: float, component, lo: float = -40.0,
                 hi: float = 40.0, points: int = 2000001) -> float:
    """Brute midpoint (psi * component)(z) for cross-checking closed forms."""
    t = np.linspace(lo, hi, points)
    mid = 0.5 * (t[:-1] + t[1:])
    psi = 0.5 * lam * np.exp(-lam * np.abs(z - mid))
    return float(np.sum(psi * component(mid)) * (t[1] - t[0]))


# ---------------------------------------------------------------------------
# moving-average noise covariance


def ma_seq_autocov(beta: tuple, sigma2: float) -> np.ndarray:
    """gamma(l) = sigma2 * sum_i c_i c_{i+l} for c = (1, beta...)."""
    c = np.array([1.0, *beta])
    q = c.size - 1
    out = np.zeros(q + 1)
    for lag in range(q + 1):
        out[lag] = sigma2 * float(np.dot(c[: c.size - lag], c[lag:]))
    return out


def ma_lattice_variance(coeffs: np.ndarray, sigma2: float) -> float:
    return float(sigma2 * np.sum(np.square(np.asarray(coeffs, dtype=float))))


def exact_linear_variance(weights: np.ndarray, coeffs: np.ndarray,
                          sigma2: float) -> float:
    """Var(sum_k w_k eps_k) by the literal double sum over observation pairs.

    eps on the lattice is eps_k = sum_r B_r Z_{k-r}; Cov(eps_k, eps_m) =
    sigma2 sum_r B_r B_{r+(k-m)}. Quadratic cost; use at tiny sizes only.
    """
    w = np.asarray(weights, dtype=float)
    b = np.asarray(coeffs, dtype=float)
    q = (b.shape[0] - 1) // 2
    idx = list(np.ndindex(w.shape))
    total = 0.0
    for k in idx:
        for m in idx:
            lag = tuple(a - c for a, c in zip(k, m))
            if any(abs(l) > 2 * q for l in lag):
                continue
            cov = 0.0
            for r in np.ndindex(b.shape):
                rplus = tuple(a + l for a, l in zip(r, lag))
                if all(0 <= t < s for t, s in zip(rplus, b.shape)):
                    cov += b[r] * b[rplus]
            total += w[k] * w[m] * cov
    return sigma2 * total


# ---------------------------------------------------------------------------
# cumulant references


def kstats_reference(x: np.ndarray) -> tuple:
    """Unbiased k-statistics k1..k4 from power sums (textbook formulas)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    s1 = float(np.sum(x))
    s2 = float(np.sum(x ** 2))
    s3 = float(np.sum(x ** 3))
    s4 = float(np.sum(x ** 4))
    k1 = s1 / n
    k2 = (n * s2 - s1 ** 2) / (n * (n - 1))
    k3 = (2 * s1 ** 3 - 3 * n * s1 * s2 + n * n * s3) / (n * (n - 1) * (n - 2))
    k4 = ((-6 * s1 ** 4 + 12 * n * s1 ** 2 * s2 - 3 * n * (n - 1) * s2 ** 2
           - 4 * n * (n + 1) * s1 * s3 + n * n * (n + 1) * s4)
          / (n * (n - 1) * (n - 2) * (n - 3)))
    return k1, k2, k3, k4
