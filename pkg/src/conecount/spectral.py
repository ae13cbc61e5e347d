"""Secondary-term machinery: Mellin transforms of radial indicators, the
spherical-harmonic weight factors, and the quadratic form M on separable
functions.

A separable function is rho(y) * phi(direction) in the cone coordinates
v = y^{-1}(alpha, 1), with rho an indicator of finitely many intervals in y
and phi either the full sphere or a zonal cap.  For such functions
M(s) = rho1^(s) rho2^(s) * sum_d P_d(s) <phi1_d, phi2_d>, where phi_d is the
degree-d harmonic component.  Zonal components are Gegenbauer coefficients of
the colatitude profile; the production path integrates them with fixed-order
Gauss-Legendre quadrature and the closed-form antiderivative is kept as an
independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import geometry


class SpectralError(ValueError):
    pass


def mellin(intervals, s):
    """Mellin transform at s of the indicator of a union of y-intervals:
    integral of y^{-(s+1)} equals sum (a^{-s} - b^{-s}) / s."""
    if s == 0:
        raise SpectralError("Mellin transform pole at s = 0")
    total = 0.0 + 0.0j if isinstance(s, complex) else 0.0
    for a, b in intervals:
        if not 0 < a < b:
            raise SpectralError("intervals must satisfy 0 < a < b")
        upper = 0.0 if math.isinf(b) else b ** (-s)
        total += (a ** (-s) - upper) / s
    return total


def p_d(n: int, d: int, s):
    """Weight of the degree-d harmonic sector: product of (n-s+i)/(s+i)."""
    if d == 0:
        return 1.0
    val = 1.0 + 0.0j if isinstance(s, complex) else 1.0
    for i in range(d):
        denom = s + i
        if denom == 0:
            raise SpectralError("pole of the harmonic weight at s = %r" % s)
        val *= (n - s + i) / denom
    return val


def harmonic_dim(n: int, d: int) -> int:
    """Dimension of the degree-d harmonic space on the n-sphere."""
    if d == 0:
        return 1
    lower = math.comb(n + d - 2, d - 2) if d >= 2 else 0
    return math.comb(n + d, d) - lower


def _weight_normalization(n: int) -> float:
    """Total mass of (1-t^2)^{(n-2)/2} on [-1, 1]."""
    return math.sqrt(math.pi) * math.gamma(n / 2) / math.gamma((n + 1) / 2)


def _gegenbauer_at_one(d: int, lam: float) -> float:
    return math.exp(
        special.gammaln(d + 2 * lam) - special.gammaln(2 * lam) - special.gammaln(d + 1)
    )


def zonal_profile(n: int, d, t):
    """Degree-d zonal profile normalized to 1 at t = 1 (Chebyshev for n = 1)."""
    d = np.asarray(d)
    t = np.asarray(t, dtype=float)
    if n == 1:
        return np.cos(d * np.arccos(np.clip(t, -1.0, 1.0)))
    lam = (n - 1) / 2.0
    norm = np.vectorize(lambda dd: _gegenbauer_at_one(int(dd), lam))(d)
    return special.eval_gegenbauer(d, lam, t) / norm


def cap_coefficients_quadrature(n: int, r: float, d_max: int, nodes: int = 512) -> np.ndarray:
    """Zonal coefficients of the radius-r cap indicator for d = 0..d_max.

    c_d integrates the normalized zonal profile against the latitude weight
    over the cap; written in colatitude the integrand sin^{n-1} is smooth, so
    fixed-order Gauss-Legendre converges for every n.
    """
    t0 = max(1.0 - r * r / 2.0, -1.0)
    theta0 = math.acos(t0)
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * (x + 1.0) * theta0
    scale = 0.5 * theta0
    weight = np.sin(theta) ** (n - 1)
    z = _weight_normalization(n)
    t = np.cos(theta)
    vals = np.empty(d_max + 1)
    for d in range(d_max + 1):
        prof = zonal_profile(n, d, t)
        vals[d] = scale * float(np.sum(w * weight * prof)) / z
    return vals


def cap_coefficients_closed(n: int, r: float, d_max: int) -> np.ndarray:
    """Closed-form oracle for the same coefficients.

    Uses the antiderivative of the Gegenbauer weight pairing for n >= 2 and
    the arc Fourier coefficients for n = 1.
    """
    t0 = max(1.0 - r * r / 2.0, -1.0)
    out = np.empty(d_max + 1)
    out[0] = geometry.cap_measure_exact(n, min(r, 2.0))
    if d_max == 0:
        return out
    ds = np.arange(1, d_max + 1)
    if n == 1:
        theta0 = math.acos(t0)
        out[1:] = np.sin(ds * theta0) / (ds * math.pi)
        return out
    lam = (n - 1) / 2.0
    z = _weight_normalization(n)
    sub = special.eval_gegenbauer(ds - 1, lam + 1.0, t0)
    norms = np.array([_gegenbauer_at_one(int(d), lam) for d in ds])
    integral = (2 * lam / (ds * (ds + 2 * lam))) * (1.0 - t0 * t0) ** (lam + 0.5) * sub
    out[1:] = integral / (norms * z)
    return out


def cap_component_norms(n: int, r: float, d_max: int, method: str = "quadrature") -> np.ndarray:
    """Squared L2 norms of the harmonic components of a cap indicator."""
    if method == "quadrature":
        coeffs = cap_coefficients_quadrature(n, r, d_max)
    elif method == "closed":
        coeffs = cap_coefficients_closed(n, r, d_max)
    else:
        raise SpectralError(f"unknown coefficient method {method!r}")
    dims = np.array([harmonic_dim(n, int(d)) for d in range(d_max + 1)], dtype=float)
    return dims * coeffs**2


@dataclass(frozen=True)
class SeparableFunction:
    """Indicator rho(y) * phi(direction) with zonal phi (cap or full sphere)."""

    n: int
    intervals: tuple  # ((a, b), ...) in the y variable
    cap_r: float | None = None  # None means the full sphere

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple((float(a), float(b)) for a, b in self.intervals))
        for a, b in self.intervals:
            if not 0 < a < b:
                raise SpectralError("radial intervals must satisfy 0 < a < b")

    def radial_mellin(self, s):
        return mellin(self.intervals, s)

    def spherical_l2(self) -> float:
        """||phi||_2^2; equals the cap measure for an indicator."""
        if self.cap_r is None:
            return 1.0
        return geometry.cap_measure_exact(self.n, min(self.cap_r, 2.0))

    def cone_measure(self) -> float:
        return float(self.radial_mellin(self.n)) * self.spherical_l2()

    def scaled(self, lam: float) -> "SeparableFunction":
        """The dilation v -> f(v / lam); radial y-intervals shrink by lam."""
        if lam <= 0:
            raise SpectralError("scaling factor must be positive")
        return SeparableFunction(
            n=self.n,
            intervals=tuple((a / lam, b / lam) for a, b in self.intervals),
            cap_r=self.cap_r,
        )


def m_ff(
    f: SeparableFunction,
    f2: SeparableFunction,
    s: float,
    d_max: int = 64,
    method: str = "quadrature",
):
    """The secondary-term quadratic form M(f, f2)(s) for zonal separable
    functions about a common pole, together with a truncation tail bound.

    Returns (value, tail_bound).  Requires real s in (n/2, n), where the
    harmonic weights are positive and decreasing in the degree, so the tail is
    bounded by P_{d_max+1}(s) times the remaining component mass.
    """
    if f.n != f2.n:
        raise SpectralError("separated functions live on different spheres")
    n = f.n
    if not n / 2 < s < n:
        raise SpectralError("need real s strictly between n/2 and n")
    radial = float(f.radial_mellin(s)) * float(f2.radial_mellin(s))
    if f.cap_r is None or f2.cap_r is None:
        # the constant function has no higher harmonics
        sphere = f.spherical_l2() if f.cap_r is None else f2.spherical_l2()
        if f.cap_r is None and f2.cap_r is None:
            sphere = 1.0
        else:
            cap = f if f.cap_r is not None else f2
            sphere = cap.spherical_l2()  # <phi_0, 1> = cap measure
        return radial * sphere, 0.0

    if method == "quadrature":
        c1 = cap_coefficients_quadrature(n, f.cap_r, d_max)
        c2 = c1 if f2.cap_r == f.cap_r else cap_coefficients_quadrature(n, f2.cap_r, d_max)
    else:
        c1 = cap_coefficients_closed(n, f.cap_r, d_max)
        c2 = c1 if f2.cap_r == f.cap_r else cap_coefficients_closed(n, f2.cap_r, d_max)
    dims = np.array([harmonic_dim(n, d) for d in range(d_max + 1)], dtype=float)
    weights = np.array([float(p_d(n, d, s)) for d in range(d_max + 1)])
    series = float(np.sum(weights * dims * c1 * c2))

    def deficiency(func, coeffs):
        return max(func.spherical_l2() - float(np.sum(dims * coeffs**2)), 0.0)

    tail = float(p_d(n, d_max + 1, s)) * math.sqrt(deficiency(f, c1) * deficiency(f2, c2))
    return radial * series, abs(radial) * tail
