"""Polar coordinates on the standard light cone, region types and measures.

Points of the positive cone of the standard form are written v = r (alpha, 1)
with r = v_{n+2} > 0 and alpha a unit vector; the invariant measure is
r^{n-1} dr dsigma_n(alpha).  Caps use the chordal radius throughout: the cap of
radius r about alpha is { ||alpha' - alpha|| < r }, equivalently
<alpha', alpha> > 1 - r^2/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special


_GUARD = 1e-12


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class PolarPoint:
    r: float
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))


def to_polar(v) -> PolarPoint:
    """Polar coordinates (r, alpha) of a point on the standard positive cone."""
    v = np.asarray(v, dtype=float)
    r = v[-1]
    if r <= 0:
        raise RegionError("point is not on the positive sheet")
    qval = float(np.dot(v[:-1], v[:-1]) - r * r)
    if abs(qval) > 1e-9 * float(np.dot(v, v)):
        raise RegionError("point is not on the light cone")
    return PolarPoint(r=float(r), alpha=v[:-1] / r)


def from_polar(p: PolarPoint) -> np.ndarray:
    return p.r * np.append(p.alpha, 1.0)


def c_cap(n: int) -> float:
    """Leading cap-measure constant: sigma_n(D_r) = c_cap(n) r^n + O(r^{n+2})."""
    return math.gamma((n + 3) / 2) / (math.sqrt(math.pi) * (n + 1) * math.gamma((n + 2) / 2))


def cap_measure_exact(n: int, r: float) -> float:
    """Normalized measure of a chordal-radius-r cap on S^n.

    With colatitude theta = arccos(1 - r^2/2), the cap measure is the
    normalized surface integral int_0^theta sin^{n-1}, which evaluates to
    I_{sin^2 theta}(n/2, 1/2) / 2 for theta <= pi/2 and its reflection beyond.
    Validated against Monte Carlo sampling in the test suite.
    """
    if r <= 0:
        raise RegionError("cap radius must be positive")
    if r >= 2:
        return 1.0
    t0 = 1.0 - r * r / 2.0  # cos(theta)
    x = r * r * (1.0 - r * r / 4.0)  # sin^2(theta), no cancellation
    half = 0.5 * float(special.betainc(n / 2.0, 0.5, x))
    return half if t0 >= 0 else 1.0 - half


def cap_measure_leading(n: int, r: float) -> float:
    return c_cap(n) * r**n


def cap_measure_mc(n: int, r: float, samples: int, seed: int = 0) -> float:
    """Monte Carlo oracle for the cap measure (Gaussian direction sampling)."""
    rng = np.random.Generator(np.random.Philox(seed))
    thresh = 1.0 - r * r / 2.0
    hits = 0
    chunk = 10**6
    left = samples
    while left > 0:
        size = min(chunk, left)
        g = rng.standard_normal((size, n + 1))
        first = g[:, 0] / np.linalg.norm(g, axis=1)
        hits += int(np.count_nonzero(first > thresh))
        left -= size
    return hits / samples


def sector_measure(n: int, T: float, r: float, mode: str = "exact") -> float:
    """Invariant measure of the sector of height T over a radius-r cap."""
    if T <= 0:
        return 0.0
    cap = cap_measure_exact(n, r) if mode == "exact" else cap_measure_leading(n, r)
    return T**n / n * cap


# ---------------------------------------------------------------------------
# approximating functions psi


class Psi:
    """Base for the decreasing approximation-function families."""

    knots = ()

    def __call__(self, t):
        raise NotImplementedError

    def value_exact(self, q: int):
        """Exact rational value at an integer height, or None."""
        return None

    def scaled(self, factor: float, stretch: float) -> "ScaledPsi":
        """psi'(t) = factor * psi(t / stretch), used by the inclusion tests."""
        return ScaledPsi(self, factor, stretch)


class ConstantPsi(Psi):
    def __init__(self, c):
        if c <= 0:
            raise RegionError("constant psi must be positive")
        self.c = c

    def __call__(self, t):
        return float(self.c) if np.isscalar(t) else np.full(np.shape(t), float(self.c))

    def value_exact(self, q: int):
        return Fraction(self.c) if isinstance(self.c, (int, Fraction)) else None

    def __repr__(self):
        return f"ConstantPsi({self.c})"


class PowerPsi(Psi):
    """psi(t) = c * t^(-lam), decreasing for lam >= 0."""

    def __init__(self, c, lam):
        if c <= 0 or lam < 0:
            raise RegionError("power psi needs c > 0 and lam >= 0")
        self.c = c
        self.lam = lam

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = float(self.c) * t ** (-float(self.lam))
        return float(out) if out.ndim == 0 else out

    def value_exact(self, q: int):
        if isinstance(self.c, (int, Fraction)) and isinstance(self.lam, int):
            return Fraction(self.c) / Fraction(q) ** self.lam
        return None

    def __repr__(self):
        return f"PowerPsi(c={self.c}, lam={self.lam})"


class LogPowerPsi(Psi):
    """psi(t) = (log t)^lam / t for t >= e^lam, held constant before that.

    The raw expression increases below t = e^lam, so it is clamped there to
    keep the family decreasing and positive on [0, inf).
    """

    def __init__(self, lam):
        if lam <= 0:
            raise RegionError("log-power psi needs lam > 0")
        self.lam = float(lam)
        self.t0 = math.exp(self.lam)
        self.knots = (self.t0,)

    def __call__(self, t):
        t = np.maximum(np.asarray(t, dtype=float), self.t0)
        out = np.log(t) ** self.lam / t
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return f"LogPowerPsi(lam={self.lam})"


class ScaledPsi(Psi):
    def __init__(self, base: Psi, factor: float, stretch: float):
        self.base = base
        self.factor = float(factor)
        self.stretch = float(stretch)
        self.knots = tuple(k * self.stretch for k in base.knots)

    def __call__(self, t):
        return self.factor * self.base(np.asarray(t, dtype=float) / self.stretch)

    def __repr__(self):
        return f"ScaledPsi({self.base!r}, {self.factor}, {self.stretch})"


def parse_psi(spec: str) -> Psi:
    """Parse psi specs like "pow:c=1,lambda=0.8", "const:c=0.5", "logpow:lambda=2"."""
    kind, _, rest = spec.partition(":")
    params = {}
    for item in rest.split(","):
        if item:
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
    if kind == "pow":
        return PowerPsi(params.get("c", 1.0), params.get("lambda", 1.0))
    if kind == "const":
        return ConstantPsi(params.get("c", 1.0))
    if kind == "logpow":
        return LogPowerPsi(params.get("lambda", 1.0))
    raise RegionError(f"unknown psi family: {spec!r}")


def region_measure(psi: Psi, n: int, T: float, mode: str = "quadrature") -> float:
    """Invariant measure of the approximation region of height T for psi.

    quadrature: integral of sigma_n(D_psi(t)) t^{n-1} dt over (0, T) to 1e-8
    relative tolerance.  leading: c_cap(n) * integral of t^{n-1} psi(t)^n.
    Heights below 1 use psi(1) (the continuous extension matching the
    discrete sums, which keeps power-law families integrable at 0).
    """
    if T <= 0:
        return 0.0
    pts = [1.0] + [k for k in psi.knots if 0 < k < T]
    pts = [p for p in pts if p < T]
    if mode == "quadrature":
        def integrand(t):
            return cap_measure_exact(n, min(float(psi(max(t, 1.0))), 2.0)) * t ** (n - 1)
    elif mode == "leading":
        def integrand(t):
            return float(psi(max(t, 1.0))) ** n * t ** (n - 1)
    else:
        raise RegionError(f"unknown region_measure mode {mode!r}")
    val, _ = integrate.quad(integrand, 0.0, T, epsrel=1e-8, limit=400, points=pts or None)
    return val if mode == "quadrature" else c_cap(n) * val


# ---------------------------------------------------------------------------
# region types and membership


def _strictly_less(lhs, rhs) -> bool:
    """Strict comparison; exact for rationals, guarded against float boundary."""
    if isinstance(lhs, Fraction) and isinstance(rhs, Fraction):
        return lhs < rhs
    scale = max(1.0, abs(float(rhs)))
    return float(lhs) < float(rhs) - _GUARD * scale


def _all_rational(values) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in values)


@dataclass(frozen=True)
class SphericalCap:
    """Open chordal cap { alpha' in S^n : ||alpha' - alpha|| < r }."""

    center: tuple
    r: object  # float or Fraction

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(self.center))

    @property
    def n(self) -> int:
        return len(self.center) - 1

    def contains_direction(self, u) -> bool:
        exact = _all_rational(u) and _all_rational(self.center) and isinstance(self.r, (int, Fraction))
        if exact:
            d2 = sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(u, self.center))
            return d2 < Fraction(self.r) ** 2
        uu = np.asarray(u, dtype=float)
        cc = np.asarray(self.center, dtype=float)
        return _strictly_less(float(np.dot(uu - cc, uu - cc)), float(self.r) ** 2)

    def measure(self) -> float:
        return cap_measure_exact(self.n, float(self.r))


@dataclass(frozen=True)
class Sector:
    """Cone points of height below T whose direction lies in a cap."""

    T: object
    cap: SphericalCap

    def contains_point(self, v) -> bool:
        last = v[-1]
        if isinstance(last, (int, Fraction)) and isinstance(self.T, (int, Fraction)):
            if not 0 < last < self.T:
                return False
        elif not 0 < float(last) < float(self.T):
            return False
        if _all_rational(v) and _all_rational(self.cap.center) and isinstance(self.cap.r, (int, Fraction)):
            u = [Fraction(x) / Fraction(last) for x in v[:-1]]
            return self.cap.contains_direction(u)
        u = np.asarray(v[:-1], dtype=float) / float(last)
        return self.cap.contains_direction(u)

    def measure(self) -> float:
        n = self.cap.n
        return sector_measure(n, float(self.T), float(self.cap.r), mode="exact")


@dataclass(frozen=True)
class ApproxRegion:
    """Cone points close to e0: ||e0 - v/v_last|| < psi(v_last), 0 < v_last < T.

    Membership is tested through the equivalent algebraic form
    2 (v_1 + v_last) < v_last * psi(v_last)^2, which needs no square root.
    """

    psi: Psi
    T: object

    def contains_point(self, v) -> bool:
        last = v[-1]
        if isinstance(last, (int, Fraction)) and isinstance(self.T, (int, Fraction)):
            if not (0 < last and last < self.T):
                return False
        else:
            if not 0 < float(last) < float(self.T):
                return False
        exact_psi = self.psi.value_exact(last) if isinstance(last, int) else None
        if exact_psi is not None and _all_rational(v):
            return 2 * (Fraction(v[0]) + last) < last * exact_psi**2
        lastf = float(last)
        lhs = 2.0 * (float(v[0]) + lastf)
        rhs = lastf * float(self.psi(lastf)) ** 2
        return _strictly_less(lhs, rhs)

    def contains_point_normform(self, v) -> bool:
        """Direct norm-form membership; equivalent to contains_point."""
        v = np.asarray(v, dtype=float)
        last = v[-1]
        if not 0 < last < float(self.T):
            return False
        e0 = np.zeros(len(v))
        e0[0] = -1.0
        e0[-1] = 1.0
        return _strictly_less(float(np.linalg.norm(e0 - v / last)), float(self.psi(last)))

    def measure(self, n: int, mode: str = "quadrature") -> float:
        return region_measure(self.psi, n, float(self.T), mode=mode)


@dataclass(frozen=True)
class GeneralizedSector:
    """Product region: radial indicator (in the y = 1/v_last variable) times a
    spherical indicator given by caps or cap complements."""

    intervals: tuple  # ((a, b), ...) in the y variable, a > 0, b may be inf
    caps: tuple  # ((SphericalCap, keep_inside: bool), ...), OR over items
    full_sphere: bool = False

    def __post_init__(self):
        for a, b in self.intervals:
            if not (0 < a < b):
                raise RegionError("radial intervals must satisfy 0 < a < b")

    def contains_point(self, v) -> bool:
        last = float(v[-1])
        if last <= 0:
            return False
        y = 1.0 / last
        if not any(a < y < b for a, b in self.intervals):
            return False
        if self.full_sphere:
            return True
        u = np.asarray(v[:-1], dtype=float) / last
        return any(cap.contains_direction(u) == keep for cap, keep in self.caps)

    def radial_mellin(self, s):
        """Mellin transform of the radial indicator at s (integral of y^{-s-1})."""
        total = 0
        for a, b in self.intervals:
            upper = 0.0 if math.isinf(b) else b ** (-s)
            total += (a ** (-s) - upper) / s
        return total

    def spherical_measure(self, rng=None, samples: int = 0) -> float:
        if self.full_sphere:
            return 1.0
        if len(self.caps) == 1:
            cap, keep = self.caps[0]
            m = cap.measure()
            return m if keep else 1.0 - m
        if rng is None or samples <= 0:
            raise RegionError("multi-cap spherical measure needs Monte Carlo samples")
        n = self.caps[0][0].n
        g = rng.standard_normal((samples, n + 1))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
        hits = 0
        for row in u:
            if any(cap.contains_direction(row) == keep for cap, keep in self.caps):
                hits += 1
        return hits / samples

    def measure(self, n: int, **kw) -> float:
        """Invariant cone measure: radial_mellin(n) * spherical measure."""
        return float(self.radial_mellin(n)) * self.spherical_measure(**kw)


def contains(region, v) -> bool:
    """Membership test for any region type; accepts vectors or PolarPoints."""
    if isinstance(v, PolarPoint):
        v = from_polar(v)
    if isinstance(region, SphericalCap):
        return region.contains_direction(v)
    return region.contains_point(tuple(v) if not isinstance(v, np.ndarray) else v)


def parse_region(spec: str):
    """Parse region specs: "cap:<r>@<alpha csv>", "sector:<T>,<r>@<alpha csv>",
    "region:psi=<family:params>,T=<T>"."""
    kind, _, rest = spec.partition(":")
    if kind == "cap":
        rpart, _, alpha = rest.partition("@")
        center = _parse_alpha(alpha)
        return SphericalCap(center=center, r=float(Fraction(rpart)))
    if kind == "sector":
        params, _, alpha = rest.partition("@")
        tpart, _, rpart = params.partition(",")
        center = _parse_alpha(alpha)
        return Sector(T=float(Fraction(tpart)), cap=SphericalCap(center=center, r=float(Fraction(rpart))))
    if kind == "region":
        # psi params may themselves contain commas, so pull out the T=... item
        items = rest.split(",")
        t_items = [it for it in items if it.startswith("T=")]
        if len(t_items) != 1:
            raise RegionError("region spec needs exactly one T=<T>")
        T = float(Fraction(t_items[0][2:]))
        psi_text = ",".join(it for it in items if not it.startswith("T="))
        if not psi_text.startswith("psi="):
            raise RegionError("region spec needs psi=<family:params>")
        return ApproxRegion(psi=parse_psi(psi_text[4:]), T=T)
    raise RegionError(f"unknown region spec: {spec!r}")


def _parse_alpha(text: str):
    """Comma separated rationals, normalized to a unit vector (floats)."""
    parts = [Fraction(x) for x in text.split(",") if x.strip()]
    vec = np.array([float(x) for x in parts])
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise RegionError("alpha must be nonzero")
    return tuple(vec / norm)
