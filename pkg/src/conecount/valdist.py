"""Value distribution of linear maps and homogeneous forms at cone points.

Every map in scope factors through the classification shape
v -> ((v g) tau) L0 h with g an isometry, L0 the projection onto the first m
coordinates and h invertible, so counting reduces to vectorized membership of
the mapped points and the measure predictions reduce to the constants
c_{n,m}, V_L and V_F computed here.  Monte Carlo sub-cone volumes carry their
standard errors so checks can be stated in sigma units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .counting import CountReport
from .group import GroupElement, identity


class ValDistError(ValueError):
    pass


def _beta(a: float, b: float) -> float:
    return math.gamma(a) * math.gamma(b) / math.gamma(a + b)


def c_nm(n: int, m: int) -> float:
    """Leading constant of the sub-cone slice volume for rank-m maps."""
    if not 1 <= m < n:
        raise ValDistError("need 1 <= m < n")
    return (
        (n - m + 1)
        * math.gamma((n + 3) / 2)
        / ((n + 1) * math.pi ** (m / 2) * math.gamma((n - m + 3) / 2))
    )


@dataclass(frozen=True)
class Box:
    """Axis box in R^m (finite union handled by passing several boxes)."""

    bounds: tuple  # ((lo, hi), ...)

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        for a, b in self.bounds:
            if not a < b:
                raise ValDistError("box needs lo < hi in every coordinate")

    @property
    def m(self) -> int:
        return len(self.bounds)

    def volume(self) -> float:
        out = 1.0
        for a, b in self.bounds:
            out *= b - a
        return out

    def contains_batch(self, W: np.ndarray) -> np.ndarray:
        mask = np.ones(W.shape[0], dtype=bool)
        for j, (a, b) in enumerate(self.bounds):
            mask &= (W[:, j] > a) & (W[:, j] < b)
        return mask


def _projection(n: int, m: int) -> np.ndarray:
    P = np.zeros((n + 2, m))
    P[:m, :m] = np.eye(m)
    return P


@dataclass(frozen=True)
class LinearMapOnCone:
    """Rank-m linear map v -> ((v g) tau) L0 h on R^{n+2}."""

    n: int
    m: int
    g: GroupElement
    h: np.ndarray
    tau: Optional[np.ndarray] = None
    raw_matrix: Optional[np.ndarray] = None  # overrides the composite when set

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if abs(np.linalg.det(self.h)) < 1e-12:
            raise ValDistError("h must be invertible")

    @classmethod
    def from_classification(cls, n, m, g=None, h=None, tau=None) -> "LinearMapOnCone":
        g = g if g is not None else identity(n)
        h = np.asarray(h, dtype=float) if h is not None else np.eye(m)
        return cls(n=n, m=m, g=g, h=h, tau=tau)

    @classmethod
    def from_matrix(cls, n, m, matrix) -> "LinearMapOnCone":
        """A raw (n+2) x m map; used for maps outside the classification shape
        (e.g. the definite-kernel projections, whose counts stay bounded)."""
        mat = np.asarray(matrix, dtype=float)
        return cls(n=n, m=m, g=identity(n), h=np.eye(m), raw_matrix=mat)

    def matrix(self) -> np.ndarray:
        if self.raw_matrix is not None:
            return self.raw_matrix
        tau = self.tau if self.tau is not None else np.eye(self.n + 2)
        return self.g.mat @ tau @ _projection(self.n, self.m) @ self.h

    def det_h(self) -> float:
        return float(abs(np.linalg.det(self.h)))

    def kernel_form_eigenvalues(self, J_float: np.ndarray) -> np.ndarray:
        """Eigenvalues of the ambient form restricted to ker(map)."""
        mat = self.matrix()
        # left kernel of the map: null space of mat^T
        _, sv, vt = np.linalg.svd(mat.T)
        rank = int(np.sum(sv > 1e-10 * (sv[0] if sv.size else 1.0)))
        basis = vt[rank:]
        gram = basis @ J_float @ basis.T
        return np.linalg.eigvalsh(gram)

    def kernel_indefinite(self, J_float: np.ndarray) -> bool:
        ev = self.kernel_form_eigenvalues(J_float)
        return bool(ev.min() < -1e-9) and bool(ev.max() > 1e-9)


@dataclass(frozen=True)
class HomogeneousFormOnCone:
    """F(v) = sum_{j<=p} |w_j|^d - sum_{j>p} |w_j|^d with w = ((v g) tau) L0 h."""

    n: int
    m: int
    d: float
    p: int
    q: int
    g: GroupElement
    h: np.ndarray
    tau: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if self.p < self.q or self.q < 1 or self.p + self.q != self.m:
            raise ValDistError("need p >= q >= 1 with p + q = m")
        if not 1 < self.d <= self.m:
            raise ValDistError("degree must satisfy 1 < d <= m")

    @classmethod
    def standard(cls, n, m, d, p, q, g=None, h=None, tau=None):
        g = g if g is not None else identity(n)
        h = np.asarray(h, dtype=float) if h is not None else np.eye(m)
        return cls(n=n, m=m, d=float(d), p=p, q=q, g=g, h=h, tau=tau)

    def map_matrix(self) -> np.ndarray:
        tau = self.tau if self.tau is not None else np.eye(self.n + 2)
        return self.g.mat @ tau @ _projection(self.n, self.m) @ self.h

    def det_h(self) -> float:
        return float(abs(np.linalg.det(self.h)))

    def values_batch(self, V: np.ndarray) -> np.ndarray:
        W = V @ self.map_matrix()
        powered = np.abs(W) ** self.d
        return powered[:, : self.p].sum(axis=1) - powered[:, self.p :].sum(axis=1)

    def value(self, v) -> float:
        return float(self.values_batch(np.asarray(v, dtype=float)[None, :])[0])


def _norm_filtered(points: np.ndarray, T: float) -> np.ndarray:
    """Rows with ||v||_Q <= T; for the block forms this is 2 q^2 <= T^2."""
    q = points[:, -1].astype(np.int64)
    return points[2 * q * q <= T * T * (1 + 1e-12)]


def count_linear(
    L: LinearMapOnCone,
    omega,
    T: float,
    points: np.ndarray,
    omega_q: float | None = None,
    V_L: float | None = None,
) -> CountReport:
    """Count cone points with ||v||_Q <= T whose image under L lies in omega.

    points holds the enumerated primitive points of the underlying form (the
    caller enumerates once and reuses).  omega is a Box or list of Boxes.
    main_term = omega_q * c_{n,m} vol(omega) T^{n-m} V_L / |det h| when the
    coefficient data is supplied, else 0 (count-only mode).
    """
    boxes = [omega] if isinstance(omega, Box) else list(omega)
    pts = _norm_filtered(points, T)
    W = pts[:, :].astype(np.float64) @ L.matrix()
    mask = np.zeros(W.shape[0], dtype=bool)
    for box in boxes:
        mask |= box.contains_batch(W)
    count = int(np.count_nonzero(mask))
    main = 0.0
    if omega_q is not None and V_L is not None and L.raw_matrix is None:
        vol = sum(box.volume() for box in boxes)
        main = omega_q * predict_linear_measure(L.n, L.m, vol, T, V_L, L.det_h())
    meta = {"kind": "linear", "n": L.n, "m": L.m, "T": T,
            "vol_omega": sum(box.volume() for box in boxes)}
    return CountReport(count=count, main_term=main, meta=meta)


def count_homog(
    F: HomogeneousFormOnCone,
    interval,
    T: float,
    points: np.ndarray,
    omega_q: float | None = None,
    V_F: float | None = None,
) -> CountReport:
    """Count cone points with ||v||_Q <= T and F(v) in the open interval."""
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValDistError("interval needs a < b")
    pts = _norm_filtered(points, T)
    vals = F.values_batch(pts.astype(np.float64))
    count = int(np.count_nonzero((vals > a) & (vals < b)))
    main = 0.0
    if omega_q is not None and V_F is not None:
        main = omega_q * predict_homog_measure(F.n, F.m, F.d, b - a, T, V_F, F.det_h())
    meta = {"kind": "homog", "n": F.n, "m": F.m, "d": F.d, "T": T, "interval": [a, b]}
    return CountReport(count=count, main_term=main, meta=meta)


def predict_linear_measure(n, m, vol_omega, T, V_L, det_h=1.0) -> float:
    """c_{n,m} vol(Omega) T^{n-m} V_L / |det h|."""
    return c_nm(n, m) * vol_omega * T ** (n - m) * V_L / det_h


def predict_homog_measure(n, m, d, len_I, T, V_F, det_h=1.0) -> float:
    """c_{n,m} |I| T^{n-d} V_F / (|det h| d)."""
    return c_nm(n, m) * len_I * T ** (n - d) * V_F / (det_h * d)


def homog_error_exponent(m: int, d: float) -> float:
    """Predicted power saving of the homogeneous volume estimate."""
    return min(d / 4.0, (m - d) / 2.0)


def v_L_closed_form(n: int, m: int) -> float:
    """Sub-cone unit-ball volume at the identity: 2^{-(n-m)/2} / (n-m)."""
    if not 1 <= m < n:
        raise ValDistError("need 1 <= m < n")
    return 2.0 ** (-(n - m) / 2.0) / (n - m)


def v_L(L: LinearMapOnCone, samples: int = 10**6, seed: int = 0, J_float=None):
    """Monte Carlo V_L with its standard error.

    The sub-cone consists of rays r (0, w, 1) g^{-1} with w on the
    (n-m)-sphere; the radial integral up to the unit ball is exact, leaving an
    average of ||(0, w, 1) g^{-1}||^{-(n-m)} over the sphere.
    """
    n, m = L.n, L.m
    if L.raw_matrix is not None:
        if J_float is None:
            raise ValDistError("raw maps need the ambient Gram matrix for the kernel gate")
        if not L.kernel_indefinite(J_float):
            raise ValDistError("form restricted to ker(L) is definite; volume law void")
        raise ValDistError("V_L is defined through the classification shape")
    rng = np.random.Generator(np.random.Philox(seed))
    g_inv = np.linalg.inv(L.g.mat)
    k = n - m
    dirs = rng.standard_normal((samples, k + 1))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    U = np.zeros((samples, n + 2))
    U[:, m : n + 1] = dirs
    U[:, n + 1] = 1.0
    vals = np.linalg.norm(U @ g_inv, axis=1) ** (-(k)) / k
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def _ld_ball_volume(p: int, d: float) -> float:
    return (2.0 * math.gamma(1.0 + 1.0 / d)) ** p / math.gamma(1.0 + p / d)


def _ld_sphere_mass(p: int, d: float) -> float:
    """Total surface mass of the unit L^d sphere in R^p for the polar measure
    dx = t^{p-1} dt dsigma."""
    return p * _ld_ball_volume(p, d)


def _sample_ld_sphere(p: int, d: float, size: int, rng) -> np.ndarray:
    """Cone-measure samples on the L^d unit sphere (generalized Gaussians)."""
    if p == 1:
        return rng.choice(np.array([-1.0, 1.0]), size=(size, 1))
    g = rng.gamma(shape=1.0 / d, scale=1.0, size=(size, p)) ** (1.0 / d)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(size, p))
    x = g * signs
    norms = np.sum(np.abs(x) ** d, axis=1) ** (1.0 / d)
    return x / norms[:, None]


def v_F(F: HomogeneousFormOnCone, samples: int = 10**6, seed: int = 0):
    """Monte Carlo V_F with its standard error.

    Integrates the sub-variety measure with the radial part done exactly:
    t^2 is Beta-distributed, the two L^d sphere factors carry their total
    masses, and each sample contributes
    ||w~ h^{-1}||^{d-m} * r_max^{n-d} / (n-d) with r_max the unit-ball cutoff
    along the ray through (t w~h^{-1}/||w~h^{-1}||, w sqrt(1-t^2), 1) g^{-1}.
    """
    n, m, d, p, q = F.n, F.m, F.d, F.p, F.q
    if not d < m:
        raise ValDistError("V_F needs degree d < m")
    if not m < n:
        raise ValDistError("V_F needs m < n")
    rng = np.random.Generator(np.random.Philox(seed))
    g_inv = np.linalg.inv(F.g.mat)
    h_inv = np.linalg.inv(F.h)

    t2 = rng.beta((m - d) / 2.0, (n - m + 1) / 2.0, size=samples)
    t = np.sqrt(t2)
    w_sphere = rng.standard_normal((samples, n - m + 1))
    w_sphere /= np.linalg.norm(w_sphere, axis=1, keepdims=True)
    w1 = _sample_ld_sphere(p, d, samples, rng)
    w2 = _sample_ld_sphere(q, d, samples, rng)
    wt = np.concatenate([w1, w2], axis=1) @ h_inv
    wt_norm = np.linalg.norm(wt, axis=1)

    U = np.zeros((samples, n + 2))
    U[:, :m] = t[:, None] * wt / wt_norm[:, None]
    U[:, m : n + 1] = np.sqrt(1.0 - t2)[:, None] * w_sphere
    U[:, n + 1] = 1.0
    ray_norm = np.linalg.norm(U @ g_inv, axis=1)

    t_mass = 0.5 * _beta((m - d) / 2.0, (n - m + 1) / 2.0)
    sphere_mass = _ld_sphere_mass(p, d) * _ld_sphere_mass(q, d)
    weights = wt_norm ** (d - m) * ray_norm ** (-(n - d))
    scale = t_mass * sphere_mass / (n - d)
    vals = scale * weights
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def v_F_identity_reference(F: HomogeneousFormOnCone, nodes: int = 4096) -> float:
    """Quadrature reference for V_F at g = id (p <= 2 and q <= 2).

    At the identity the ray cutoff is constant, so V_F factorizes into the
    exact radial and Beta factors times the L^d sphere integral of
    ||w~ h^{-1}||^{d-m}, which is evaluated by angular quadrature.
    """
    n, m, d, p, q = F.n, F.m, F.d, F.p, F.q
    if not np.allclose(F.g.mat, np.eye(n + 2)):
        raise ValDistError("reference value exists only at g = id")
    if p > 2 or q > 2:
        raise ValDistError("angular reference implemented for p, q <= 2")
    h_inv = np.linalg.inv(F.h)

    def sphere_nodes(k):
        """Directions and sigma_d weights for the L^d sphere in R^k."""
        if k == 1:
            return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
        phi = (np.arange(nodes) + 0.5) * (2 * math.pi / nodes)
        raw = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        g_abs = np.sum(np.abs(raw) ** d, axis=1) ** (1.0 / d)
        dirs = raw / g_abs[:, None]
        w = (2 * math.pi / nodes) / g_abs**2
        return dirs, w

    d1, w1 = sphere_nodes(p)
    d2, w2 = sphere_nodes(q)
    total = 0.0
    for i in range(d1.shape[0]):
        block = np.concatenate([np.tile(d1[i], (d2.shape[0], 1)), d2], axis=1) @ h_inv
        total += float(np.sum(w1[i] * w2 * np.linalg.norm(block, axis=1) ** (d - m)))
    t_mass = 0.5 * _beta((m - d) / 2.0, (n - m + 1) / 2.0)
    radial = 2.0 ** (-(n - d) / 2.0) / (n - d)
    return radial * t_mass * total


def mc_cone_ball_measure(n: int, T: float, membership, samples: int, seed: int = 0):
    """Monte Carlo invariant measure of a subset of { ||v|| <= T } on the
    standard cone, with standard error.

    Samples radius with density proportional to r^{n-1} on [0, T/sqrt(2)] and
    directions uniformly; membership receives the (samples, n+2) matrix of
    cone points r (alpha, 1).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    R = T / math.sqrt(2.0)
    r = R * rng.random(samples) ** (1.0 / n)
    alpha = rng.standard_normal((samples, n + 1))
    alpha /= np.linalg.norm(alpha, axis=1, keepdims=True)
    V = np.concatenate([r[:, None] * alpha, r[:, None]], axis=1)
    hits = np.asarray(membership(V), dtype=float)
    base = R**n / n
    return base * float(hits.mean()), base * float(hits.std(ddof=1) / math.sqrt(samples))
