"""Elements of the isometry group of the standard form in Iwasawa coordinates.

All matrices act on row vectors from the right (v -> v g).  The base point is
e0 = (-1, 0, ..., 0, 1); u_x fixes e0, a_y scales it by 1/y, and K is the
block rotation subgroup.  The identity neighborhoods used by the
well-roundedness checks are sampled from explicit Iwasawa boxes and then
rejection-tested against their exact defining inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class GroupError(ValueError):
    pass


REJECTION_BUDGET = 10**4


def e0(n: int) -> np.ndarray:
    v = np.zeros(n + 2)
    v[0] = -1.0
    v[-1] = 1.0
    return v


def f0(n: int) -> np.ndarray:
    """The opposite isotropic vector (1, 0, ..., 0, 1); f0 a_y = y f0."""
    v = np.zeros(n + 2)
    v[0] = 1.0
    v[-1] = 1.0
    return v


@dataclass(frozen=True)
class GroupElement:
    mat: np.ndarray
    iwasawa: Optional[tuple] = None  # (x, y, k_block) when built from coordinates

    def __post_init__(self):
        object.__setattr__(self, "mat", np.asarray(self.mat, dtype=float))

    @property
    def n(self) -> int:
        return self.mat.shape[0] - 2

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.mat @ other.mat)

    def inv(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.mat))

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.mat, ord=2))

    def apply(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.mat


def identity(n: int) -> GroupElement:
    return GroupElement(np.eye(n + 2))


def iwasawa_u(x) -> GroupElement:
    """Unipotent element fixing e0."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    half = float(np.dot(x, x)) / 2.0
    mat = np.zeros((n + 2, n + 2))
    mat[0, 0] = 1.0 - half
    mat[0, 1 : n + 1] = x
    mat[0, n + 1] = half
    mat[1 : n + 1, 0] = -x
    mat[1 : n + 1, 1 : n + 1] = np.eye(n)
    mat[1 : n + 1, n + 1] = x
    mat[n + 1, 0] = -half
    mat[n + 1, 1 : n + 1] = x
    mat[n + 1, n + 1] = 1.0 + half
    return GroupElement(mat, iwasawa=(tuple(x), 1.0, None))


def iwasawa_a(y: float, n: int) -> GroupElement:
    """Diagonal torus element with e0 a_y = y^{-1} e0; ||a_y||_op = max(y, 1/y)."""
    if y <= 0:
        raise GroupError("torus parameter must be positive")
    mat = np.eye(n + 2)
    c, s = (y + 1.0 / y) / 2.0, (y - 1.0 / y) / 2.0
    mat[0, 0] = c
    mat[0, n + 1] = s
    mat[n + 1, 0] = s
    mat[n + 1, n + 1] = c
    return GroupElement(mat, iwasawa=(None, float(y), None))


def rotation_k(R) -> GroupElement:
    """Block rotation diag(R, 1) with R in SO(n+1)."""
    R = np.asarray(R, dtype=float)
    dim = R.shape[0]
    if not np.allclose(R @ R.T, np.eye(dim), atol=1e-10):
        raise GroupError("rotation block is not orthogonal")
    if np.linalg.det(R) < 0:
        raise GroupError("rotation block must have determinant +1")
    mat = np.eye(dim + 1)
    mat[:dim, :dim] = R
    return GroupElement(mat, iwasawa=(None, 1.0, R))


def rotation_m(R) -> GroupElement:
    """Centralizer element diag(1, R, 1) with R in SO(n)."""
    R = np.asarray(R, dtype=float)
    dim = R.shape[0]
    if not np.allclose(R @ R.T, np.eye(dim), atol=1e-10):
        raise GroupError("rotation block is not orthogonal")
    mat = np.eye(dim + 2)
    mat[1 : dim + 1, 1 : dim + 1] = R
    return GroupElement(mat)


def alpha0(n: int) -> np.ndarray:
    a = np.zeros(n + 1)
    a[0] = -1.0
    return a


def _rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation R (row action: a @ R = b) in the plane of unit vectors a, b."""
    dot = float(np.dot(a, b))
    dim = a.shape[0]
    # column-convention rotation sending a to b, then transposed for row action
    col = np.eye(dim) - np.outer(a + b, a + b) / (1.0 + dot) + 2.0 * np.outer(b, a)
    return col.T


def section(alpha) -> GroupElement:
    """The section point k_alpha in K with e0 k_alpha = (alpha, 1).

    Rotates in the plane spanned by alpha0 = (-1, 0, ..., 0) and alpha, fixing
    the orthogonal complement.  The antipode alpha = -alpha0 is handled by the
    fixed sign flip in the first two coordinates (and nearly antipodal alpha
    by composing that flip with the plane rotation).
    """
    alpha = np.asarray(alpha, dtype=float)
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-10:
        raise GroupError("section needs a unit vector")
    a0 = alpha0(alpha.shape[0] - 1)
    dot = float(np.dot(a0, alpha))
    if dot > -1.0 + 1e-12:
        return rotation_k(_rotation_between(a0, alpha))
    flip = np.eye(alpha.shape[0])
    flip[0, 0] = -1.0
    flip[1, 1] = -1.0
    if np.allclose(alpha, -a0, atol=1e-15):
        return rotation_k(flip)
    return rotation_k(flip @ _rotation_between(-a0, alpha))


def sample_sphere(n: int, rng) -> np.ndarray:
    """A sigma_n distributed unit vector in R^{n+1}."""
    while True:
        g = rng.standard_normal(n + 1)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            return g / norm


def haar_so(dim: int, rng) -> np.ndarray:
    """Haar rotation from the sign-fixed QR of a Gaussian matrix."""
    if dim == 0:
        return np.zeros((0, 0))
    if dim == 1:
        return np.eye(1)
    g = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rng_from_seed(seed) -> np.random.Generator:
    """Counter-based generator; every sampler takes one of these."""
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# identity neighborhoods


@dataclass(frozen=True)
class NeighborhoodSpec:
    kind: str  # "G_eps_r_alpha" | "P_eps" | "P_tilde_eps"
    eps: float
    r: float = 0.0
    alpha: Optional[tuple] = None
    n: Optional[int] = None  # required for the parabolic kinds

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise GroupError("eps must lie in (0,1)")
        if self.kind == "G_eps_r_alpha":
            if not 0 < self.r < 1 or self.alpha is None:
                raise GroupError("G_eps_r_alpha needs r in (0,1) and a center alpha")
        elif self.n is None:
            raise GroupError("parabolic neighborhoods need the dimension n")


def in_g_neighborhood(g: GroupElement, eps: float, r: float, alpha) -> bool:
    """Exact membership in the two-sided sector-stability neighborhood:
    ||g||_op < 1 + eps and both normalized images of (alpha, 1) stay within
    chordal distance r*eps of (alpha, 1)/sqrt(2)."""
    at = np.append(np.asarray(alpha, dtype=float), 1.0)
    if g.op_norm() >= 1.0 + eps:
        return False
    target = at / math.sqrt(2.0)
    for mat in (g.mat, np.linalg.inv(g.mat)):
        img = at @ mat
        nrm = np.linalg.norm(img)
        if nrm <= 0 or np.linalg.norm(img / nrm - target) >= r * eps:
            return False
    return True


def is_parabolic(g: GroupElement, tol: float = 1e-9) -> bool:
    """g fixes the line through e0 (with positive scale)."""
    base = e0(g.n)
    img = base @ g.mat
    scale = img[-1]
    if scale <= 0:
        return False
    return bool(np.linalg.norm(img - scale * base) <= tol * np.linalg.norm(img))


def in_p_eps(g: GroupElement, eps: float) -> bool:
    return is_parabolic(g) and g.op_norm() < 1.0 + eps


def parabolic_coordinates(g: GroupElement):
    """Coordinates (m_block, y, x) of a parabolic element written g = m a_y u_x."""
    if not is_parabolic(g):
        raise GroupError("element is not parabolic")
    n = g.n
    w = f0(n) @ g.mat
    y = (w[0] + w[-1]) / 2.0
    if y <= 0:
        raise GroupError("element is not on the positive parabolic sheet")
    x = w[1:-1] / (2.0 * y)
    residue = g.mat @ iwasawa_u(-x).mat @ iwasawa_a(1.0 / y, n).mat
    m_block = residue[1 : n + 1, 1 : n + 1]
    return m_block, float(y), x


def in_p_prime_eps(g: GroupElement, eps: float) -> bool:
    """Membership in the box {m a_y u_x : ||a_y||_op < 1+eps/4, ||x|| < eps/4}."""
    try:
        _, y, x = parabolic_coordinates(g)
    except GroupError:
        return False
    return max(y, 1.0 / y) < 1.0 + eps / 4.0 and float(np.linalg.norm(x)) < eps / 4.0


def in_p_tilde_eps(g: GroupElement, eps: float) -> bool:
    return in_p_prime_eps(g, eps) and in_p_prime_eps(g.inv(), eps)


def _sample_ball(dim: int, radius: float, rng) -> np.ndarray:
    if dim == 0:
        return np.zeros(0)
    d = sample_sphere(dim - 1, rng) if dim > 1 else np.array([1.0 if rng.random() < 0.5 else -1.0])
    return radius * rng.random() ** (1.0 / dim) * d

def _sample_cap_direction(center: np.ndarray, chordal: float, rng) -> np.ndarray:
    """A direction within chordal distance `chordal` of `center` (support
    covers the cap; the exact law is irrelevant under rejection)."""
    dim = center.shape[0]
    theta_max = 2.0 * math.asin(min(chordal, 2.0) / 2.0)
    theta = rng.random() * theta_max
    g = rng.standard_normal(dim)
    g -= np.dot(g, center) * center
    nrm = np.linalg.norm(g)
    if nrm < 1e-12:
        return center
    w = g / nrm
    return math.cos(theta) * center + math.sin(theta) * w


def sample_neighborhood(spec: NeighborhoodSpec, rng) -> GroupElement:
    """Draw an element from the Iwasawa box inscribed in the neighborhood and
    rejection-test it against the exact membership predicate."""
    if spec.kind == "G_eps_r_alpha":
        return _sample_g_neighborhood(spec.eps, spec.r, np.asarray(spec.alpha, dtype=float), rng)
    if spec.kind == "P_eps":
        return sample_p_eps(spec.n, spec.eps, rng)
    if spec.kind == "P_tilde_eps":
        return sample_p_tilde(spec.n, spec.eps, rng)
    raise GroupError(f"unknown neighborhood kind {spec.kind!r}")


def _sample_g_neighborhood(eps, r, alpha, rng) -> GroupElement:
    n = alpha.shape[0] - 1
    k_a = section(alpha)
    k_a_inv = k_a.inv()
    a0 = alpha0(n)
    for _ in range(REJECTION_BUDGET):
        x = _sample_ball(n, eps / 4.0, rng)
        y = 1.0 + (2.0 * rng.random() - 1.0) * eps / 4.0
        m = rotation_m(haar_so(n, rng))
        ap = _sample_cap_direction(a0, r * eps / 4.0, rng)
        g0 = iwasawa_u(x) @ iwasawa_a(y, n) @ m @ section(ap)
        h = k_a_inv @ g0 @ k_a
        if in_g_neighborhood(h, eps, r, alpha):
            return h
    raise GroupError("rejection budget exceeded; box mis-sized for G_eps_r_alpha")


def sample_p_eps(n: int, eps: float, rng) -> GroupElement:
    for _ in range(REJECTION_BUDGET):
        x = _sample_ball(n, eps / 4.0, rng)
        y = 1.0 + (2.0 * rng.random() - 1.0) * eps / 4.0
        m = rotation_m(haar_so(n, rng))
        p = iwasawa_u(x) @ iwasawa_a(y, n) @ m
        if in_p_eps(p, eps):
            return p
    raise GroupError("rejection budget exceeded; box mis-sized for P_eps")


def sample_p_tilde(n: int, eps: float, rng) -> GroupElement:
    hi = 1.0 + eps / 4.0
    for _ in range(REJECTION_BUDGET):
        m = rotation_m(haar_so(n, rng))
        y = math.exp((2.0 * rng.random() - 1.0) * math.log(hi))  # max(y,1/y) < 1+eps/4
        x = _sample_ball(n, eps / 4.0, rng)
        p = m @ iwasawa_a(y, n) @ iwasawa_u(x)
        if in_p_tilde_eps(p, eps):
            return p
    raise GroupError("rejection budget exceeded; box mis-sized for P_tilde_eps")
