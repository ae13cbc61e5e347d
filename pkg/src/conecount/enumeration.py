"""Enumeration of primitive integer points on the positive light cone.

For the block forms Q(p, q) = Qe(p) - q^2 the cone points with height q are
exactly the integer solutions of Qe(p) = q^2, so enumeration proceeds layer by
layer in q.  Each layer is solved by a Fincke-Pohst style branch and bound on
an exact rational LDL^T factorization of the Gram matrix; residuals and bounds
are integer/rational throughout, so no solution can be lost to float boundary
error.  A vectorized layer solver (equivalent output, much faster) is used for
the standard forms at experiment scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .quadform import EllipsoidForm, FormError, QuadraticSpace


@dataclass(frozen=True)
class ConePoint:
    """Primitive integer point on the positive light cone."""

    v: tuple  # integer coordinates, length n+2
    q: int  # height = last coordinate
    qnorm: float  # cached ||v||_Q

    def __iter__(self):
        return iter(self.v)


def _le_sqrt(a: Fraction, r: Fraction) -> bool:
    """a <= sqrt(r) for exact rationals, r >= 0."""
    if a <= 0:
        return True
    return a * a <= r


def _floor_plus_sqrt(x: Fraction, r: Fraction) -> int:
    """floor(x + sqrt(r)) computed exactly (float guess, rational correction)."""
    g = math.floor(float(x) + math.sqrt(float(r)))
    while _le_sqrt(Fraction(g + 1) - x, r):
        g += 1
    while not _le_sqrt(Fraction(g) - x, r):
        g -= 1
    return g


def _ldl(A):
    """Exact LDL^T of a positive definite rational matrix.

    Returns (D, U) with Qe(p) = sum_i D[i] * (p_i + sum_{j>i} U[i][j] p_j)^2.
    """
    m = len(A)
    D = [Fraction(0)] * m
    U = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        D[i] = A[i][i] - sum(D[k] * U[k][i] * U[k][i] for k in range(i))
        if D[i] <= 0:
            raise FormError("matrix is not positive definite")
        U[i][i] = Fraction(1)
        for j in range(i + 1, m):
            U[i][j] = (A[i][j] - sum(D[k] * U[k][i] * U[k][j] for k in range(i))) / D[i]
    return D, U


def _fp_layer_general(D, U, target: Fraction):
    """All integer p with sum_i D[i] (p_i + c_i)^2 = target, by branch and bound."""
    m = len(D)
    sols = []
    p = [0] * m

    def descend(i, rem):
        c = sum(U[i][j] * p[j] for j in range(i + 1, m))
        if i == 0:
            rr = rem / D[0]
            num, den = rr.numerator, rr.denominator
            sn, sd = math.isqrt(num), math.isqrt(den)
            if sn * sn != num or sd * sd != den:
                return
            root = Fraction(sn, sd)
            for cand in {-c + root, -c - root}:
                if cand.denominator == 1:
                    p[0] = int(cand)
                    sols.append(tuple(p))
            return
        rr = rem / D[i]
        hi = _floor_plus_sqrt(-c, rr)
        lo = -_floor_plus_sqrt(c, rr)
        for t in range(lo, hi + 1):
            p[i] = t
            descend(i - 1, rem - D[i] * (Fraction(t) + c) ** 2)

    descend(m - 1, target)
    return sols


def _fp_layer_diag(coeffs, target: int):
    """All integer p with sum_i coeffs[i] p_i^2 = target (integer arithmetic)."""
    m = len(coeffs)
    sols = []
    p = [0] * m

    def descend(i, rem):
        d = coeffs[i]
        if i == 0:
            if rem % d == 0:
                s = rem // d
                root = math.isqrt(s)
                if root * root == s:
                    if root == 0:
                        p[0] = 0
                        sols.append(tuple(p))
                    else:
                        p[0] = root
                        sols.append(tuple(p))
                        p[0] = -root
                        sols.append(tuple(p))
            return
        # exact: d t^2 <= rem  <=>  t^2 <= rem // d  (t^2 is an integer)
        b = math.isqrt(rem // d)
        for t in range(-b, b + 1):
            p[i] = t
            descend(i - 1, rem - d * t * t)

    descend(m - 1, target)
    return sols


def layer_solutions(form: EllipsoidForm, q: int):
    """All integer p (any gcd) with Qe(p) = q^2, in lexicographic order."""
    target_int = form.s_A * q * q
    if form.is_diagonal():
        sols = _fp_layer_diag(form.diagonal_int_coeffs(), target_int)
    else:
        A = [[Fraction(x) for x in row] for row in form.A_int]
        D, U = _ldl(A)
        sols = _fp_layer_general(D, U, Fraction(target_int))
    sols.sort()
    return sols


def _is_primitive(p, q: int) -> bool:
    g = q
    for x in p:
        g = math.gcd(g, x)
        if g == 1:
            return True
    return g == 1


def enumerate_primitive(form: EllipsoidForm, q_max: int) -> Iterator[ConePoint]:
    """Yield all primitive cone points with 1 <= q <= q_max, q increasing,
    lexicographic in p within a layer."""
    if q_max < 1:
        return
    rt2 = math.sqrt(2.0)
    for q in range(1, q_max + 1):
        for p in layer_solutions(form, q):
            if _is_primitive(p, q):
                yield ConePoint(v=p + (q,), q=q, qnorm=rt2 * q)


def count_all(form: EllipsoidForm, T: float) -> int:
    """Number of primitive cone points with 1 <= q < T."""
    if T <= 1:
        return 0
    q_hi = math.ceil(T) - 1
    pts = primitive_points(form, q_hi)
    qs = pts[:, -1]
    return int(np.count_nonzero(qs < T))


def enumerate_by_norm(space, T: float) -> Iterator[ConePoint]:
    """All primitive cone points with ||v||_Q <= T.

    For block ellipsoid forms ||(p,q)||_Q^2 = 2 q^2 exactly, so the cutoff is
    q <= T / sqrt(2).  For a general rational space a box search is used; this
    fallback is best effort (complete on the tested ranges, no general
    guarantee).
    """
    if isinstance(space, EllipsoidForm):
        q_max = int(math.floor(T / math.sqrt(2.0) + 1e-12))
        yield from enumerate_primitive(space, q_max)
        return
    yield from _enumerate_by_norm_box(space, T)


def _enumerate_by_norm_box(space: QuadraticSpace, T: float) -> Iterator[ConePoint]:
    dim = space.dim
    tau_inv = np.linalg.inv(space.tau)
    bounds = [int(math.floor(T * float(np.linalg.norm(tau_inv[:, i])) + 1e-9)) for i in range(dim)]
    guard = 1.0 + 1e-9

    def rec(i, prefix):
        if i == dim - 1:
            for q in range(1, bounds[i] + 1):
                v = prefix + (q,)
                if space.evaluate(v) == 0 and _is_primitive(v[:-1], q):
                    norm = space.q_norm(v)
                    if norm <= T * guard:
                        yield ConePoint(v=v, q=q, qnorm=norm)
            return
        for t in range(-bounds[i], bounds[i] + 1):
            yield from rec(i + 1, prefix + (t,))

    out = sorted(rec(0, ()), key=lambda cp: (cp.q, cp.v))
    yield from out


def brute_force_primitive(form: EllipsoidForm, q_max: int) -> np.ndarray:
    """Naive box-scan oracle: all primitive points with q <= q_max.

    Independent of the branch-and-bound path; used to certify it.  Scans the
    integer box |p_i| <= q_max * sqrt((A^-1)_ii) once with vectorized exact
    integer arithmetic.
    """
    m = form.dim
    Af = np.array([[float(x) for x in row] for row in form.A])
    Ainv_diag = np.diag(np.linalg.inv(Af))
    bounds = [int(math.floor(q_max * math.sqrt(Ainv_diag[i]) + 1e-9)) + 1 for i in range(m)]
    A_int = np.array(form.A_int, dtype=np.int64)
    s_A = form.s_A

    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    rows = []
    # chunk over the first coordinate to keep memory flat
    rest = np.stack([g.ravel() for g in np.meshgrid(*axes[1:], indexing="ij")], axis=1) if m > 1 else np.zeros((1, 0), np.int64)
    for p0 in axes[0]:
        pts = np.concatenate([np.full((rest.shape[0], 1), p0, np.int64), rest], axis=1)
        vals = np.einsum("ij,jk,ik->i", pts, A_int, pts)
        qq, rem = np.divmod(vals, s_A)
        ok = rem == 0
        qs = np.sqrt(qq[ok]).round().astype(np.int64)
        cand = pts[ok]
        good = (qs * qs * s_A == vals[ok]) & (qs >= 1) & (qs <= q_max)
        cand, qs = cand[good], qs[good]
        if cand.size:
            g = np.gcd.reduce(np.abs(np.concatenate([cand, qs[:, None]], axis=1)), axis=1)
            keep = g == 1
            rows.append(np.concatenate([cand[keep], qs[keep][:, None]], axis=1))
    if not rows:
        return np.zeros((0, m + 1), dtype=np.int64)
    out = np.concatenate(rows, axis=0)
    order = np.lexsort(tuple(out[:, i] for i in range(m - 1, -1, -1)) + (out[:, -1],))
    return out[order]


# ---------------------------------------------------------------------------
# vectorized layer solver for forms proportional to a sum of squares


def _expand_sorted_multiset(canon: np.ndarray, m: int) -> np.ndarray:
    """Distinct signed permutations of the sorted nonnegative rows in canon."""
    import itertools

    if canon.size == 0:
        return canon.reshape(0, m)
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    all_perm = canon[:, perms]  # (N, m!, m)
    all_perm = all_perm.reshape(-1, m)
    all_perm = np.unique(all_perm, axis=0)
    signs = np.array(list(itertools.product((1, -1), repeat=m)), dtype=all_perm.dtype)
    signed = all_perm[:, None, :] * signs[None, :, :]
    signed = signed.reshape(-1, m)
    return np.unique(signed, axis=0)


def _sum_squares_layer_sorted(k: int, m: int) -> np.ndarray:
    """Sorted tuples 0 <= p_1 <= ... <= p_m with sum of squares k (m <= 4)."""
    if m == 1:
        r = math.isqrt(k)
        return np.array([[r]]) if r * r == k else np.zeros((0, 1), np.int64)
    if m == 2:
        b_lo = math.isqrt((k + 1) // 2 - 1) if k >= 2 else 0
        b = np.arange(b_lo, math.isqrt(k) + 1, dtype=np.int64)
        a2 = k - b * b
        a = np.sqrt(a2.astype(np.float64)).round().astype(np.int64)
        ok = (a * a == a2) & (a <= b) & (a2 >= 0)
        return np.stack([a[ok], b[ok]], axis=1)
    if m == 3:
        c_lo = max(int(math.ceil(math.sqrt(k / 3.0))) - 1, 0)
        c = np.arange(c_lo, math.isqrt(k) + 1, dtype=np.int64)
        k2 = k - c * c
        b_hi = np.minimum(c, np.sqrt(np.maximum(k2, 0).astype(np.float64)).astype(np.int64) + 1)
        b_lo = np.maximum(np.ceil(np.sqrt(np.maximum(k2, 0) / 2.0)).astype(np.int64) - 1, 0)
        counts = np.maximum(b_hi - b_lo + 1, 0)
        c_rep = np.repeat(c, counts)
        k2_rep = np.repeat(k2, counts)
        starts = np.repeat(b_lo, counts)
        offs = np.arange(counts.sum(), dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
        b = starts + offs
        valid = (b <= c_rep) & (b * b <= k2_rep)
        b, c_rep, k2_rep = b[valid], c_rep[valid], k2_rep[valid]
        a2 = k2_rep - b * b
        a = np.sqrt(a2.astype(np.float64)).round().astype(np.int64)
        ok = (a * a == a2) & (a <= b)
        return np.stack([a[ok], b[ok], c_rep[ok]], axis=1)
    if m == 4:
        rows = []
        e_lo = int(math.ceil(math.sqrt(k / 4.0) - 1e-9))
        for e in range(e_lo, math.isqrt(k) + 1):
            k3 = k - e * e
            sub = _sum_squares_layer_sorted(k3, 3)
            if sub.size:
                sub = sub[sub[:, 2] <= e]
                if sub.size:
                    rows.append(np.concatenate([sub, np.full((sub.shape[0], 1), e, np.int64)], axis=1))
        return np.concatenate(rows, axis=0) if rows else np.zeros((0, 4), np.int64)
    raise ValueError("sorted sum-of-squares solver supports m <= 4")


class _TwoSquareTable:
    """All pairs 0 <= b <= c with b^2 + c^2 <= s_max, sorted by the value
    s = b^2 + c^2 for ranged lookup.  Only ~pi/8 * s_max pairs exist, so the
    table is far cheaper than scanning a disc per layer."""

    def __init__(self, s_max: int):
        self.s_max = s_max
        blocks = []
        c_max = math.isqrt(s_max)
        for c in range(0, c_max + 1):
            b_hi = min(c, math.isqrt(s_max - c * c))
            b = np.arange(0, b_hi + 1, dtype=np.int64)
            s = b * b + c * c
            blocks.append(np.stack([s, b, np.full_like(b, c)], axis=1))
        table = np.concatenate(blocks, axis=0)
        order = np.argsort(table[:, 0], kind="stable")
        table = table[order]
        self.values = np.ascontiguousarray(table[:, 0])
        self.pairs = np.ascontiguousarray(table[:, 1:])

    def representations(self, targets: np.ndarray):
        """For each target s return (a-index-repeat, pairs) of all b <= c with
        b^2 + c^2 = s."""
        lo = np.searchsorted(self.values, targets, side="left")
        hi = np.searchsorted(self.values, targets, side="right")
        counts = hi - lo
        idx_src = np.repeat(lo, counts) + (
            np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        )
        owner = np.repeat(np.arange(targets.shape[0]), counts)
        return owner, self.pairs[idx_src]


def _sum_squares_layers_tabled(q_max: int, scale_targets) -> list:
    """Sorted canonical triples per layer via the two-square table.

    scale_targets maps q to the layer target k (or None to skip the layer);
    returns a list of (q, sorted canonical triples) for m = 3.
    """
    k_max = max((scale_targets(q) or 0) for q in range(1, q_max + 1))
    table = _TwoSquareTable(k_max)
    out = []
    for q in range(1, q_max + 1):
        k = scale_targets(q)
        if k is None:
            continue
        a = np.arange(0, math.isqrt(k) + 1, dtype=np.int64)
        owner, pairs = table.representations(k - a * a)
        triples = np.concatenate([a[owner][:, None], pairs], axis=1)
        triples.sort(axis=1)
        canon = np.unique(triples, axis=0)
        out.append((q, canon))
    return out


def _fast_form_scale(form: EllipsoidForm):
    """If Qe = c * (sum of squares) with integer ratio q^2 s_A / c, return c."""
    if not form.is_diagonal():
        return None
    coeffs = form.diagonal_int_coeffs()
    if len(set(coeffs)) != 1 or form.dim > 4:
        return None
    return coeffs[0]


def primitive_points(form: EllipsoidForm, q_max: int, method: str = "auto") -> np.ndarray:
    """All primitive points with 1 <= q <= q_max as an int array [p..., q].

    method="fp" forces the branch-and-bound path; "fast" the vectorized sorted
    multiset path (sum-of-squares forms only); "auto" picks.  Rows are sorted
    by (q, lexicographic p) in every case.
    """
    scale = _fast_form_scale(form)
    if method == "auto":
        method = "fast" if (scale is not None and q_max > 40) else "fp"
    if method == "fast" and scale is None:
        raise ValueError("fast path needs a diagonal form with equal coefficients")
    if method == "fp":
        rows = [list(cp.v) for cp in enumerate_primitive(form, q_max)]
        return np.array(rows, dtype=np.int64).reshape(len(rows), form.dim + 1)
    m = form.dim
    dtype = np.int16 if q_max < 32000 else np.int32

    def finish_layer(q, canon, out):
        pts = _expand_sorted_multiset(canon, m)
        if not pts.size:
            return
        g = np.gcd.reduce(np.abs(pts), axis=1)
        g = np.gcd(g, q)
        pts = pts[g == 1]
        if not pts.size:
            return
        layer = np.concatenate([pts, np.full((pts.shape[0], 1), q, np.int64)], axis=1)
        order = np.lexsort(tuple(layer[:, i] for i in range(m - 1, -1, -1)))
        out.append(layer[order].astype(dtype))

    out = []
    if m == 3:
        def target_of(q):
            t = form.s_A * q * q
            return t // scale if t % scale == 0 else None

        for q, canon in _sum_squares_layers_tabled(q_max, target_of):
            finish_layer(q, canon, out)
    else:
        for q in range(1, q_max + 1):
            target = form.s_A * q * q
            if target % scale:
                continue
            finish_layer(q, _sum_squares_layer_sorted(target // scale, m), out)
    if not out:
        return np.zeros((0, m + 1), dtype=dtype)
    return np.concatenate(out, axis=0)
