"""Rational quadratic forms of signature (n+1,1) and positive definite ellipsoid forms.

A form is stored with an exact rational Gram matrix J, so that membership of
integer vectors in the light cone (Q(v) = 0) is decided exactly.  The
diagonalizing matrix tau with Q(v) = Q_std(v @ tau) is the only floating
point object here; it is built as tau = k a from a symmetric eigendecomposition
with the unique negative eigenvalue ordered last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class FormError(ValueError):
    """Raised for malformed Gram matrices or dimension mismatches."""


def _as_fraction_matrix(rows):
    mat = [[Fraction(x) for x in row] for row in rows]
    size = len(mat)
    for row in mat:
        if len(row) != size:
            raise FormError("Gram matrix must be square")
    for i in range(size):
        for j in range(i):
            if mat[i][j] != mat[j][i]:
                raise FormError("Gram matrix must be symmetric")
    return mat


def _det_fraction(mat):
    """Determinant by fraction-free Gaussian elimination (Bareiss)."""
    m = [row[:] for row in mat]
    size = len(m)
    sign = 1
    for col in range(size - 1):
        pivot_row = next((r for r in range(col, size) if m[r][col] != 0), None)
        if pivot_row is None:
            return Fraction(0)
        if pivot_row != col:
            m[col], m[pivot_row] = m[pivot_row], m[col]
            sign = -sign
        for r in range(col + 1, size):
            factor = m[r][col] / m[col][col]
            for c in range(col, size):
                m[r][c] -= factor * m[col][c]
    det = Fraction(sign)
    for i in range(size):
        det *= m[i][i]
    return det


def standard_gram(n: int):
    """Gram matrix of the standard form: sum of n+1 squares minus the last square."""
    size = n + 2
    J = [[Fraction(0)] * size for _ in range(size)]
    for i in range(n + 1):
        J[i][i] = Fraction(1)
    J[size - 1][size - 1] = Fraction(-1)
    return J


def standard_form_value(w) -> float:
    """Value of the standard form at a real vector: ||w[:-1]||^2 - w[-1]^2."""
    w = np.asarray(w, dtype=float)
    return float(np.dot(w[:-1], w[:-1]) - w[-1] * w[-1])


def diagonalize(J) -> np.ndarray:
    """Return tau = k a with k orthogonal and a positive diagonal.

    The positive eigenvectors are ordered by their dominant coordinate and the
    unique negative one is placed last, which makes tau deterministic, keeps
    tau diagonal for diagonal J, and gives Q(v) = Q_std(v @ tau).
    """
    Jf = np.array([[float(x) for x in row] for row in J])
    size = Jf.shape[0]
    eigvals, eigvecs = np.linalg.eigh(Jf)
    if not (np.sum(eigvals > 0) == size - 1 and np.sum(eigvals < 0) == 1):
        raise FormError("matrix does not have signature (n+1,1)")
    dominant = [int(np.argmax(np.abs(eigvecs[:, i]))) for i in range(size)]
    order = sorted(range(size), key=lambda i: (eigvals[i] < 0, dominant[i], i))
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    # Fix the sign of each eigenvector (dominant entry positive) so tau does
    # not depend on LAPACK sign conventions.
    for i in range(size):
        col = eigvecs[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            eigvecs[:, i] = -col
    a = np.sqrt(np.abs(eigvals))
    return eigvecs * a[np.newaxis, :]


@dataclass(frozen=True)
class QuadraticSpace:
    """Rational form Q of signature (n+1,1) with Q(v) = v J v^T = Q_std(v tau)."""

    n: int
    J: tuple  # tuple of tuples of Fraction
    tau: np.ndarray = field(compare=False, repr=False)
    det_J: Fraction = field(compare=False)

    @classmethod
    def from_gram(cls, rows) -> "QuadraticSpace":
        J = _as_fraction_matrix(rows)
        n = len(J) - 2
        if n < 1:
            raise FormError("need at least a 3x3 Gram matrix")
        tau = diagonalize(J)
        det = _det_fraction(J)
        frozen = tuple(tuple(row) for row in J)
        return cls(n=n, J=frozen, tau=tau, det_J=det)

    @classmethod
    def standard(cls, n: int) -> "QuadraticSpace":
        space = cls.from_gram(standard_gram(n))
        # the standard form diagonalizes to the identity exactly
        object.__setattr__(space, "tau", np.eye(n + 2))
        return space

    @property
    def dim(self) -> int:
        return self.n + 2

    def evaluate(self, v):
        """Q(v) = v J v^T, exact for int/Fraction input, float otherwise."""
        if len(v) != self.dim:
            raise FormError(
                "vector length %d does not match form dimension %d" % (len(v), self.dim)
            )
        exact = all(isinstance(x, (int, Fraction)) for x in v)
        if exact:
            total = Fraction(0)
            for i, vi in enumerate(v):
                if vi == 0:
                    continue
                row = self.J[i]
                total += vi * sum(row[j] * v[j] for j in range(self.dim) if v[j])
            return total
        vf = np.asarray(v, dtype=float)
        Jf = np.array([[float(x) for x in row] for row in self.J])
        return float(vf @ Jf @ vf)

    def q_norm(self, v) -> float:
        """K_Q-invariant norm ||v tau|| (Euclidean norm after diagonalizing)."""
        if len(v) != self.dim:
            raise FormError(
                "vector length %d does not match form dimension %d" % (len(v), self.dim)
            )
        vf = np.asarray(v, dtype=float)
        return float(np.linalg.norm(vf @ self.tau))

    def is_standard(self) -> bool:
        return self.J == tuple(tuple(row) for row in standard_gram(self.n))

    def fingerprint_text(self) -> str:
        """Canonical text serialization of J, used for stable hashing."""
        rows = [" ".join(f"{x.numerator}/{x.denominator}" for x in row) for row in self.J]
        return "n=%d\n%s\n" % (self.n, "\n".join(rows))


def evaluate(space: QuadraticSpace, v):
    return space.evaluate(v)


def q_norm(space: QuadraticSpace, v) -> float:
    return space.q_norm(v)


@dataclass(frozen=True)
class EllipsoidForm:
    """Positive definite rational form on n+1 variables; induces Q(x,y) = Qe(x) - y^2."""

    n: int
    A: tuple  # (n+1)x(n+1) Gram matrix of the ellipsoid form, Fractions
    A_int: tuple  # scaled integer Gram matrix
    s_A: int  # scale with A_int = s_A * A entrywise
    space: QuadraticSpace = field(compare=False, repr=False)

    @classmethod
    def from_gram(cls, rows) -> "EllipsoidForm":
        A = _as_fraction_matrix(rows)
        n = len(A) - 1
        if n < 1:
            raise FormError("ellipsoid Gram matrix must be at least 2x2")
        _check_positive_definite(A)
        scale = 1
        for row in A:
            for x in row:
                scale = scale * x.denominator // math.gcd(scale, x.denominator)
        A_int = tuple(tuple(int(x * scale) for x in row) for row in A)
        size = n + 2
        J = [[Fraction(0)] * size for _ in range(size)]
        for i in range(n + 1):
            for j in range(n + 1):
                J[i][j] = A[i][j]
        J[size - 1][size - 1] = Fraction(-1)
        space = QuadraticSpace.from_gram(J)
        frozen = tuple(tuple(row) for row in A)
        return cls(n=n, A=frozen, A_int=A_int, s_A=scale, space=space)

    @classmethod
    def standard(cls, n: int) -> "EllipsoidForm":
        eye = [[Fraction(1 if i == j else 0) for j in range(n + 1)] for i in range(n + 1)]
        form = cls.from_gram(eye)
        object.__setattr__(form.space, "tau", np.eye(n + 2))
        return form

    @property
    def dim(self) -> int:
        return self.n + 1

    def value(self, p):
        """Qe(p) = p A p^T, exact for integer/rational input."""
        exact = all(isinstance(x, (int, Fraction)) for x in p)
        if exact:
            total = Fraction(0)
            for i, pi in enumerate(p):
                if pi == 0:
                    continue
                row = self.A[i]
                total += pi * sum(row[j] * p[j] for j in range(self.dim) if p[j])
            return total
        pf = np.asarray(p, dtype=float)
        Af = np.array([[float(x) for x in row] for row in self.A])
        return float(pf @ Af @ pf)

    def is_diagonal(self) -> bool:
        return all(self.A_int[i][j] == 0 for i in range(self.dim) for j in range(self.dim) if i != j)

    def diagonal_int_coeffs(self):
        """Diagonal of A_int; only meaningful when is_diagonal()."""
        return tuple(self.A_int[i][i] for i in range(self.dim))

    def ellipsoid_tau(self) -> np.ndarray:
        """The (n+1)x(n+1) block of tau mapping the ellipsoid onto the unit sphere."""
        return self.space.tau[: self.dim, : self.dim]


def _check_positive_definite(A):
    """Leading principal minors must all be positive (exact arithmetic)."""
    size = len(A)
    for k in range(1, size + 1):
        minor = [row[:k] for row in A[:k]]
        if _det_fraction(minor) <= 0:
            raise FormError("ellipsoid Gram matrix is not positive definite")


def parse_form_text(text: str):
    """Parse the plain-text form format.

    First line "n=<int>".  If the next line is "ellipsoid", the following n+1
    rows give the positive definite Gram matrix A and an EllipsoidForm is
    returned; otherwise n+2 rows give J and a QuadraticSpace is returned.
    Entries are whitespace-separated rationals like "3/2" or integers.
    """
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise FormError('form file must start with "n=<int>"')
    n = int(lines[0][2:])
    body = lines[1:]
    if body and body[0].lower() == "ellipsoid":
        rows = [ln.split() for ln in body[1 : n + 2]]
        if len(rows) != n + 1:
            raise FormError("expected %d ellipsoid Gram rows" % (n + 1))
        return EllipsoidForm.from_gram([[Fraction(x) for x in row] for row in rows])
    rows = [ln.split() for ln in body[: n + 2]]
    if len(rows) != n + 2:
        raise FormError("expected %d Gram rows" % (n + 2))
    space = QuadraticSpace.from_gram([[Fraction(x) for x in row] for row in rows])
    if space.n != n:
        raise FormError("header n does not match matrix size")
    return space


def parse_form_spec(spec: str):
    """Parse a CLI form spec: "standard:<n>", "ellipsoid:<n>" or a file path."""
    if spec.startswith("standard:"):
        return EllipsoidForm.standard(int(spec.split(":", 1)[1]))
    if spec.startswith("ellipsoid:"):
        return EllipsoidForm.standard(int(spec.split(":", 1)[1]))
    with open(spec, "r", encoding="utf-8") as fh:
        return parse_form_text(fh.read())
