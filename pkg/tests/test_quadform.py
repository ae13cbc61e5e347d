import math
from fractions import Fraction

import numpy as np
import pytest

from conecount import quadform
from conecount.quadform import EllipsoidForm, FormError, QuadraticSpace


def test_evaluate_isotropic_examples():
    Q2 = QuadraticSpace.standard(2)
    assert Q2.evaluate((3, 4, 0, 5)) == 0
    Q1 = QuadraticSpace.standard(1)
    assert Q1.evaluate((1, 0, 1)) == 0
    sp = QuadraticSpace.from_gram([[1, 0, 0], [0, 2, 0], [0, 0, -1]])
    assert sp.evaluate((1, 2, 3)) == 0  # 1 + 8 - 9


def test_evaluate_is_exact_rational():
    sp = QuadraticSpace.from_gram(
        [[Fraction(1, 2), 0, 0], [0, Fraction(3), 0], [0, 0, Fraction(-1)]]
    )
    val = sp.evaluate((1, 1, 1))
    assert isinstance(val, Fraction)
    assert val == Fraction(5, 2)


def test_evaluate_dimension_mismatch():
    Q1 = QuadraticSpace.standard(1)
    with pytest.raises(FormError):
        Q1.evaluate((1, 2, 3, 4))


def test_diagonalize_standard_is_identity():
    Q3 = QuadraticSpace.from_gram(quadform.standard_gram(3))
    assert np.array_equal(Q3.tau, np.eye(5))


def test_diagonalize_diagonal_cases():
    sp = QuadraticSpace.from_gram([[1, 0, 0], [0, 2, 0], [0, 0, -1]])
    assert np.allclose(sp.tau, np.diag([1.0, math.sqrt(2.0), 1.0]))
    sp2 = QuadraticSpace.from_gram([[4, 0, 0], [0, 1, 0], [0, 0, -9]])
    assert np.allclose(sp2.tau, np.diag([2.0, 1.0, 3.0]))


def test_diagonalize_rejects_wrong_signature():
    with pytest.raises(FormError):
        QuadraticSpace.from_gram([[1, 0, 0], [0, -1, 0], [0, 0, -1]])
    with pytest.raises(FormError):
        QuadraticSpace.from_gram([[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_tau_is_rotation_times_diagonal():
    # tau = k a  <=>  tau^T tau is diagonal with positive entries
    J = [[2, 1, 0, 0], [1, 3, 0, 0], [0, 0, 1, 0], [0, 0, 0, -5]]
    sp = QuadraticSpace.from_gram(J)
    gram = sp.tau.T @ sp.tau
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-9
    assert np.all(np.diag(gram) > 0)


def test_q_norm_examples():
    Q2 = QuadraticSpace.standard(2)
    assert Q2.q_norm((3, 4, 0, 5)) == pytest.approx(math.sqrt(50))
    sp = QuadraticSpace.from_gram([[1, 0, 0], [0, 2, 0], [0, 0, -1]])
    assert sp.q_norm((1, 2, 3)) == pytest.approx(math.sqrt(18))
    assert Q2.q_norm((0, 0, 0, 0)) == 0.0


def test_evaluate_matches_standard_form_after_tau():
    rng = np.random.default_rng(1)
    forms = [
        QuadraticSpace.standard(1),
        QuadraticSpace.standard(2),
        QuadraticSpace.from_gram([[1, 0, 0], [0, 2, 0], [0, 0, -1]]),
        QuadraticSpace.from_gram([[2, 1, 0, 0], [1, 3, 0, 0], [0, 0, 1, 0], [0, 0, 0, -5]]),
    ]
    for sp in forms:
        vs = rng.integers(-50, 51, size=(2500, sp.dim))
        for v in vs:
            lhs = float(sp.evaluate([int(x) for x in v]))
            rhs = quadform.standard_form_value(np.asarray(v, float) @ sp.tau)
            assert abs(lhs - rhs) <= 1e-8 * (1 + float(v @ v))


def test_q_norm_invariant_under_stabilizer():
    from conecount.group import haar_so, rng_from_seed, rotation_k

    sp = QuadraticSpace.from_gram([[2, 1, 0], [1, 3, 0], [0, 0, -5]])
    rng = rng_from_seed(7)
    tau_inv = np.linalg.inv(sp.tau)
    for _ in range(20):
        k = rotation_k(haar_so(sp.dim - 1, rng)).mat
        stab = tau_inv @ k @ sp.tau  # wrong order would break invariance
        v = rng.normal(size=sp.dim)
        # members of tau K tau^-1 act before tau cancels: ||v (tau k tau^-1)||_Q = ||v||_Q
        w = v @ (sp.tau @ k @ tau_inv)
        assert sp.q_norm(w) == pytest.approx(sp.q_norm(v), abs=1e-10 * (1 + sp.q_norm(v)))


def test_ellipsoid_form_construction():
    E = EllipsoidForm.from_gram([[1, 0], [0, 2]])
    assert E.n == 1
    assert E.s_A == 1 and E.A_int == ((1, 0), (0, 2))
    assert E.space.evaluate((1, 2, 3)) == 0
    Eh = EllipsoidForm.from_gram([[Fraction(1, 2), 0], [0, Fraction(3, 4)]])
    assert Eh.s_A == 4 and Eh.A_int == ((2, 0), (0, 3))
    with pytest.raises(FormError):
        EllipsoidForm.from_gram([[1, 2], [2, 1]])  # indefinite


def test_ellipsoid_value_exact():
    E = EllipsoidForm.from_gram([[1, 0], [0, 2]])
    assert E.value((3, 4)) == 41
    assert isinstance(E.value((3, 4)), Fraction)


def test_form_file_round_trip(tmp_path):
    text = "n=1\n1 0 0\n0 2 0\n0 0 -1\n"
    sp = quadform.parse_form_text(text)
    assert isinstance(sp, QuadraticSpace) and sp.n == 1
    assert sp.evaluate((1, 2, 3)) == 0

    text2 = "n=1\nellipsoid\n1 0\n0 2\n"
    E = quadform.parse_form_text(text2)
    assert isinstance(E, EllipsoidForm) and E.n == 1

    path = tmp_path / "form.txt"
    path.write_text(text2)
    E2 = quadform.parse_form_spec(str(path))
    assert E2.A == E.A

    with pytest.raises(FormError):
        quadform.parse_form_text("1 0\n0 2\n")


def test_fingerprint_stability():
    a = QuadraticSpace.standard(2).fingerprint_text()
    b = QuadraticSpace.standard(2).fingerprint_text()
    assert a == b and a.startswith("n=2\n")
