import math

import numpy as np
import pytest

from conecount import counting, geometry
from conecount.counting import (
    count_cap,
    count_khintchine,
    cross_check_identity,
    estimate_kappa,
    i_sum,
    j_sum,
    predicted_exponents,
)
from conecount.enumeration import enumerate_primitive, primitive_points
from conecount.quadform import EllipsoidForm


def brute_count_cap(form, x, r, T):
    """Independent oracle: python loop over enumerated points."""
    x = np.asarray(x, float)
    count = 0
    for cp in enumerate_primitive(form, math.ceil(T) - 1):
        if cp.q >= T:
            continue
        p = np.asarray(cp.v[:-1], float) / cp.q
        if float(form.value(p - x)) < r * r:
            count += 1
    return count


def test_count_cap_rational_pole(form_n1):
    pole = np.zeros(2)
    pole[-1] = 1.0
    T = 6.0
    r = 0.99 / math.sqrt(T)
    rep = count_cap(form_n1, pole, r, T, kappa=1.0)
    assert rep.count == 1


def test_count_cap_full_sphere_equals_count_all(form_n1, form_n2):
    from conecount.enumeration import count_all

    for form, T in ((form_n1, 6.0), (form_n2, 12.0)):
        x = np.zeros(form.dim)
        x[0] = 1.0
        rep = count_cap(form, x, 2.5, T, kappa=1.0)
        assert rep.count == count_all(form, T)


def test_count_cap_brute_force_oracle(form_n1):
    x = np.array([1.0, 0.0])
    rep = count_cap(form_n1, x, 0.2, 6.0, kappa=1.0)
    assert rep.count == brute_count_cap(form_n1, x, 0.2, 6.0) == 1


def test_count_cap_monotone(form_n2):
    rng = np.random.default_rng(2)
    a = rng.normal(size=3)
    a /= np.linalg.norm(a)
    pts = primitive_points(form_n2, 59)
    counts_r = [count_cap(form_n2, a, r, 60.0, kappa=1.0, points=pts).count for r in (0.2, 0.5, 1.0, 2.0)]
    assert counts_r == sorted(counts_r)
    counts_T = [count_cap(form_n2, a, 0.8, T, kappa=1.0, points=pts).count for T in (10, 20, 40, 60)]
    assert counts_T == sorted(counts_T)


def test_count_khintchine_full_width_equals_count_all(form_n2):
    from conecount.enumeration import count_all

    x = np.array([0.0, 0.0, 1.0])
    psi = geometry.parse_psi("const:c=2.5")
    rep = count_khintchine(form_n2, x, psi, 12.0, varkappa=1.0)
    assert rep.count == count_all(form_n2, 12.0)


def test_count_khintchine_rational_center(form_n1):
    x = np.array([0.6, 0.8])  # the point (3,4,5) itself
    psi = geometry.parse_psi("pow:c=0.1,lambda=1")
    rep = count_khintchine(form_n1, x, psi, 6.0, varkappa=1.0)
    assert rep.count >= 1


def test_count_khintchine_double_loop_oracle(form_n2):
    rng = np.random.default_rng(7)
    x = rng.normal(size=3)
    x /= np.linalg.norm(x)
    psi = geometry.parse_psi("pow:c=0.9,lambda=0.6")
    T = 40.0
    rep = count_khintchine(form_n2, x, psi, T, varkappa=1.0)
    oracle = 0
    for cp in enumerate_primitive(form_n2, 39):
        p = np.asarray(cp.v[:-1], float) / cp.q
        if np.linalg.norm(p - x) < float(psi(cp.q)):
            oracle += 1
    assert rep.count == oracle


def test_cross_check_identity_standard(form_n1, form_n2):
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.normal(size=2)
        a /= np.linalg.norm(a)
        r = 0.05 + 0.8 * rng.random()
        T = 5.0 + 45.0 * rng.random()
        assert cross_check_identity(form_n1, a, r, T)
    a = rng.normal(size=3)
    a /= np.linalg.norm(a)
    assert cross_check_identity(form_n2, a, 0.5, 30.0)


def test_cross_check_identity_ellipsoid():
    E = EllipsoidForm.from_gram([[1, 0], [0, 2]])
    rng = np.random.default_rng(6)
    for _ in range(10):
        a = rng.normal(size=2)
        a /= np.linalg.norm(a)
        r = 0.1 + 0.7 * rng.random()
        assert cross_check_identity(E, a, r, 30.0)


def test_j_sum_examples():
    psi1 = geometry.parse_psi("pow:c=1,lambda=1")
    # n=2: J = harmonic sum
    T = 50.0
    H = sum(1.0 / q for q in range(1, 50))
    assert j_sum(psi1, 2, T) == pytest.approx(H, rel=1e-12)
    # psi == 1, n=1, T=5: J = 4
    assert j_sum(geometry.parse_psi("const:c=1"), 1, 5.0) == pytest.approx(4.0)
    # psi = q^-2, n=1: J converges to pi^2/6 minus the exact trigamma tail
    from scipy.special import polygamma

    psi2 = geometry.parse_psi("pow:c=1,lambda=2")
    partial = j_sum(psi2, 1, 2000.0)
    tail = float(polygamma(1, 2000))
    assert partial == pytest.approx(math.pi**2 / 6 - tail, abs=1e-10)


def test_i_sum_uses_higher_exponent():
    psi = geometry.parse_psi("pow:c=1,lambda=1")
    # n=1: J = sum q^-1, I = sum q^-3
    assert i_sum(psi, 1, 10.0) == pytest.approx(sum(q ** (-3.0) for q in range(1, 10)))


def test_estimate_kappa_stability(form_n2, points_n2_small):
    # desk-scale stability; the acceptance suite checks 1% at T = 1000/2000
    k1, om1, vk1 = estimate_kappa(form_n2, 400.0, points=points_n2_small)
    k2, om2, vk2 = estimate_kappa(form_n2, 200.0, points=points_n2_small)
    assert abs(k1 - k2) / k1 < 0.05
    assert om1 == pytest.approx(2 * k1)
    assert vk1 == pytest.approx(geometry.c_cap(2) * k1)  # exact by construction


def test_estimate_kappa_insufficient(form_n1):
    with pytest.raises(ValueError):
        estimate_kappa(form_n1, 10.0)


def test_predicted_exponents_n2():
    t = predicted_exponents(2)
    assert t.beta == 1.0 and not t.has_secondary_term
    r_exp, T_exp = t.equidistribution_error()
    assert r_exp == pytest.approx(4 / 7)
    assert T_exp == pytest.approx(2 / 7)
    assert t.khintchine_exponent() == pytest.approx(5 / 6)
    assert t.generic_cap_exponent() == pytest.approx(5 / 6)
    assert t.all_translates_exponent() == pytest.approx(1 - 1 / 7)
    assert t.subgroup_exponent() == pytest.approx(5 / 6)


def test_predicted_exponents_n3_no_secondary():
    t = predicted_exponents(3)
    assert not t.has_secondary_term and t.beta == 1.0


def test_predicted_exponents_n9_reports_both():
    t = predicted_exponents(9)
    assert t.has_secondary_term and t.s_n == 5
    assert t.beta_variance == pytest.approx(10 / 9)
    assert t.beta_dioph == pytest.approx(9 / 10)


def test_khintchine_main_term_constant_identity(form_n2, points_n2_small):
    # omega * c_cap * Jcal == n * varkappa * Jcal: the constants match exactly
    kappa, omega, varkappa = estimate_kappa(form_n2, 300.0, points=points_n2_small)
    n = 2
    J_cal = 123.456
    assert omega * geometry.c_cap(n) * J_cal == pytest.approx(n * varkappa * J_cal, rel=1e-12)


def test_report_fields(form_n2, points_n2_small):
    x = np.array([1.0, 0.0, 0.0])
    rep = count_cap(form_n2, x, 0.5, 100.0, kappa=1.64, points=points_n2_small)
    assert rep.discrepancy == rep.count - rep.main_term
    assert rep.relative_error == abs(rep.discrepancy) / max(rep.main_term, 1.0)
    d = rep.as_dict()
    assert d["count"] == rep.count and "query_kind" in d
