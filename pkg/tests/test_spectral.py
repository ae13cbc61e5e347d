import math

import numpy as np
import pytest

from conecount import geometry, spectral
from conecount.spectral import (
    SeparableFunction,
    SpectralError,
    cap_coefficients_closed,
    cap_coefficients_quadrature,
    cap_component_norms,
    harmonic_dim,
    m_ff,
    mellin,
    p_d,
    zonal_profile,
)


def test_mellin_examples():
    assert mellin(((1.0, 2.0),), 1) == pytest.approx(0.5)
    # positivity at s = n for indicators
    for interval in ((0.5, 3.0), (1.0, 2.0), (0.2, 0.4)):
        assert mellin((interval,), 2) > 0
    # unbounded upper end
    assert mellin(((2.0, math.inf),), 3) == pytest.approx(2.0 ** (-3) / 3)
    with pytest.raises(SpectralError):
        mellin(((1.0, 2.0),), 0)
    with pytest.raises(SpectralError):
        mellin(((2.0, 1.0),), 1)


def test_mellin_dilation_substitution():
    # shrinking the y-intervals by lam multiplies the transform by lam^s
    intervals = ((0.7, 1.9),)
    s = 1.3
    lam = 2.6
    scaled = tuple((a / lam, b / lam) for a, b in intervals)
    assert mellin(scaled, s) == pytest.approx(lam**s * mellin(intervals, s), rel=1e-12)


def test_p_d_values():
    assert p_d(5, 0, 2.2) == 1.0
    assert p_d(2, 1, 1.5) == pytest.approx(1 / 3)
    assert p_d(3, 5, 2.2) * p_d(3, 5, 3 - 2.2) == pytest.approx(1.0, rel=1e-12)


def test_p_d_unit_modulus_on_critical_line():
    for n in (1, 2, 3, 9):
        for d in range(0, 65):
            for t in (0.37, 2.1):
                assert abs(abs(p_d(n, d, n / 2 + 1j * t)) - 1.0) < 1e-10


def test_p_d_positive_decreasing_in_real_window():
    n, s = 9, 5.0
    vals = [p_d(n, d, s) for d in range(40)]
    assert all(v > 0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_quadrature_coefficients_match_closed_form():
    for n in (1, 2, 3, 9):
        for r in (0.3, 0.9, 1.5):
            cq = cap_coefficients_quadrature(n, r, 64)
            cc = cap_coefficients_closed(n, r, 64)
            assert np.max(np.abs(cq - cc)) < 1e-12


def test_zonal_profile_normalization():
    for n in (1, 2, 3, 9):
        for d in (0, 1, 5, 20):
            assert zonal_profile(n, d, 1.0) == pytest.approx(1.0, rel=1e-10)


def test_profile_l2_norm_is_inverse_dimension():
    # integral of P_d^2 against the latitude weight equals 1/N(n, d)
    for n in (2, 3):
        x, w = np.polynomial.legendre.leggauss(512)
        weight = (1 - x * x) ** ((n - 2) / 2.0)
        z = math.sqrt(math.pi) * math.gamma(n / 2) / math.gamma((n + 1) / 2)
        for d in (1, 3, 8):
            prof = zonal_profile(n, d, x)
            val = float(np.sum(w * weight * prof**2)) / z
            assert val == pytest.approx(1 / harmonic_dim(n, d), rel=1e-8)


def test_parseval_circle_strict():
    # n = 1 has analytic coefficients, so Parseval can be driven to 1e-6
    r = 0.8
    theta0 = math.acos(1 - r * r / 2)
    sigma = geometry.cap_measure_exact(1, r)
    D = 200_000
    ds = np.arange(1, D + 1)
    coeffs = np.sin(ds * theta0) / (ds * math.pi)
    total = sigma**2 + float(np.sum(2 * coeffs**2))
    assert abs(total - sigma) < 1e-6


def test_parseval_partial_sums_increase_to_total():
    # indicator caps have slowly decaying harmonics on n >= 2: the partial
    # sums must stay below ||phi||^2 and the deficiency must shrink with D
    for n in (2, 3):
        r = 0.7
        sigma = geometry.cap_measure_exact(n, r)
        norms = cap_component_norms(n, r, 512, method="closed")
        partial_small = float(np.sum(norms[:64]))
        partial_big = float(np.sum(norms))
        assert partial_small <= sigma + 1e-12
        assert partial_big <= sigma + 1e-12
        assert sigma - partial_big < (sigma - partial_small) / 2


def test_m_ff_full_sphere():
    f = SeparableFunction(2, ((1.0, 2.0),), None)
    M, tail = m_ff(f, f, 1.4)
    assert M == pytest.approx(mellin(((1.0, 2.0),), 1.4) ** 2)
    assert tail == 0.0


def test_m_ff_symmetric_and_scaling():
    f = SeparableFunction(2, ((1.0, 2.0),), 0.6)
    f2 = SeparableFunction(2, ((0.5, 1.5),), 0.9)
    s = 1.4
    a, _ = m_ff(f, f2, s)
    b, _ = m_ff(f2, f, s)
    assert a == pytest.approx(b, rel=1e-12)
    lam1, lam2 = 1.7, 0.43
    scaled, _ = m_ff(f.scaled(lam1), f2.scaled(lam2), s)
    assert scaled == pytest.approx(lam1**s * lam2**s * a, rel=1e-10)


def test_m_ff_tail_bound_dominates_truncation():
    f = SeparableFunction(2, ((1.0, 2.0),), 0.6)
    s = 1.4
    coarse, tail_coarse = m_ff(f, f, s, d_max=16)
    fine, tail_fine = m_ff(f, f, s, d_max=256)
    assert abs(fine - coarse) <= tail_coarse + 1e-12
    assert tail_fine < tail_coarse


def test_m_ff_rejects_bad_s():
    f = SeparableFunction(2, ((1.0, 2.0),), 0.6)
    with pytest.raises(SpectralError):
        m_ff(f, f, 0.5)
    with pytest.raises(SpectralError):
        m_ff(f, f, 2.5)


def test_rho_hat_holder_bound():
    # rho^(s) <= 2 rho^(n)^{s/n} for indicator rho, n >= 2, s in (n/2, n)
    for n in (2, 3, 9):
        for interval in ((0.5, 1.0), (1.0, 2.0), (0.25, 0.5), (2.0, 4.0), (0.1, 0.2)):
            for s in np.linspace(n / 2 + 0.05, n - 0.05, 9):
                lhs = mellin((interval,), float(s))
                rhs = 2 * mellin((interval,), n) ** (s / n)
                assert lhs <= rhs


def test_separable_measure_and_scaling():
    f = SeparableFunction(2, ((1.0, 2.0),), 0.5)
    expect = mellin(((1.0, 2.0),), 2) * geometry.cap_measure_exact(2, 0.5)
    assert f.cone_measure() == pytest.approx(expect)
    g = f.scaled(2.0)
    assert g.intervals == ((0.5, 1.0),)
    with pytest.raises(SpectralError):
        f.scaled(0.0)
