import math

import numpy as np
import pytest

from conecount import group
from conecount.group import (
    GroupError,
    NeighborhoodSpec,
    alpha0,
    e0,
    haar_so,
    identity,
    in_g_neighborhood,
    in_p_eps,
    in_p_tilde_eps,
    iwasawa_a,
    iwasawa_u,
    parabolic_coordinates,
    rng_from_seed,
    rotation_k,
    rotation_m,
    sample_neighborhood,
    sample_p_eps,
    sample_p_tilde,
    sample_sphere,
    section,
)
from conecount.quadform import standard_form_value


def test_torus_action_on_base_point():
    for n in (1, 2, 3):
        a2 = iwasawa_a(2.0, n)
        assert np.allclose(e0(n) @ a2.mat, 0.5 * e0(n))
        assert np.allclose(e0(n) @ iwasawa_a(0.25, n).mat, 4.0 * e0(n))


def test_unipotent_fixes_base_point():
    rng = rng_from_seed(0)
    for n in (1, 2, 3):
        for _ in range(5):
            x = rng.normal(size=n)
            assert np.allclose(e0(n) @ iwasawa_u(x).mat, e0(n), atol=1e-12)


def test_torus_operator_norm():
    for y in (0.2, 0.5, 1.0, 3.0):
        assert iwasawa_a(y, 2).op_norm() == pytest.approx(max(y, 1 / y), rel=1e-12)


def test_unipotent_operator_norm_formula():
    rng = rng_from_seed(4)
    for _ in range(10):
        x = rng.normal(size=3) * 0.5
        nx = np.linalg.norm(x)
        expected = 1 + (nx**2 + nx * math.sqrt(nx**2 + 4)) / 2
        assert iwasawa_u(x).op_norm() == pytest.approx(expected, rel=1e-10)


def test_elements_preserve_form_and_volume():
    rng = rng_from_seed(7)
    n = 2
    g = (
        iwasawa_u(rng.normal(size=n))
        @ iwasawa_a(1.7, n)
        @ rotation_k(haar_so(n + 1, rng))
        @ rotation_m(haar_so(n, rng))
    )
    assert abs(np.linalg.det(g.mat) - 1.0) < 1e-9
    for _ in range(50):
        v = rng.normal(size=n + 2) * 10
        assert abs(standard_form_value(v @ g.mat) - standard_form_value(v)) <= 1e-9 * float(v @ v)


def test_rotation_k_validation():
    with pytest.raises(GroupError):
        rotation_k(np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(GroupError):
        rotation_k(np.diag([1.0, -1.0]))  # determinant -1


def test_section_examples():
    n = 3
    assert np.allclose(section(alpha0(n)).mat, np.eye(n + 2))
    al = np.zeros(n + 1)
    al[1] = 1.0
    k = section(al)
    assert np.allclose(e0(n) @ k.mat, np.append(al, 1.0), atol=1e-12)
    assert np.allclose(e0(n) @ k.mat @ k.inv().mat, e0(n), atol=1e-12)


def test_section_antipode_branch():
    for n in (1, 2, 4):
        k = section(-alpha0(n))
        assert np.allclose(e0(n) @ k.mat, np.append(-alpha0(n), 1.0), atol=1e-12)
        near = -alpha0(n) + 1e-9 * np.eye(n + 1)[1]
        near /= np.linalg.norm(near)
        k2 = section(near)
        assert np.allclose(e0(n) @ k2.mat, np.append(near, 1.0), atol=1e-9)


def test_section_random_directions():
    rng = rng_from_seed(8)
    for n in (1, 2, 3):
        for _ in range(50):
            al = sample_sphere(n, rng)
            k = section(al)
            assert np.allclose(e0(n) @ k.mat, np.append(al, 1.0), atol=1e-10)


def test_sample_sphere_golden_vector():
    v = sample_sphere(1, rng_from_seed(42))
    assert np.allclose(v, [-0.9856516, 0.16879256], atol=1e-7)


def test_sample_sphere_moments():
    rng = rng_from_seed(12)
    n = 2
    draws = np.array([sample_sphere(n, rng) for _ in range(10**5)])
    assert np.linalg.norm(draws.mean(axis=0)) <= 0.02
    second = (draws**2).mean(axis=0)
    assert np.allclose(second, 1 / (n + 1), atol=0.01)


def test_identity_in_every_neighborhood():
    rng = rng_from_seed(5)
    for _ in range(20):
        n = 2
        al = sample_sphere(n, rng)
        eps = 0.05 + 0.9 * rng.random()
        r = 0.05 + 0.9 * rng.random()
        assert in_g_neighborhood(identity(n), eps, r, al)
        assert in_p_eps(identity(n), eps)
        assert in_p_tilde_eps(identity(n), eps)


def test_sampled_g_neighborhood_properties():
    rng = rng_from_seed(9)
    n = 2
    al = sample_sphere(n, rng)
    eps, r = 0.3, 0.4
    spec = NeighborhoodSpec("G_eps_r_alpha", eps, r, tuple(al))
    for _ in range(100):
        h = sample_neighborhood(spec, rng)
        assert in_g_neighborhood(h, eps, r, al)
        assert h.op_norm() < 1 + eps
        # inversion invariance of the neighborhood
        assert in_g_neighborhood(h.inv(), eps, r, al)


def test_g_neighborhood_product_law():
    rng = rng_from_seed(10)
    n = 2
    al = sample_sphere(n, rng)
    r = 0.5
    for _ in range(10**4):
        e1 = 0.02 + 0.3 * rng.random()
        e2 = 0.02 + 0.3 * rng.random()
        h1 = sample_neighborhood(NeighborhoodSpec("G_eps_r_alpha", e1, r, tuple(al)), rng)
        h2 = sample_neighborhood(NeighborhoodSpec("G_eps_r_alpha", e2, r, tuple(al)), rng)
        assert in_g_neighborhood(h1 @ h2, 3 * (e1 + e2), r, al)


def test_parabolic_samplers():
    rng = rng_from_seed(13)
    n = 2
    for _ in range(100):
        eps = 0.05 + 0.6 * rng.random()
        p = sample_p_eps(n, eps, rng)
        assert in_p_eps(p, eps)
        pt = sample_p_tilde(n, eps, rng)
        assert in_p_tilde_eps(pt, eps)
        # inversion symmetry is part of the defining predicate
        assert in_p_tilde_eps(pt.inv(), eps)


def test_parabolic_coordinates_round_trip():
    rng = rng_from_seed(14)
    n = 3
    for _ in range(30):
        m = rotation_m(haar_so(n, rng))
        y = math.exp(rng.normal() * 0.3)
        x = rng.normal(size=n) * 0.4
        p = m @ iwasawa_a(y, n) @ iwasawa_u(x)
        m_block, y_out, x_out = parabolic_coordinates(p)
        assert y_out == pytest.approx(y, rel=1e-9)
        assert np.allclose(x_out, x, atol=1e-9)
        assert np.allclose(m_block, m.mat[1 : n + 1, 1 : n + 1], atol=1e-9)


def test_neighborhood_spec_validation():
    with pytest.raises(GroupError):
        NeighborhoodSpec("G_eps_r_alpha", 0.5)  # missing alpha
    with pytest.raises(GroupError):
        NeighborhoodSpec("P_eps", 1.5, n=2)
    with pytest.raises(GroupError):
        NeighborhoodSpec("P_eps", 0.5)  # missing n


def test_haar_so_is_orthogonal():
    rng = rng_from_seed(15)
    for dim in (1, 2, 3, 5):
        q = haar_so(dim, rng)
        assert np.allclose(q @ q.T, np.eye(dim), atol=1e-10)
        assert np.linalg.det(q) == pytest.approx(1.0, abs=1e-10)
