import numpy as np
import pytest

import scipy.special

from m3sph import spherical
from m3sph.errors import ConsistencyError
from m3sph.so3rep import Rotation, build_irrep, dtau, tau
from m3sph.spherical import (
    band_limit_degree,
    build_tridiagonal,
    check_positive_type,
    constant_spherical_function,
    eval_phi,
    eval_phi_batch,
    phi_method1,
    phi_method2,
    phi_method2_batch,
    phi_method3,
    projections,
    sphere_rule,
)


# ---------------------------------------------------------------------------
# tridiagonal operator
# ---------------------------------------------------------------------------


def test_tridiagonal_m1_s1_entries():
    op = build_tridiagonal(1, 1.0)
    assert np.allclose(op.superdiag, [-2.0, -5 / 3])
    assert np.allclose(op.subdiag, [-1 / 3, -1 / 5])
    eigs = np.sort(np.linalg.eigvals(op.matrix()).real)
    assert np.allclose(eigs, [-1.0, 0.0, 1.0], atol=1e-13)


def test_tridiagonal_m0():
    op = build_tridiagonal(0, 2.7)
    assert op.matrix().shape == (1, 1)
    assert op.matrix()[0, 0] == 0.0
    assert np.array_equal(op.eigenvalues(), [0.0])


@pytest.mark.parametrize("m", [0, 1, 2, 4, 6])
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 7.3])
def test_tridiagonal_spectrum(m, s):
    op = build_tridiagonal(m, s)
    eigs = np.sort(np.linalg.eigvals(op.matrix()).real)
    assert np.max(np.abs(eigs - op.eigenvalues())) < 1e-10 * s


def test_tridiagonal_rejects_nonpositive_s():
    with pytest.raises(ValueError):
        build_tridiagonal(1, 0.0)


# ---------------------------------------------------------------------------
# constructions 1 and 3
# ---------------------------------------------------------------------------


def test_method1_frozen_eigenvectors():
    # solved by hand from the 3x3 shifted systems
    assert np.allclose(phi_method1(1, 1.0, 0).coeffs, [1.0, 0.0, -0.2], atol=1e-12)
    assert np.allclose(phi_method1(1, 1.0, 1).coeffs, [1.0, -0.5, 0.1], atol=1e-12)
    assert np.allclose(phi_method1(1, 1.0, -1).coeffs, [1.0, 0.5, 0.1], atol=1e-12)
    # scaling law: u_l(s) = s^l u_l(1)
    assert np.allclose(phi_method1(1, 2.0, 1).coeffs, [1.0, -1.0, 0.4], atol=1e-12)


def test_method3_frozen():
    assert np.allclose(phi_method3(1, 1.0, 0).coeffs, [1.0, 0.0, -0.2], atol=1e-12)
    assert np.allclose(phi_method3(0, 5.0, 0).coeffs, [1.0])


@pytest.mark.parametrize("m", [0, 1, 2, 3, 6])
def test_methods_1_and_3_agree_and_lead_with_one(m):
    for s in (0.5, 1.0, 2.0):
        for j in range(-m, m + 1):
            c1 = phi_method1(m, s, j).coeffs
            c3 = phi_method3(m, s, j).coeffs
            assert abs(c3[0] - 1.0) < 1e-8
            assert np.max(np.abs(c1 - c3)) < 1e-8 if m == 6 else np.max(np.abs(c1 - c3)) < 1e-10


def test_eigenvector_scaling_law():
    for m in (1, 2, 3):
        for j in range(-m, m + 1):
            u1 = phi_method1(m, 1.0, j).coeffs
            for s in (0.5, 2.0):
                us = phi_method1(m, s, j).coeffs
                assert np.allclose(us, u1 * s ** np.arange(2 * m + 1), atol=1e-10 * max(1, s) ** (2 * m))


def test_method1_rejects_out_of_range():
    with pytest.raises(ValueError):
        phi_method1(1, 1.0, 2)
    with pytest.raises(ValueError):
        phi_method1(1, -1.0, 0)


def test_method1_internal_consistency_guard():
    # corrupting the spectrum must trip the eigenvalue-matching error
    good = build_tridiagonal(2, 1.0)
    import m3sph.spherical as sph

    orig = sph.build_tridiagonal
    try:
        sph.build_tridiagonal = lambda m, s: spherical.TridiagonalOperator(
            m=m, s=s, superdiag=good.superdiag * 3.7, subdiag=good.subdiag
        )
        with pytest.raises(ConsistencyError):
            sph.phi_method1(2, 1.0, 1)
    finally:
        sph.build_tridiagonal = orig


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def test_phi_at_origin_is_identity():
    for m in (0, 1, 3):
        for j in range(-m, m + 1):
            spec = phi_method1(m, 1.3, j)
            assert np.allclose(eval_phi(spec, np.zeros(3)), np.eye(2 * m + 1), atol=1e-13)


def test_m0_is_classical_spherical_function():
    spec = phi_method1(0, 2.0, 0)
    x = np.array([1.0, 0.0, 0.0])
    assert eval_phi(spec, x)[0, 0] == pytest.approx(np.sin(2.0) / 2.0, abs=1e-14)
    y = np.array([0.3, -1.2, 0.8])
    r = np.linalg.norm(y)
    assert eval_phi(spec, y)[0, 0] == pytest.approx(np.sin(2 * r) / (2 * r), abs=1e-14)


def test_m1_j0_series_expansion():
    # phi = f_0 I - (1/5) f_2 (Q_1^2 + (2/3) r^2 I)
    from m3sph.radial import f as radf

    rng = np.random.default_rng(0)
    rep = build_irrep(1)
    spec = phi_method1(1, 1.0, 0)
    for _ in range(5):
        x = rng.normal(size=3)
        r = np.linalg.norm(x)
        d = dtau(rep, x)
        expected = float(radf(0, r)) * np.eye(3) - 0.2 * float(radf(2, r)) * (
            d @ d + (2 / 3) * r * r * np.eye(3)
        )
        assert np.allclose(eval_phi(spec, x), expected, atol=1e-13)


def test_constant_spec_evaluates_to_identity():
    spec = constant_spherical_function(2)
    xs = np.random.default_rng(1).normal(size=(4, 3))
    vals = eval_phi_batch(spec, xs)
    assert np.allclose(vals, np.eye(5), atol=0)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def test_projections_e1_weight_basis():
    fam = projections(1, [1.0, 0.0, 0.0])
    assert np.allclose(fam.P(0), np.diag([0, 1, 0]), atol=1e-14)
    assert np.allclose(fam.P(-1), np.diag([1, 0, 0]), atol=1e-14)
    assert np.allclose(fam.P(1), np.diag([0, 0, 1]), atol=1e-14)


def test_projections_direction_normalized():
    f1 = projections(2, [0.3, -0.4, 1.1])
    f2 = projections(2, [0.6, -0.8, 2.2])
    assert np.max(np.abs(f1.matrices - f2.matrices)) < 1e-13


@pytest.mark.parametrize("m", [1, 2, 3])
def test_projection_family_invariants(m):
    rng = np.random.default_rng(5)
    rep = build_irrep(m)
    for _ in range(4):
        xi = rng.normal(size=3)
        fam = projections(m, xi)
        d = dtau(rep, fam.direction)
        total = np.zeros((rep.dim, rep.dim), dtype=complex)
        # eigh-based spectral projections are the independent oracle here
        w, v = np.linalg.eigh(-1j * d)
        for j in range(-m, m + 1):
            p = fam.P(j)
            total += p
            assert np.max(np.abs(p @ p - p)) < 1e-12
            assert np.max(np.abs(p - p.conj().T)) < 1e-12
            assert np.max(np.abs(d @ p - 1j * j * p)) < 1e-12 * (1 + m)
            col = v[:, np.argmin(np.abs(w - j))]
            assert np.max(np.abs(p - np.outer(col, col.conj()))) < 1e-11
            for l in range(-m, m + 1):
                if l != j:
                    assert np.max(np.abs(p @ fam.P(l))) < 1e-12
        assert np.max(np.abs(total - np.eye(rep.dim))) < 1e-12


def test_projection_parity_and_covariance():
    rng = np.random.default_rng(6)
    m = 2
    rep = build_irrep(m)
    xi = rng.normal(size=3)
    fam = projections(m, xi)
    famneg = projections(m, -xi)
    for j in range(-m, m + 1):
        assert np.max(np.abs(fam.P(-j) - famneg.P(j))) < 1e-12
    for _ in range(5):
        k = Rotation.random(rng)
        fam2 = projections(m, k.apply(fam.direction))
        tk = tau(rep, k)
        for j in (-m, 0, m):
            assert np.max(np.abs(fam2.P(j) - tk @ fam.P(j) @ tk.conj().T)) < 1e-10


def test_projections_reject_zero():
    with pytest.raises(ValueError):
        projections(1, [0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# sphere rule
# ---------------------------------------------------------------------------


def test_sphere_rule_basics():
    rule = sphere_rule(0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    rule = sphere_rule(2)
    assert np.sum(rule.weights * rule.nodes[:, 0] ** 2) == pytest.approx(1 / 3, abs=1e-14)
    assert np.sum(rule.weights * rule.nodes[:, 1] ** 2) == pytest.approx(1 / 3, abs=1e-14)
    assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0, atol=1e-14)
    with pytest.raises(ValueError):
        sphere_rule(-1)


def _sph_harm(l, mm, nodes):
    theta = np.arccos(np.clip(nodes[:, 2], -1, 1))
    phi = np.arctan2(nodes[:, 1], nodes[:, 0])
    if hasattr(scipy.special, "sph_harm_y"):
        return scipy.special.sph_harm_y(l, mm, theta, phi)
    return scipy.special.sph_harm(mm, l, phi, theta)


@pytest.mark.parametrize("degree", [4, 9, 16])
def test_sphere_rule_integrates_harmonics_exactly(degree):
    rule = sphere_rule(degree)
    # mean-zero harmonics of degree <= rule degree integrate to zero
    for l in range(1, degree + 1):
        for mm in {-l, 0, min(1, l), l}:
            val = np.sum(rule.weights * _sph_harm(l, mm, rule.nodes))
            assert abs(val) < 1e-13
    # normalized measure: int |Y_l^m|^2 = 1/(4 pi), needs degree >= 2l
    for l in range(0, degree // 2 + 1):
        y = _sph_harm(l, min(l, 1), rule.nodes)
        val = np.sum(rule.weights * np.abs(y) ** 2)
        assert val == pytest.approx(1 / (4 * np.pi), rel=1e-12)


# ---------------------------------------------------------------------------
# construction 2 and cross-method agreement
# ---------------------------------------------------------------------------


def test_method2_at_origin_identity():
    for m in (0, 1, 2):
        val = phi_method2(m, 1.5, 0, np.zeros(3))
        assert np.allclose(val, np.eye(2 * m + 1), atol=1e-12)


def test_method2_m0_plane_wave_average():
    x = np.array([0.7, -0.2, 1.1])
    r = np.linalg.norm(x)
    for s in (0.5, 2.0):
        val = phi_method2(0, s, 0, x)
        assert abs(val[0, 0] - np.sin(s * r) / (s * r)) < 1e-10


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_three_method_agreement(m):
    rng = np.random.default_rng(7)
    for s in (0.5, 1.0, 2.0):
        for j in range(-m, m + 1):
            xs = rng.uniform(-5 / np.sqrt(3), 5 / np.sqrt(3), size=(8, 3))
            v1 = eval_phi_batch(phi_method1(m, s, j), xs)
            v3 = eval_phi_batch(phi_method3(m, s, j), xs)
            assert np.max(np.abs(v1 - v3)) < 1e-10
            v2 = phi_method2_batch(m, s, j, xs)
            assert np.max(np.abs(v1 - v2)) < 1e-6


def test_method2_warns_when_under_resolved():
    x = np.array([3.0, 1.0, 0.0])
    rule = sphere_rule(6)  # far below the band-limit heuristic at s=2
    assert sphere_rule(band_limit_degree(1, 2.0, np.linalg.norm(x))).degree > 6
    with pytest.warns(UserWarning, match="under-resolve"):
        phi_method2(1, 2.0, 0, x, rule=rule)


# ---------------------------------------------------------------------------
# structural identities
# ---------------------------------------------------------------------------


def test_equivariance_under_rotations():
    rng = np.random.default_rng(8)
    for m, s, j in ((1, 1.0, 1), (2, 0.5, -2), (2, 2.0, 0)):
        rep = build_irrep(m)
        spec = phi_method1(m, s, j)
        for _ in range(20):
            k = Rotation.random(rng)
            x = rng.normal(size=3) * 1.5
            tk = tau(rep, k)
            lhs = tk @ eval_phi(spec, k.inverse().apply(x)) @ tk.conj().T
            assert np.max(np.abs(lhs - eval_phi(spec, x))) < 1e-8


def test_parity_and_conjugation():
    rng = np.random.default_rng(9)
    for m in (1, 2):
        for s in (0.5, 2.0):
            for j in range(-m, m + 1):
                spec = phi_method1(m, s, j)
                specm = phi_method1(m, s, -j)
                xs = rng.normal(size=(6, 3))
                a = eval_phi_batch(spec, xs)
                b = eval_phi_batch(specm, -xs)
                assert np.max(np.abs(a - b)) < 1e-10
                c = eval_phi_batch(spec, -xs)
                assert np.max(np.abs(a.conj().transpose(0, 2, 1) - c)) < 1e-10


def test_laplacian_eigenfunction_fd():
    rng = np.random.default_rng(10)
    h = 1e-4
    for m, s, j in ((0, 1.0, 0), (1, 2.0, 1), (2, 0.5, -1)):
        spec = phi_method1(m, s, j)
        for _ in range(4):
            x = rng.normal(size=3)
            acc = np.zeros((2 * m + 1, 2 * m + 1), dtype=complex)
            f0 = eval_phi(spec, x)
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                acc += eval_phi(spec, x + e) - 2 * f0 + eval_phi(spec, x - e)
            lap = acc / (h * h)
            assert np.max(np.abs(lap + s * s * f0)) < 1e-5 * (1 + s * s)


def test_first_order_eigenfunction_analytic():
    rng = np.random.default_rng(11)
    for m, s, j in ((0, 1.0, 0), (1, 1.0, -1), (2, 2.0, 2), (3, 0.5, 0)):
        spec = phi_method1(m, s, j)
        for _ in range(4):
            x = rng.normal(size=3)
            out = spherical.apply_dtau_analytic(spec, x)
            assert np.max(np.abs(out - s * j * eval_phi(spec, x))) < 1e-6 * (1 + s)


def test_positive_type():
    rng = np.random.default_rng(12)
    for m in (0, 1, 2, 3):
        rep_dim = 2 * m + 1
        for s in (1.0, 2.0):
            for j in range(-m, m + 1):
                spec = phi_method1(m, s, j)
                for _ in range(3):
                    pts = rng.uniform(-2, 2, size=(6, 3))
                    vecs = rng.normal(size=(6, rep_dim)) + 1j * rng.normal(size=(6, rep_dim))
                    assert check_positive_type(spec, pts, vecs) > -1e-8


def test_positive_type_single_point():
    spec = phi_method1(1, 1.0, 0)
    v = np.array([1.0, 2.0, -1.0])
    lam = check_positive_type(spec, [np.zeros(3)], [v])
    assert lam == pytest.approx(float(v @ v), rel=1e-12)


def test_positive_type_rejects_large_configs():
    spec = phi_method1(0, 1.0, 0)
    pts = np.zeros((13, 3))
    vecs = np.ones((13, 1))
    with pytest.raises(ValueError):
        check_positive_type(spec, pts, vecs)
