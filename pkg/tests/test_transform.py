import numpy as np
import pytest

from m3sph import fieldio, spherical, transform
from m3sph.errors import DecompositionError
from m3sph.so3rep import Rotation, build_irrep, tau

GAUSS_FT = lambda s: (2 * np.pi) ** 1.5 * np.exp(-s * s / 2.0)


@pytest.fixture(scope="module")
def gaussian_m1():
    return fieldio.synthesize("gaussian", 1, {"sigma": 1.0})


# ---------------------------------------------------------------------------
# classical transform
# ---------------------------------------------------------------------------


def test_gaussian_classical_ft_radial_path(gaussian_m1):
    rng = np.random.default_rng(0)
    for _ in range(5):
        y = rng.normal(size=3) * 1.5
        fhat = transform.classical_ft(gaussian_m1, y)
        expected = GAUSS_FT(np.linalg.norm(y)) * np.eye(3)
        assert np.max(np.abs(fhat - expected)) < 1e-10
    # y = 0 integrates the field
    fhat0 = transform.classical_ft(gaussian_m1, np.zeros(3))
    assert np.max(np.abs(fhat0 - GAUSS_FT(0.0) * np.eye(3))) < 1e-10


def test_gaussian_classical_ft_grid_path(gaussian_m1):
    G = gaussian_m1.to_grid(extent=8.0, n=33)
    y = np.array([1.1, -0.4, 0.7])
    fhat = transform.classical_ft(G, y)
    expected = GAUSS_FT(np.linalg.norm(y)) * np.eye(3)
    assert np.max(np.abs(fhat - expected)) < 1e-8


def test_radial_vs_grid_classical_ft_nontrivial_component():
    # the fast 1-D route must match full 3-D quadrature on a Q_1 component
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0, "component": 1})
    G = F.to_grid(extent=8.0, n=33)
    rng = np.random.default_rng(1)
    for _ in range(4):
        y = rng.normal(size=3)
        a = transform.classical_ft(F, y)
        b = transform.classical_ft(G, y)
        assert np.max(np.abs(a - b)) < 1e-8


@pytest.mark.parametrize("component", [2, 3, 4])
def test_radial_vs_grid_classical_ft_higher_components(component):
    # pins the phase factor and radial weight at every polynomial order
    F = fieldio.synthesize("gaussian", 2, {"sigma": 1.0, "component": component})
    G = F.to_grid(extent=8.0, n=33)
    rng = np.random.default_rng(component)
    for _ in range(2):
        y = rng.normal(size=3)
        a = transform.classical_ft(F, y)
        b = transform.classical_ft(G, y)
        assert np.max(np.abs(a - b)) < 1e-8


def test_classical_ft_equivariance(gaussian_m1):
    F = fieldio.synthesize("gaussian", 2, {"sigma": 1.0, "component": 2})
    rep = build_irrep(2)
    rng = np.random.default_rng(2)
    for _ in range(5):
        k = Rotation.random(rng)
        y = rng.normal(size=3)
        tk = tau(rep, k)
        lhs = transform.classical_ft(F, k.apply(y))
        rhs = tk @ transform.classical_ft(F, y) @ tk.conj().T
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_zero_field_transforms_to_zero():
    prof = [
        fieldio.RadialProfile(
            evaluator=lambda r: np.zeros_like(np.asarray(r), dtype=complex),
            label={"decays": True},
        )
        for _ in range(3)
    ]
    F = transform.MatrixField.radial(1, prof, np.linspace(0, 10, 50))
    assert np.max(np.abs(transform.classical_ft(F, np.ones(3)))) == 0.0
    assert np.max(np.abs(transform.h_decompose(F, 1.0))) == 0.0


def test_classical_ft_requires_decay_metadata():
    prof = [
        fieldio.RadialProfile(evaluator=lambda r: np.ones_like(r, dtype=complex), label={})
        for _ in range(3)
    ]
    F = transform.MatrixField.radial(1, prof, np.linspace(0, 10, 50))
    with pytest.raises(ValueError, match="decay"):
        transform.classical_ft(F, np.ones(3))


# ---------------------------------------------------------------------------
# h decomposition and the spherical transform
# ---------------------------------------------------------------------------


def test_h_decompose_gaussian(gaussian_m1):
    for s in (0.5, 1.7, 3.0):
        h = transform.h_decompose(gaussian_m1, s)
        assert np.max(np.abs(h - GAUSS_FT(s))) < 1e-10


def test_h_decompose_reassembles_fhat():
    F = fieldio.synthesize("plane-wave-packet", 1, {"s0": 1.5, "sigma": 1.2})
    fam = transform._proj_e1(1)
    for s in (0.4, 2.2):
        h = transform.h_decompose(F, s)
        fhat = transform.classical_ft(F, np.array([s, 0, 0]))
        recon = sum(h[j + 1] * fam.P(j) for j in range(-1, 2))
        assert np.max(np.abs(recon - fhat)) < 1e-8


def test_spherical_ft_gaussian_all_j():
    for m in (0, 1, 2):
        F = fieldio.synthesize("gaussian", m, {"sigma": 1.0})
        for s in (0.1, 1.0, 4.0):
            for j in range(-m, m + 1):
                val = transform.spherical_ft(F, s, j, mode="fast")
                assert abs(val - GAUSS_FT(s)) < 1e-4


def test_spherical_ft_direct_vs_fast():
    rng = np.random.default_rng(3)
    for m in (0, 1, 2):
        F = fieldio.synthesize("gaussian", m, {"sigma": 1.0})
        for _ in range(2):
            s = float(rng.uniform(0.3, 2.5))
            j = int(rng.integers(-m, m + 1))
            fast = transform.spherical_ft(F, s, j, mode="fast")
            direct = transform.spherical_ft(F, s, j, mode="direct", grid_n=33)
            assert abs(direct - fast) / (1 + abs(fast)) < 1e-4


def test_spherical_ft_parity_route(gaussian_m1):
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0, "component": 1})
    G = F.to_grid(extent=8.0, n=33)
    s, j = 1.4, 1
    fast = transform.spherical_ft(F, s, j, mode="fast")
    phi = spherical.eval_phi_batch(spherical.phi_method1(1, s, -j), G.grid_points())
    via_parity = np.einsum("nab,nba->", G.values_flat(), phi) * G.spacing**3 / 3
    assert abs(via_parity - fast) < 1e-6 * (1 + abs(fast))


def test_spherical_ft_validates_args(gaussian_m1):
    with pytest.raises(ValueError):
        transform.spherical_ft(gaussian_m1, -1.0, 0)
    with pytest.raises(ValueError):
        transform.spherical_ft(gaussian_m1, 1.0, 5)
    with pytest.raises(ValueError):
        transform.spherical_ft(gaussian_m1, 1.0, 0, mode="nope")


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------


def test_gaussian_roundtrip_pointwise():
    rng = np.random.default_rng(4)
    for m in (0, 1, 2):
        F = fieldio.synthesize("gaussian", m, {"sigma": 1.0})
        coeffs = transform.forward(F)
        pts = rng.uniform(-3 / np.sqrt(3), 3 / np.sqrt(3), size=(10, 3))
        rec = transform.inverse(coeffs, pts)
        ref = F.eval_points(pts)
        assert np.max(np.abs(rec - ref)) < 1e-3
        # profiles decay to zero at the top of the sampled range
        peak = np.max(np.abs(coeffs.values))
        assert np.max(np.abs(coeffs.values[:, -1])) < 1e-8 * peak


def test_roundtrip_validates_constant_analytically():
    # int_0^infty (2pi)^{3/2} e^{-r^2/2} r^2 dr * 1/(2 pi^2) = 1 exactly
    F = fieldio.synthesize("gaussian", 0, {"sigma": 1.0})
    coeffs = transform.forward(F)
    val = transform.inverse(coeffs, np.zeros((1, 3)))[0, 0, 0]
    assert val == pytest.approx(1.0, abs=1e-10)


def test_inverse_zero_coefficients():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    coeffs = transform.forward(F)
    coeffs.values[:] = 0
    out = transform.inverse(coeffs, np.ones((2, 3)))
    assert np.max(np.abs(out)) == 0.0


def test_inverse_warns_on_truncation():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    coeffs = transform.forward(F, s_max=1.0)  # artificially truncated
    with pytest.warns(UserWarning, match="truncat"):
        transform.inverse(coeffs, np.zeros((1, 3)))


def test_coefficients_json_roundtrip():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    coeffs = transform.forward(F)
    again = transform.SphericalCoefficients.from_json(coeffs.to_json())
    assert again.m == coeffs.m
    assert np.array_equal(again.s_grid, coeffs.s_grid)
    assert np.array_equal(again.values, coeffs.values)
    prof = again.profile(0)
    mid = 0.5 * (again.s_grid[3] + again.s_grid[4])
    # spline-level accuracy only; quadrature never goes through the spline
    assert abs(complex(prof(np.array([mid]))[0]) - GAUSS_FT(mid)) < 1e-4
    assert complex(prof(np.array([again.s_grid[-1] + 1.0]))[0]) == 0.0


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------


def test_unit_multiplier_is_identity():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    coeffs = transform.forward(F)
    out = transform.apply_multiplier(coeffs, lambda s, j: 1.0)
    assert np.array_equal(out.values, coeffs.values)


def test_multiplier_rejects_unbounded():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    coeffs = transform.forward(F)
    with pytest.raises(ValueError):
        transform.apply_multiplier(coeffs, lambda s, j: float("inf") if j == 0 else 1.0)


def _fd_stencils(F, pts, h=0.05):
    lap, dt = [], []
    rep = build_irrep(F.m)
    for x in pts:
        acc_l = np.zeros((F.dim, F.dim), dtype=complex)
        acc_d = np.zeros((F.dim, F.dim), dtype=complex)
        f0 = F.eval_points(x[None])[0]
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fp = F.eval_points((x + e)[None])[0]
            fm = F.eval_points((x - e)[None])[0]
            fp2 = F.eval_points((x + 2 * e)[None])[0]
            fm2 = F.eval_points((x - 2 * e)[None])[0]
            acc_l += (-fp2 + 16 * fp - 30 * f0 + 16 * fm - fm2) / (12 * h * h)
            acc_d += rep.generators[i] @ (-fp2 + 8 * fp - 8 * fm + fm2) / (12 * h)
        lap.append(acc_l)
        dt.append(acc_d)
    return np.stack(lap), np.stack(dt)


def test_laplacian_and_dtau_multipliers():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.5})
    coeffs = transform.forward(F)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1.5, 1.5, size=(5, 3))
    fd_lap, fd_dt = _fd_stencils(F, pts)
    lap = transform.inverse(transform.apply_multiplier(coeffs, lambda s, j: -s * s), pts)
    assert np.max(np.abs(lap - fd_lap)) / np.max(np.abs(fd_lap)) < 1e-3
    dt = transform.inverse(transform.apply_multiplier(coeffs, lambda s, j: s * j), pts)
    assert np.max(np.abs(dt - fd_dt)) / np.max(np.abs(fd_dt)) < 1e-3


# ---------------------------------------------------------------------------
# schwartz decomposition
# ---------------------------------------------------------------------------


def test_schwartz_decompose_identity_component():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    G = F.to_grid(extent=8.0, n=33)
    R = transform.schwartz_decompose(G)
    rho = np.linspace(0, 3, 13)
    assert np.max(np.abs(R.profiles[0](rho) - np.exp(-(rho**2) / 2))) < 1e-6
    assert np.max(np.abs(R.profiles[1](rho))) < 1e-8
    assert np.max(np.abs(R.profiles[2](rho))) < 1e-8


def test_schwartz_decompose_q1_component():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0, "component": 1})
    G = F.to_grid(extent=8.0, n=33)
    R = transform.schwartz_decompose(G)
    rho = np.linspace(0, 3, 13)
    assert np.max(np.abs(R.profiles[1](rho) - np.exp(-(rho**2) / 2))) < 1e-5
    assert np.max(np.abs(R.profiles[0](rho))) < 1e-8
    assert np.max(np.abs(R.profiles[2](rho))) < 1e-8


def test_schwartz_decompose_rejects_non_equivariant():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0})
    G = F.to_grid(extent=6.0, n=17)
    vals = G.values.copy()
    vals[3, 5, 2, 0, 1] += 0.4  # break equivariance at one node
    H = transform.MatrixField.grid(1, G.origin, G.spacing, vals)
    with pytest.raises(DecompositionError) as err:
        transform.schwartz_decompose(H)
    assert err.value.residual > 1e-3


def test_schwartz_decompose_zero_field():
    Z = transform.MatrixField.grid(
        1, np.array([-2.0] * 3), 0.5, np.zeros((9, 9, 9, 3, 3), dtype=complex)
    )
    R = transform.schwartz_decompose(Z)
    rho = np.linspace(0, 2, 5)
    for p in R.profiles:
        assert np.max(np.abs(p(rho))) == 0.0


# ---------------------------------------------------------------------------
# convolution homomorphism
# ---------------------------------------------------------------------------


def test_convolution_homomorphism():
    m = 1
    F1 = fieldio.synthesize("gaussian", m, {"sigma": 1.0})
    F2 = fieldio.synthesize("gaussian", m, {"sigma": 1.2, "component": 1})
    G1 = F1.to_grid(6.0, 17)
    G2 = F2.to_grid(6.0, 17)
    G3 = transform.convolve(G1, G2)
    for s in (0.8, 1.5):
        for j in range(-m, m + 1):
            lhs = transform.spherical_ft(G3, s, j, mode="fast")
            rhs = transform.spherical_ft(G1, s, j, mode="fast") * transform.spherical_ft(
                G2, s, j, mode="fast"
            )
            assert abs(lhs - rhs) < 1e-3 * (1 + abs(rhs))


def test_equivariance_diagnostic():
    F = fieldio.synthesize("gaussian", 1, {"sigma": 1.0, "component": 1})
    G = F.to_grid(extent=4.0, n=9)
    assert G.equivariance_diagnostic() < 1e-12
    vals = G.values.copy()
    vals[1, 2, 3] += 0.05
    H = transform.MatrixField.grid(1, G.origin, G.spacing, vals)
    assert H.equivariance_diagnostic() > 1e-4
    # non-symmetric lattice: diagnostic unavailable
    K = transform.MatrixField.grid(
        1, np.array([0.0, 0.0, 0.0]), 0.5, np.zeros((4, 4, 4, 3, 3), dtype=complex)
    )
    assert K.equivariance_diagnostic() is None
