"""Runnable invariant suites behind the ``check`` command.

Each suite exercises the documented invariants of one module and returns a
dict with the case count, the worst residual, and pass/fail.  Everything
is driven by one seeded generator in a fixed order, so a report for a
given (seed, profile, ms) is byte-identical across runs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import spherical_jn

from . import polyalg, radial, spherical, transform
from .fieldio import synthesize
from .polyalg import M_MAX_EXACT
from .so3rep import Rotation, build_irrep, dtau, tau


class _Recorder:
    def __init__(self, name: str):
        self.name = name
        self.cases = 0
        self.max_residual = 0.0
        self.failures: list[str] = []

    def case(self, label: str, residual: float, tol: float):
        self.cases += 1
        residual = float(residual)
        self.max_residual = max(self.max_residual, residual)
        if not residual <= tol:
            self.failures.append(f"{label}: residual {residual:.3e} > tol {tol:.1e}")

    def exact(self, label: str, ok: bool):
        self.cases += 1
        if not ok:
            self.failures.append(f"{label}: exact identity failed")

    def result(self) -> dict:
        return {
            "suite": self.name,
            "cases": self.cases,
            "max_residual": self.max_residual,
            "pass": not self.failures,
            "failures": self.failures,
        }


def _random_unit(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def suite_so3rep(ms, rng, profile: str) -> dict:
    rec = _Recorder("so3rep")
    for m in ms:
        rep = build_irrep(m)
        a1, a2, a3 = rep.generators
        eye = np.eye(rep.dim)
        rec.case(f"m={m} bracket 12", np.max(np.abs(a1 @ a2 - a2 @ a1 + a3)), 1e-14 * (m + 1) ** 2)
        rec.case(f"m={m} bracket 23", np.max(np.abs(a2 @ a3 - a3 @ a2 + a1)), 1e-14 * (m + 1) ** 2)
        rec.case(f"m={m} bracket 31", np.max(np.abs(a3 @ a1 - a1 @ a3 + a2)), 1e-14 * (m + 1) ** 2)
        rec.case(
            f"m={m} casimir",
            np.max(np.abs(a1 @ a1 + a2 @ a2 + a3 @ a3 + m * (m + 1) * eye)),
            1e-13,
        )
        for g in rep.generators:
            rec.case(f"m={m} skew-hermitian", np.max(np.abs(g + g.conj().T)), 1e-14 * (m + 1))
        rec.case(
            f"m={m} axis diagonal",
            np.max(np.abs(a1 - np.diag(1j * np.arange(-m, m + 1)))),
            0.0,
        )
        for _ in range(3):
            xi = _random_unit(rng)
            spec = np.sort(np.linalg.eigvals(dtau(rep, xi)).imag)
            rec.case(f"m={m} unit spectrum", np.max(np.abs(spec - np.arange(-m, m + 1))), 1e-12)
            scale = float(rng.uniform(0.3, 4.0))
            spec = np.sort(np.linalg.eigvals(dtau(rep, scale * xi)).imag)
            rec.case(
                f"m={m} scaled spectrum",
                np.max(np.abs(spec - scale * np.arange(-m, m + 1))),
                1e-12 * max(1.0, scale),
            )
        for _ in range(3):
            k = Rotation.random(rng)
            tk = tau(rep, k)
            rec.case(f"m={m} unitarity", np.max(np.abs(tk @ tk.conj().T - eye)), 1e-12)
            k2 = Rotation.random(rng)
            prod = Rotation.from_matrix(k.matrix @ k2.matrix)
            rec.case(
                f"m={m} homomorphism",
                np.max(np.abs(tau(rep, prod) - tk @ tau(rep, k2))),
                1e-11,
            )
            x = rng.normal(size=3)
            rec.case(
                f"m={m} equivariance",
                np.max(np.abs(tk @ dtau(rep, x) @ tk.conj().T - dtau(rep, k.apply(x)))),
                1e-11 * (1 + np.linalg.norm(x)),
            )
    return rec.result()


def suite_polyalg(ms, rng, profile: str) -> dict:
    rec = _Recorder("polyalg")
    for m in ms:
        if m > M_MAX_EXACT:
            continue
        gens = polyalg.exact_generators(m)
        table = polyalg.coeff_table(m)
        qs = polyalg.build_Q(m)
        rec.exact(f"m={m} a_1 = casimir", len(table.a) == 2 * m and (m == 0 or table.a[0] == table.c))
        for j, q in enumerate(qs):
            rec.exact(f"m={m} Q_{j} homogeneous", q.is_homogeneous(j) and not q.is_zero())
            rec.exact(f"m={m} laplacian Q_{j} = 0", polyalg.laplacian(q).is_zero())
            if j >= 1:
                lowered = polyalg.apply_dtau_op(gens, q) - qs[j - 1].scale(table.a[j - 1])
                rec.exact(f"m={m} D Q_{j} = a_{j} Q_{j-1}", lowered.is_zero())
            for i in range(3):
                rec.exact(
                    f"m={m} equivariance Q_{j} axis {i}",
                    polyalg.equivariance_defect(gens, q, i).is_zero(),
                )
        if m >= 1:
            top = (qs[1] @ qs[2 * m]) - polyalg.apply_dtau_op(gens, qs[2 * m]).mul_r2().scale(
                polyalg.rational(1, 4 * m + 1)
            )
            rec.exact(f"m={m} terminating product", top.is_zero())
        if m <= 3:
            for j in range(2 * m + 1):
                try:
                    coeffs = polyalg.expand_in_q1_powers(qs, j)
                    rec.exact(f"m={m} Q_{j} monic in Q_1", coeffs[0] == 1)
                except ValueError:
                    rec.exact(f"m={m} Q_{j} monic in Q_1", False)
        # finite-rotation equivariance, numeric spot check
        rep = build_irrep(m)
        for _ in range(3 if profile == "quick" else 6):
            k = Rotation.random(rng)
            x = rng.normal(size=3)
            tk = tau(rep, k)
            for j, q in enumerate(qs):
                lhs = q.eval(k.apply(x))
                rhs = tk @ q.eval(x) @ tk.conj().T
                rec.case(
                    f"m={m} Q_{j} rotation equivariance",
                    np.max(np.abs(lhs - rhs)),
                    1e-10 * (1 + np.linalg.norm(x)) ** (2 * m),
                )
    return rec.result()


def _fd_derivative(fun, r: float, h: float = 5e-3) -> float:
    # five-point stencil, O(h^4)
    return (
        -fun(r + 2 * h) + 8 * fun(r + h) - 8 * fun(r - h) + fun(r - 2 * h)
    ) / (12 * h)


def suite_radial(rng, profile: str) -> dict:
    rec = _Recorder("radial")
    rs = np.linspace(0.05, 50.0, 200 if profile == "quick" else 600)
    jmax = 8
    fv = radial.f_scaled(0, 1.0, rs)  # warm path; also the closed form below
    rec.case("f_0 closed form", np.max(np.abs(fv - np.sin(rs) / rs)), 1e-14)
    table = np.stack([radial.f(j, rs) for j in range(jmax + 2)])
    for j in range(1, jmax + 1):
        resid = table[j] - table[j - 1] - rs**2 / ((2 * j + 1) * (2 * j + 3)) * table[j + 1]
        rec.case(f"recurrence j={j}", np.max(np.abs(resid)), 1e-12)
    # bessel oracle: f_j = (2j+1)!! j_j(r) / r^j
    for j in range(jmax + 1):
        oracle = radial.double_factorial_odd(j) * spherical_jn(j, rs) / rs**j
        rec.case(f"bessel oracle j={j}", np.max(np.abs(table[j] - oracle)), 1e-12)
    rb = np.linspace(0.0, 100.0, 400)
    for j in range(jmax + 1):
        rec.case(f"bounded j={j}", np.max(np.abs(radial.f(j, rb))) - 1.0, 1e-12)
    for j in range(4):
        for r in (0.7, 2.3, 11.0):
            d = _fd_derivative(lambda rr: float(radial.f(j, rr)), r)
            rec.case(
                f"differential relation j={j}",
                abs(d / r + float(radial.f(j + 1, r)) / (2 * j + 3)),
                1e-10,
            )
            s = 1.7
            ds = _fd_derivative(lambda rr: float(radial.f_scaled(j, s, rr)), r)
            rec.case(
                f"scaled differential relation j={j}",
                abs(ds / (s * s * r) + float(radial.f_scaled(j + 1, s, r)) / (2 * j + 3)),
                1e-10,
            )
    for j, s, r in ((0, 1.0, 2.0), (3, 2.0, 0.5), (5, 0.7, 7.0)):
        rec.case(f"ode j={j}", abs(radial.check_ode(j, s, r, 1e-4)), 1e-6)
    return rec.result()


def suite_spherical(ms, rng, profile: str) -> dict:
    rec = _Recorder("spherical")
    svals = (0.5, 1.0, 2.0, 7.3)
    for m in sorted(set(list(ms) + ([4, 6] if profile == "full" else []))):
        for s in svals:
            op = spherical.build_tridiagonal(m, s)
            eigs = np.sort(np.linalg.eigvals(op.matrix()).real)
            rec.case(
                f"m={m} s={s} spectrum",
                np.max(np.abs(eigs - op.eigenvalues())),
                1e-10 * s,
            )
    n_x = 5 if profile == "quick" else 20
    for m in ms:
        rep = build_irrep(m)
        eye = np.eye(rep.dim)
        for s in (0.5, 1.0, 2.0):
            for j in range(-m, m + 1):
                spec1 = spherical.phi_method1(m, s, j)
                spec3 = spherical.phi_method3(m, s, j)
                rec.case(
                    f"m={m} s={s} j={j} method1 vs method3",
                    np.max(np.abs(spec1.coeffs - spec3.coeffs)),
                    1e-10,
                )
                u1 = spherical.phi_method1(m, 1.0, j).coeffs
                scaling = u1 * s ** np.arange(2 * m + 1)
                rec.case(
                    f"m={m} s={s} j={j} eigenvector scaling",
                    np.max(np.abs(spec1.coeffs - scaling)),
                    1e-9 * max(1.0, s) ** (2 * m),
                )
                rec.case(
                    f"m={m} s={s} j={j} phi(0) = I",
                    np.max(np.abs(spherical.eval_phi(spec1, np.zeros(3)) - eye)),
                    1e-12,
                )
                xs = rng.uniform(-5 / np.sqrt(3), 5 / np.sqrt(3), size=(n_x, 3))
                vals1 = spherical.eval_phi_batch(spec1, xs)
                vals2 = spherical.phi_method2_batch(m, s, j, xs)
                rec.case(
                    f"m={m} s={s} j={j} method1 vs method2",
                    np.max(np.abs(vals1 - vals2)),
                    1e-6,
                )
                specm = spherical.phi_method1(m, s, -j)
                valsm = spherical.eval_phi_batch(specm, -xs)
                rec.case(
                    f"m={m} s={s} j={j} parity",
                    np.max(np.abs(vals1 - valsm)),
                    1e-10,
                )
                valsc = spherical.eval_phi_batch(spec1, -xs)
                rec.case(
                    f"m={m} s={s} j={j} conjugate symmetry",
                    np.max(np.abs(vals1.conj().transpose(0, 2, 1) - valsc)),
                    1e-10,
                )
                for x in xs[: 2 if profile == "quick" else 4]:
                    lap = _phi_laplacian_fd(spec1, x)
                    rec.case(
                        f"m={m} s={s} j={j} laplacian eigenfunction",
                        np.max(np.abs(lap + s * s * spherical.eval_phi(spec1, x))),
                        1e-5 * (1 + s * s),
                    )
                    dt = spherical.apply_dtau_analytic(spec1, x)
                    rec.case(
                        f"m={m} s={s} j={j} first-order eigenfunction",
                        np.max(np.abs(dt - s * j * spherical.eval_phi(spec1, x))),
                        1e-6 * (1 + s),
                    )
                for _ in range(3):
                    k = Rotation.random(rng)
                    x = rng.normal(size=3)
                    tk = tau(rep, k)
                    lhs = tk @ spherical.eval_phi(spec1, k.inverse().apply(x)) @ tk.conj().T
                    rec.case(
                        f"m={m} s={s} j={j} equivariance",
                        np.max(np.abs(lhs - spherical.eval_phi(spec1, x))),
                        1e-8,
                    )
        # projections
        for _ in range(2 if profile == "quick" else 4):
            xi = _random_unit(rng) * rng.uniform(0.5, 2.0)
            fam = spherical.projections(m, xi)
            total = np.zeros((rep.dim, rep.dim), dtype=np.complex128)
            dmat = dtau(rep, fam.direction)
            for j in range(-m, m + 1):
                p = fam.P(j)
                total += p
                rec.case(f"m={m} P_{j} idempotent", np.max(np.abs(p @ p - p)), 1e-12)
                rec.case(f"m={m} P_{j} hermitian", np.max(np.abs(p - p.conj().T)), 1e-12)
                rec.case(
                    f"m={m} P_{j} eigenspace",
                    np.max(np.abs(dmat @ p - 1j * j * p)),
                    1e-12 * (1 + m),
                )
                for l in range(-m, j):
                    rec.case(
                        f"m={m} P_{j} P_{l} orthogonal",
                        np.max(np.abs(p @ fam.P(l))),
                        1e-12,
                    )
                famneg = spherical.projections(m, -xi)
                rec.case(
                    f"m={m} P_{-j}(xi) = P_{j}(-xi)",
                    np.max(np.abs(fam.P(-j) - famneg.P(j))),
                    1e-12,
                )
            rec.case(f"m={m} resolution of identity", np.max(np.abs(total - eye)), 1e-12)
            k = Rotation.random(rng)
            fam2 = spherical.projections(m, k.apply(fam.direction))
            tk = tau(rep, k)
            for j in (-m, 0, m):
                rec.case(
                    f"m={m} P_{j} covariance",
                    np.max(np.abs(fam2.P(j) - tk @ fam.P(j) @ tk.conj().T)),
                    1e-10,
                )
        # positive type
        if m <= 3:
            for s in (1.0, 2.0):
                for j in range(-m, m + 1):
                    spec1 = spherical.phi_method1(m, s, j)
                    for _ in range(2 if profile == "quick" else 10):
                        pts = rng.uniform(-2, 2, size=(6, 3))
                        vecs = rng.normal(size=(6, rep.dim)) + 1j * rng.normal(size=(6, rep.dim))
                        lam = spherical.check_positive_type(spec1, pts, vecs)
                        rec.case(f"m={m} s={s} j={j} positive type", max(0.0, -lam), 1e-8)
    return rec.result()


def _phi_laplacian_fd(spec, x, h: float = 1e-4) -> np.ndarray:
    d = 2 * spec.m + 1
    out = np.zeros((d, d), dtype=np.complex128)
    f0 = spherical.eval_phi(spec, x)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out += spherical.eval_phi(spec, x + e) - 2 * f0 + spherical.eval_phi(spec, x - e)
    return out / (h * h)


def suite_transform(ms, rng, profile: str) -> dict:
    rec = _Recorder("transform")
    gauss_ft = lambda s: (2 * np.pi) ** 1.5 * np.exp(-s * s / 2.0)
    for m in ms:
        if m > 2:
            continue
        F = synthesize("gaussian", m, {"sigma": 1.0})
        svals = np.array([0.1, 0.5, 1.0, 2.0, 4.0])
        for s in svals:
            for j in range(-m, m + 1):
                val = transform.spherical_ft(F, float(s), j, mode="fast")
                rec.case(
                    f"m={m} s={s} j={j} gaussian transform",
                    abs(val - gauss_ft(s)),
                    1e-4,
                )
        hvals = transform.h_decompose(F, 1.3)
        fam = transform._proj_e1(m)
        fhat = transform.classical_ft(F, np.array([1.3, 0.0, 0.0]))
        recon = sum(hvals[j + m] * fam.P(j) for j in range(-m, m + 1))
        rec.case(f"m={m} h-decomposition", np.max(np.abs(recon - fhat)), 1e-8)
        coeffs = transform.forward(F)
        n_pts = 3 if profile == "quick" else 10
        pts = rng.uniform(-3 / np.sqrt(3), 3 / np.sqrt(3), size=(n_pts, 3))
        recon_pts = transform.inverse(coeffs, pts)
        ref = F.eval_points(pts)
        rec.case(f"m={m} gaussian roundtrip", np.max(np.abs(recon_pts - ref)), 1e-3)
        # direct vs fast
        grid_n = 33 if profile == "quick" else 41
        for _ in range(1 if profile == "quick" else 3):
            s = float(rng.uniform(0.3, 2.0))
            j = int(rng.integers(-m, m + 1))
            fast = transform.spherical_ft(F, s, j, mode="fast")
            direct = transform.spherical_ft(F, s, j, mode="direct", grid_n=grid_n)
            rec.case(
                f"m={m} direct vs fast",
                abs(direct - fast) / (1 + abs(fast)),
                1e-4,
            )
            # parity route: integral of Tr[F(x) Phi_{s,-j}(x)] equals the fast path
            G = F.to_grid(n=grid_n)
            specm = spherical.phi_method1(m, s, -j)
            phi = spherical.eval_phi_batch(specm, G.grid_points())
            via_parity = (
                np.einsum("nab,nba->", G.values_flat(), phi) * G.spacing**3 / (2 * m + 1)
            )
            rec.case(
                f"m={m} parity route",
                abs(via_parity - fast) / (1 + abs(fast)),
                1e-4,
            )
        # convolution homomorphism (full profile only: O(N^2) oracle)
        if profile == "full" and m == 1:
            F2 = synthesize("gaussian", m, {"sigma": 1.2, "component": 1})
            G1 = F.to_grid(6.0, 13)
            G2 = F2.to_grid(6.0, 13)
            G3 = transform.convolve(G1, G2)
            for s in (0.8, 1.5):
                for j in range(-m, m + 1):
                    lhs = transform.spherical_ft(G3, s, j, mode="fast")
                    rhs = transform.spherical_ft(G1, s, j, mode="fast") * transform.spherical_ft(
                        G2, s, j, mode="fast"
                    )
                    rec.case(
                        f"m={m} s={s} j={j} convolution homomorphism",
                        abs(lhs - rhs) / (1 + abs(rhs)),
                        1e-3,
                    )
        # multipliers
        ident = transform.apply_multiplier(coeffs, lambda s_, j_: 1.0)
        rec.case(
            f"m={m} unit multiplier",
            np.max(np.abs(ident.values - coeffs.values)),
            0.0,
        )
        lap_coeffs = transform.apply_multiplier(coeffs, lambda s_, j_: -s_ * s_)
        pts_small = rng.uniform(-1.5, 1.5, size=(2, 3))
        lap_field = transform.inverse(lap_coeffs, pts_small)
        fd = _field_laplacian_fd(F, pts_small)
        scale = np.max(np.abs(fd)) + 1.0
        rec.case(
            f"m={m} laplacian multiplier",
            np.max(np.abs(lap_field - fd)) / scale,
            1e-3,
        )
    return rec.result()


def _field_laplacian_fd(F, pts, h: float = 0.05) -> np.ndarray:
    out = []
    for x in pts:
        acc = np.zeros((F.dim, F.dim), dtype=np.complex128)
        f0 = F.eval_points(x[None, :])[0]
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fp = F.eval_points((x + e)[None, :])[0]
            fm = F.eval_points((x - e)[None, :])[0]
            fp2 = F.eval_points((x + 2 * e)[None, :])[0]
            fm2 = F.eval_points((x - 2 * e)[None, :])[0]
            acc += (-fp2 + 16 * fp - 30 * f0 + 16 * fm - fm2) / (12 * h * h)
        out.append(acc)
    return np.stack(out)


_SUITES = ("so3rep", "polyalg", "radial", "spherical", "transform")


def run_checks(ms=(0, 1), seed: int = 0, profile: str = "quick") -> dict:
    """Run every suite and assemble the deterministic report."""
    if profile not in ("quick", "full"):
        raise ValueError("profile must be 'quick' or 'full'")
    ms = sorted(set(int(m) for m in ms))
    rng = np.random.default_rng(seed)
    exact_ms = [m for m in ms if m <= M_MAX_EXACT]
    if profile == "full":
        exact_ms = sorted(set(exact_ms + list(range(M_MAX_EXACT + 1))))
    suites = [
        suite_so3rep(ms, rng, profile),
        suite_polyalg(exact_ms, rng, profile),
        suite_radial(rng, profile),
        suite_spherical(ms, rng, profile),
        suite_transform(ms, rng, profile),
    ]
    return {
        "ms": ms,
        "seed": int(seed),
        "profile": profile,
        "suites": suites,
        "pass": all(s["pass"] for s in suites),
    }
