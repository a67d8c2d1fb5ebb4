"""Exact matrix-polynomial algebra for the invariant generators Q_0..Q_{2m}.

Everything in this module is computed over an exact scalar domain so the
defining identities of the generator family (harmonicity, the lowering
identity D Q_j = a_j Q_{j-1}, the terminating product identity, and
infinitesimal equivariance) can be decided as exact zero polynomials, not
by tolerances.

Scalars are finite sums  sum_d q_d * sqrt(d)  with q_d Gaussian rational
and d a square-free positive integer (radicand 1 means the rational part).
The ladder entries of the generators are single such terms; sums of
different radicands only appear transiently inside products and the domain
is closed under them.  Rationals are gmpy2.mpq when available (much faster
than fractions.Fraction), falling back to the stdlib otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as _Q

# exact mode is capped: radicand bookkeeping and mpq sizes stay small here
M_MAX_EXACT = 4

Monomial = tuple[int, int, int]


def rational(num, den=1):
    """The exact rational num/den in the active backend."""
    return _Q(num, den)


def _square_free(n: int) -> tuple[int, int]:
    """Decompose n = a^2 * d with d square-free; returns (a, d)."""
    if n <= 0:
        raise ValueError("radicand must be positive")
    a, d = 1, 1
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        a *= p ** (e // 2)
        if e % 2:
            d *= p
        p += 1 if p == 2 else 2
    return a, d * n


class GaussianRational:
    """A complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _Q(re)
        self.im = _Q(im)

    def __add__(self, other):
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, GaussianRational):
            return GaussianRational(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return GaussianRational(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussianRational):
            n = other.re * other.re + other.im * other.im
            if n == 0:
                raise ZeroDivisionError("division by zero Gaussian rational")
            return self * GaussianRational(other.re / n, -other.im / n)
        return GaussianRational(self.re / other, self.im / other)

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __eq__(self, other):
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"({self.re}+{self.im}i)"


_GR_ZERO = GaussianRational()


class RadicalScalar:
    """Finite sum of Gaussian-rational multiples of square roots of integers.

    Stored as a map radicand -> GaussianRational with square-free radicands
    and no zero coefficients.  Closed under ring operations: a product of
    two radicals reduces through gcd factoring of the radicand product.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}

    # -- constructors -------------------------------------------------
    @staticmethod
    def from_rational(re, im=0) -> "RadicalScalar":
        g = GaussianRational(re, im)
        return RadicalScalar({} if g.is_zero() else {1: g})

    @staticmethod
    def sqrt_int(n: int, coeff=1, imag=False) -> "RadicalScalar":
        """coeff * sqrt(n), optionally times i."""
        a, d = _square_free(n)
        g = GaussianRational(0, coeff * a) if imag else GaussianRational(coeff * a, 0)
        return RadicalScalar({} if g.is_zero() else {d: g})

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        out = dict(self.terms)
        for d, g in other.terms.items():
            cur = out.get(d)
            s = g if cur is None else cur + g
            if s.is_zero():
                out.pop(d, None)
            else:
                out[d] = s
        return RadicalScalar(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return RadicalScalar({d: -g for d, g in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, RadicalScalar):
            out = {}
            for d1, g1 in self.terms.items():
                for d2, g2 in other.terms.items():
                    if d1 == d2:
                        d, g = 1, (g1 * g2) * d1
                    else:
                        c = math.gcd(d1, d2)
                        d, g = (d1 // c) * (d2 // c), (g1 * g2) * c
                    cur = out.get(d)
                    s = g if cur is None else cur + g
                    if s.is_zero():
                        out.pop(d, None)
                    else:
                        out[d] = s
            return RadicalScalar(out)
        # rational or GaussianRational scale
        if not isinstance(other, GaussianRational):
            other = GaussianRational(other)
        if other.is_zero():
            return RadicalScalar()
        return RadicalScalar({d: g * other for d, g in self.terms.items()})

    __rmul__ = __mul__

    def div_rational(self, q):
        q = _Q(q)
        return RadicalScalar({d: g * GaussianRational(1 / q) for d, g in self.terms.items()})

    def conjugate(self):
        return RadicalScalar({d: g.conjugate() for d, g in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def is_gaussian(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 1 in self.terms)

    def gaussian_part(self) -> GaussianRational:
        if not self.terms:
            return _GR_ZERO
        if not self.is_gaussian():
            raise ValueError("scalar has irrational radicand terms")
        return self.terms[1]

    def __eq__(self, other):
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __complex__(self):
        return sum(
            (complex(g) * math.sqrt(d) for d, g in self.terms.items()), complex(0)
        )

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(
            f"{g!r}" if d == 1 else f"{g!r}*sqrt({d})" for d, g in sorted(self.terms.items())
        )


_RS_ZERO = RadicalScalar()
_RS_ONE = RadicalScalar.from_rational(1)

ExactMatrix = tuple  # tuple of row tuples of RadicalScalar


def _mat_zero(dim: int) -> ExactMatrix:
    return tuple(tuple(_RS_ZERO for _ in range(dim)) for _ in range(dim))


def _mat_eye(dim: int) -> ExactMatrix:
    return tuple(
        tuple(_RS_ONE if i == j else _RS_ZERO for j in range(dim)) for i in range(dim)
    )


def _mat_add(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _mat_neg(a: ExactMatrix) -> ExactMatrix:
    return tuple(tuple(-x for x in row) for row in a)


def _mat_scale(a: ExactMatrix, s) -> ExactMatrix:
    return tuple(tuple(x * s for x in row) for row in a)


def _mat_mul(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    dim = len(a)
    bt = tuple(zip(*b))
    rows = []
    for ra in a:
        row = []
        for cb in bt:
            acc = _RS_ZERO
            for x, y in zip(ra, cb):
                if x.terms and y.terms:
                    acc = acc + x * y
            row.append(acc)
        rows.append(tuple(row))
    return tuple(rows)


def _mat_is_zero(a: ExactMatrix) -> bool:
    return all(x.is_zero() for row in a for x in row)


def _mat_to_complex(a: ExactMatrix) -> np.ndarray:
    return np.array([[complex(x) for x in row] for row in a], dtype=np.complex128)


@dataclass(frozen=True)
class MatPoly:
    """Matrix-valued polynomial in three variables with exact coefficients.

    ``terms`` maps a monomial exponent triple to a dim x dim ExactMatrix.
    Zero matrices are never stored, so the zero polynomial has no terms.
    """

    dim: int
    terms: dict

    # -- constructors --------------------------------------------------
    @staticmethod
    def zero(dim: int) -> "MatPoly":
        return MatPoly(dim, {})

    @staticmethod
    def identity(dim: int) -> "MatPoly":
        return MatPoly(dim, {(0, 0, 0): _mat_eye(dim)})

    @staticmethod
    def constant(mat: ExactMatrix) -> "MatPoly":
        if _mat_is_zero(mat):
            return MatPoly(len(mat), {})
        return MatPoly(len(mat), {(0, 0, 0): mat})

    @staticmethod
    def linear(mats) -> "MatPoly":
        """sum_i x_i * mats[i]."""
        dim = len(mats[0])
        terms = {}
        for i, mat in enumerate(mats):
            if not _mat_is_zero(mat):
                e = [0, 0, 0]
                e[i] = 1
                terms[tuple(e)] = mat
        return MatPoly(dim, terms)

    # -- ring operations -----------------------------------------------
    def __add__(self, other: "MatPoly") -> "MatPoly":
        out = dict(self.terms)
        for e, mat in other.terms.items():
            cur = out.get(e)
            s = mat if cur is None else _mat_add(cur, mat)
            if _mat_is_zero(s):
                out.pop(e, None)
            else:
                out[e] = s
        return MatPoly(self.dim, out)

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        return self + (-other)

    def __neg__(self) -> "MatPoly":
        return MatPoly(self.dim, {e: _mat_neg(m) for e, m in self.terms.items()})

    def __matmul__(self, other: "MatPoly") -> "MatPoly":
        out = {}
        for e1, m1 in self.terms.items():
            for e2, m2 in other.terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                prod = _mat_mul(m1, m2)
                cur = out.get(e)
                s = prod if cur is None else _mat_add(cur, prod)
                out[e] = s
        return MatPoly(self.dim, {e: m for e, m in out.items() if not _mat_is_zero(m)})

    def scale(self, s) -> "MatPoly":
        """Multiply by a scalar (rational, GaussianRational or RadicalScalar)."""
        if isinstance(s, GaussianRational):
            s = RadicalScalar({} if s.is_zero() else {1: s})
        elif not isinstance(s, RadicalScalar):
            s = RadicalScalar.from_rational(s)
        if s.is_zero():
            return MatPoly.zero(self.dim)
        out = {e: _mat_scale(m, s) for e, m in self.terms.items()}
        return MatPoly(self.dim, {e: m for e, m in out.items() if not _mat_is_zero(m)})

    def mul_monomial(self, mono: Monomial, coeff=1) -> "MatPoly":
        """Multiply by coeff * x^mono."""
        out = {}
        for e, m in self.terms.items():
            key = (e[0] + mono[0], e[1] + mono[1], e[2] + mono[2])
            s = _mat_scale(m, RadicalScalar.from_rational(coeff)) if coeff != 1 else m
            cur = out.get(key)
            out[key] = s if cur is None else _mat_add(cur, s)
        return MatPoly(self.dim, {e: m for e, m in out.items() if not _mat_is_zero(m)})

    def mul_r2(self) -> "MatPoly":
        """Multiply by |x|^2 = x1^2 + x2^2 + x3^2."""
        return (
            self.mul_monomial((2, 0, 0))
            + self.mul_monomial((0, 2, 0))
            + self.mul_monomial((0, 0, 2))
        )

    # -- calculus ------------------------------------------------------
    def diff(self, axis: int) -> "MatPoly":
        out = {}
        for e, m in self.terms.items():
            if e[axis] == 0:
                continue
            ne = list(e)
            ne[axis] -= 1
            scaled = _mat_scale(m, RadicalScalar.from_rational(e[axis]))
            key = tuple(ne)
            cur = out.get(key)
            out[key] = scaled if cur is None else _mat_add(cur, scaled)
        return MatPoly(self.dim, {e: m for e, m in out.items() if not _mat_is_zero(m)})

    # -- queries ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self, j: int) -> bool:
        return all(sum(e) == j for e in self.terms)

    def __eq__(self, other):
        return self.dim == other.dim and self.terms == other.terms

    def eval(self, x) -> np.ndarray:
        """Numerical evaluation; exact-to-float conversion happens last."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for e, m in self.terms.items():
            out += (x[0] ** e[0] * x[1] ** e[1] * x[2] ** e[2]) * _mat_to_complex(m)
        return out

    def to_json_obj(self):
        """JSON form: one record per monomial; each matrix entry is a list
        of [re, im, radicand] term triples (rationals as strings)."""
        records = []
        for e in sorted(self.terms):
            mat = self.terms[e]
            records.append(
                {
                    "exponents": list(e),
                    "matrix": [
                        [
                            [[str(g.re), str(g.im), d] for d, g in sorted(entry.terms.items())]
                            for entry in row
                        ]
                        for row in mat
                    ],
                }
            )
        return records


def eval(P: MatPoly, x) -> np.ndarray:  # noqa: A001 - deliberate module-level name
    """Evaluate a MatPoly at a real 3-vector."""
    return P.eval(x)


def _check_m(m: int, m_max: int):
    if m < 0 or m != int(m):
        raise ValueError("m must be a non-negative integer")
    if m > m_max:
        raise CapabilityError(
            f"exact mode supports m <= {m_max} (requested m={m}); "
            "use the numeric construction for larger types"
        )


def exact_generators(m: int, m_max: int = M_MAX_EXACT):
    """Exact weight-basis generators (A_1, A_2, A_3) of the type-m irrep.

    A_1 is diagonal with entries i*mu; the ladder entries of A_2, A_3 are
    Gaussian-rational multiples of sqrt((m-mu)(m+mu+1)).
    """
    _check_m(m, m_max)
    d = 2 * m + 1
    half = _Q(1, 2)
    a1 = [[_RS_ZERO] * d for _ in range(d)]
    a2 = [[_RS_ZERO] * d for _ in range(d)]
    a3 = [[_RS_ZERO] * d for _ in range(d)]
    for p in range(d):
        mu = p - m
        if mu:
            a1[p][p] = RadicalScalar.from_rational(0, mu)
    for p in range(d - 1):
        mu = p - m
        n = (m - mu) * (m + mu + 1)
        # A_2 = i Jx: (i/2) sqrt(n) on both ladder entries
        # A_3 = i Jy: +(1/2) sqrt(n) below, -(1/2) sqrt(n) above the diagonal
        a2[p + 1][p] = RadicalScalar.sqrt_int(n, half, imag=True)
        a2[p][p + 1] = a2[p + 1][p]
        a3[p + 1][p] = RadicalScalar.sqrt_int(n, half)
        a3[p][p + 1] = -a3[p + 1][p]
    return (
        tuple(tuple(r) for r in a1),
        tuple(tuple(r) for r in a2),
        tuple(tuple(r) for r in a3),
    )


@dataclass(frozen=True)
class CoeffTable:
    """The lowering scalars a_1..a_{2m} and the Casimir constant c = -m(m+1)."""

    m: int
    a: tuple
    c: object

    def as_floats(self) -> np.ndarray:
        return np.array([float(x) for x in self.a], dtype=np.float64)


def coeff_table(m: int) -> CoeffTable:
    """Closed-form lowering coefficients: a_1 = c and
    a_{k+1} = ((k+1)^2/(2k+1)) * (c + (k^2+2k)/4)."""
    if m < 0 or m != int(m):
        raise ValueError("m must be a non-negative integer")
    c = _Q(-m * (m + 1))
    a = []
    if m > 0:
        a.append(c)
        for k in range(1, 2 * m):
            a.append(_Q((k + 1) ** 2, 2 * k + 1) * (c + _Q(k * k + 2 * k, 4)))
    return CoeffTable(m=m, a=tuple(a), c=c)


def laplacian(P: MatPoly) -> MatPoly:
    """sum_i d^2 P / dx_i^2, exact."""
    out = MatPoly.zero(P.dim)
    for i in range(3):
        out = out + P.diff(i).diff(i)
    return out


def apply_dtau_op(gens, P: MatPoly) -> MatPoly:
    """The invariant operator sum_i A_i * dP/dx_i (left multiplication)."""
    dim = P.dim
    out = MatPoly.zero(dim)
    for i in range(3):
        out = out + (MatPoly.constant(gens[i]) @ P.diff(i))
    return out


def build_Q(m: int, m_max: int = M_MAX_EXACT) -> list[MatPoly]:
    """The generator family Q_0..Q_{2m} by the lowering recursion
    Q_{j+1} = Q_1 Q_j - (r^2 a_j / (2j+1)) Q_{j-1}."""
    _check_m(m, m_max)
    gens = exact_generators(m, m_max)
    table = coeff_table(m)
    d = 2 * m + 1
    qs = [MatPoly.identity(d)]
    if m == 0:
        return qs
    qs.append(MatPoly.linear(gens))
    for j in range(1, 2 * m):
        coeff = table.a[j - 1] / (2 * j + 1)  # a_j / (2j+1)
        qs.append((qs[1] @ qs[j]) - qs[j - 1].mul_r2().scale(coeff))
    return qs


def vector_field_derivative(P: MatPoly, i: int) -> MatPoly:
    """Directional derivative of P along the linear field x -> Y_i x,
    where Y_i is the real 3x3 generator of rotations about axis i."""
    # hard-coded integer entries of the three rotation generators
    from .so3rep import SO3_GENERATORS

    y = SO3_GENERATORS[i]
    out = MatPoly.zero(P.dim)
    for a in range(3):
        da = P.diff(a)
        if da.is_zero():
            continue
        for b in range(3):
            c = int(y[a, b])
            if c:
                mono = [0, 0, 0]
                mono[b] = 1
                out = out + da.mul_monomial(tuple(mono), c)
    return out


def equivariance_defect(gens, P: MatPoly, i: int) -> MatPoly:
    """[A_i, P(x)] - dP(x)[Y_i x]; the zero polynomial iff P is equivariant
    at the infinitesimal level for axis i."""
    gi = MatPoly.constant(gens[i])
    bracket = (gi @ P) - (P @ gi)
    return bracket - vector_field_derivative(P, i)


def _solve_gaussian(rows, rhs):
    """Exact solve of a small square linear system over GaussianRational."""
    n = len(rows)
    a = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            raise ValueError("singular system")
        a[col], a[piv] = a[piv], a[col]
        inv = GaussianRational(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def expand_in_q1_powers(qs: list[MatPoly], j: int) -> list:
    """Express Q_j as the monic polynomial Q_1^j + sum_k b_k r^{2k} Q_1^{j-2k}.

    Returns the rational coefficients [1, b_1, b_2, ...] after verifying the
    reconstruction exactly; raises if Q_j is not of that form.
    """
    m = (len(qs) - 1) // 2
    dim = 2 * m + 1
    if j == 0:
        return [_Q(1)]
    nuk = j // 2 + 1  # unknowns: coefficients of Q_1^{j-2k}, k = 0..j//2
    # diagonal of Q_j at e_1, where Q_1 = diag(i*mu): Gaussian-rational data
    diag_lhs = []
    for p in range(dim):
        val = _GR_ZERO
        for e, mat in qs[j].terms.items():
            if e[1] == 0 and e[2] == 0:  # only pure x1 monomials survive at e_1
                val = val + mat[p][p].gaussian_part()
        diag_lhs.append(val)
    # Vandermonde rows in (i*mu)^{j-2k}; for odd j the mu = 0 row vanishes
    rows, rhs = [], []
    for mu in range(0, m + 1):
        if mu == 0 and j % 2 == 1:
            continue
        lam = GaussianRational(0, mu)
        rows.append([_gr_pow(lam, j - 2 * k) for k in range(nuk)])
        rhs.append(diag_lhs[mu + m])
        if len(rows) == nuk:
            break
    if len(rows) < nuk:
        raise ValueError("not enough independent weight rows")
    sol = _solve_gaussian(rows, rhs)
    # coefficients must be plain rationals; the leading one must be 1
    coeffs = []
    for g in sol:
        if g.im != 0:
            raise ValueError("non-real coefficient in the Q_1 expansion")
        coeffs.append(g.re)
    if coeffs[0] != 1:
        raise ValueError(f"expansion is not monic in Q_1 (leading {coeffs[0]})")
    # verify the full polynomial identity exactly
    recon = MatPoly.zero(dim)
    q1p = MatPoly.identity(dim)
    q1_powers = [q1p]
    for _ in range(j):
        q1p = q1p @ qs[1]
        q1_powers.append(q1p)
    for k, b in enumerate(coeffs):
        term = q1_powers[j - 2 * k].scale(b)
        for _ in range(k):
            term = term.mul_r2()
        recon = recon + term
    if not (recon - qs[j]).is_zero():
        raise ValueError(f"Q_{j} does not re-expand over powers of Q_1")
    return coeffs


def _gr_pow(g: GaussianRational, e: int) -> GaussianRational:
    out = GaussianRational(1)
    for _ in range(e):
        out = out * g
    return out
