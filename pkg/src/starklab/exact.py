"""Exact arithmetic: cyclotomic fields Q(xi_f) and capped-precision p-adic ints.

Cyclotomic numbers are stored on the power basis 1, xi, ..., xi^(phi(f)-1) of
Q(xi_f) = Q[x]/Phi_f(x) with Fraction coefficients, so every operation here is
exact.  xi_f is the abstract root of Phi_f; no complex embedding is chosen
anywhere in this module.

ModPN is a p-adic integer known modulo p^N.  Precision N propagates as the
minimum over the operands; dividing by p^k costs k digits.  Nothing in this
type ever rounds: either an operation is exact at the tracked precision or it
raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from sympy import factorint

from .errors import NonIntegral, NonUnitResidue, NotInSubfield, PrecisionTooLow

Rational = Fraction


def euler_phi(f: int) -> int:
    assert f >= 1
    phi = 1
    for q, e in factorint(f).items():
        phi *= (q - 1) * q ** (e - 1)
    return phi


def divisors(f: int) -> list[int]:
    ds = [1]
    for q, e in factorint(f).items():
        ds = [d * q**k for d in ds for k in range(e + 1)]
    return sorted(ds)


# ---------------------------------------------------------------------------
# integer polynomials, ascending coefficients


def _poly_mul(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _poly_divexact(num: list[int], den: list[int]) -> list[int]:
    # den monic; division is exact by construction where we use it
    num = list(num)
    dd = len(den) - 1
    out = [0] * (len(num) - dd)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]
        if c == 0:
            continue
        out[i - dd] = c
        for j, dj in enumerate(den):
            num[i - dd + j] -= c * dj
    assert all(c == 0 for c in num), "inexact polynomial division"
    return out


@lru_cache(maxsize=None)
def cyclotomic_poly(f: int) -> tuple[int, ...]:
    """Coefficients of Phi_f(x), ascending, exact integers (degree phi(f))."""
    assert f >= 1
    num = [-1] + [0] * (f - 1) + [1]  # x^f - 1
    for d in divisors(f):
        if d < f:
            num = _poly_divexact(num, list(cyclotomic_poly(d)))
    assert len(num) - 1 == euler_phi(f)
    return tuple(num)


@lru_cache(maxsize=None)
def _reduction_table(f: int) -> tuple[tuple[int, ...], ...]:
    """red[t] = coefficients of x^t mod Phi_f(x), for t in range(f)."""
    phi = euler_phi(f)
    poly = cyclotomic_poly(f)
    red: list[tuple[int, ...]] = []
    for t in range(phi):
        row = [0] * phi
        row[t] = 1
        red.append(tuple(row))
    for t in range(phi, f):
        # x^t = x * x^(t-1), then subtract the leading multiple of Phi_f
        prev = red[t - 1]
        row = [0] + list(prev[:-1])
        lead = prev[-1]
        if lead:
            for j in range(phi):
                row[j] -= lead * poly[j]
        red.append(tuple(row))
    return tuple(red)


@dataclass(frozen=True)
class CyclotomicNumber:
    """Element of Q(xi_f) on the power basis, exact."""

    f: int
    coeffs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        assert len(self.coeffs) == euler_phi(self.f)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(f: int) -> "CyclotomicNumber":
        return CyclotomicNumber(f, tuple([Fraction(0)] * euler_phi(f)))

    @staticmethod
    def from_rational(f: int, q) -> "CyclotomicNumber":
        c = [Fraction(0)] * euler_phi(f)
        c[0] = Fraction(q)
        return CyclotomicNumber(f, tuple(c))

    @staticmethod
    def one(f: int) -> "CyclotomicNumber":
        return CyclotomicNumber.from_rational(f, 1)

    @staticmethod
    def root_of_unity(f: int, k: int = 1) -> "CyclotomicNumber":
        """xi_f^k as an element of Q(xi_f)."""
        red = _reduction_table(f)
        return CyclotomicNumber(f, tuple(Fraction(c) for c in red[k % f]))

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        assert self.f == other.f
        return CyclotomicNumber(
            self.f, tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        assert self.f == other.f
        return CyclotomicNumber(
            self.f, tuple(a - b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __neg__(self) -> "CyclotomicNumber":
        return CyclotomicNumber(self.f, tuple(-a for a in self.coeffs))

    def scale(self, q) -> "CyclotomicNumber":
        q = Fraction(q)
        return CyclotomicNumber(self.f, tuple(q * a for a in self.coeffs))

    def __mul__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        assert self.f == other.f
        phi = len(self.coeffs)
        red = _reduction_table(self.f)
        # convolve, wrap exponents mod f (xi^f = 1), then reduce the tail
        buckets = [Fraction(0)] * (2 * phi - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        buckets[i + j] += a * b
        out = list(buckets[:phi])
        for t in range(phi, 2 * phi - 1):
            c = buckets[t]
            if c:
                for j, r in enumerate(red[t % self.f]):
                    if r:
                        out[j] += c * r
        return CyclotomicNumber(self.f, tuple(out))

    def __pow__(self, e: int) -> "CyclotomicNumber":
        if e < 0:
            return self.inverse() ** (-e)
        result = CyclotomicNumber.one(self.f)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "CyclotomicNumber":
        """Multiplicative inverse via extended Euclid against Phi_f."""
        assert not self.is_zero(), "division by zero"
        mod = [Fraction(c) for c in cyclotomic_poly(self.f)]
        a = list(self.coeffs)
        # extended gcd of a and mod in Q[x]; mod is irreducible so gcd is 1
        r0, r1 = mod, a
        s0, s1 = [Fraction(0)], [Fraction(1)]

        def trim(p):
            while p and p[-1] == 0:
                p.pop()
            return p

        r0, r1 = trim(r0), trim(r1)
        while r1:
            q, rem = _frac_poly_divmod(r0, r1)
            r0, r1 = r1, trim(rem)
            s0, s1 = s1, trim(_frac_poly_sub(s0, _frac_poly_mul(q, s1)))
        assert len(r0) == 1, "Phi_f not coprime to element"
        inv_lead = 1 / r0[0]
        phi = euler_phi(self.f)
        out = [Fraction(0)] * phi
        for i, c in enumerate(s0):
            out[i] = c * inv_lead
        return CyclotomicNumber(self.f, tuple(out))

    def __truediv__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        return self * other.inverse()

    # -- structure maps -----------------------------------------------------

    def galois(self, a: int) -> "CyclotomicNumber":
        """Image under sigma_a : xi_f -> xi_f^a, for gcd(a, f) = 1."""
        a %= self.f
        assert gcd(a, self.f) == 1, "sigma_a needs a invertible mod f"
        red = _reduction_table(self.f)
        phi = len(self.coeffs)
        out = [Fraction(0)] * phi
        for i, c in enumerate(self.coeffs):
            if c:
                for j, r in enumerate(red[(a * i) % self.f]):
                    if r:
                        out[j] += c * r
        return CyclotomicNumber(self.f, tuple(out))

    def conj(self) -> "CyclotomicNumber":
        """Complex conjugation xi -> xi^(-1)."""
        return self.galois(self.f - 1)

    def lift(self, f1: int) -> "CyclotomicNumber":
        """Rewrite over the larger field Q(xi_f1), f | f1 (xi_f = xi_f1^(f1/f))."""
        assert f1 % self.f == 0
        if f1 == self.f:
            return self
        red = _reduction_table(f1)
        phi1 = euler_phi(f1)
        step = f1 // self.f
        out = [Fraction(0)] * phi1
        for i, c in enumerate(self.coeffs):
            if c:
                for j, r in enumerate(red[(step * i) % f1]):
                    if r:
                        out[j] += c * r
        return CyclotomicNumber(f1, tuple(out))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise NotInSubfield(f"not rational: {self}")
        return self.coeffs[0]

    def __repr__(self) -> str:
        terms = [f"{c}*xi{self.f}^{i}" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) if terms else "0"


def _frac_poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _frac_poly_sub(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] -= c
    return out


def _frac_poly_divmod(num: list[Fraction], den: list[Fraction]):
    num = list(num)
    q = [Fraction(0)] * max(1, len(num) - len(den) + 1)
    dlead = den[-1]
    for i in range(len(num) - 1, len(den) - 2, -1):
        c = num[i] / dlead
        if c:
            q[i - (len(den) - 1)] = c
            for j, dj in enumerate(den):
                num[i - (len(den) - 1) + j] -= c * dj
    return q, num


# -- free-function aliases for the method API --------------------------------


def cyc_galois(z: CyclotomicNumber, a: int) -> CyclotomicNumber:
    return z.galois(a)


def cyc_project(z: CyclotomicNumber, f0: int) -> CyclotomicNumber:
    """Express z in Q(xi_f0) for f0 | f, or raise NotInSubfield.

    Solves the exact linear system z = sum_j y_j * xi_f^((f/f0) j) over Q.
    """
    assert z.f % f0 == 0
    if f0 == z.f:
        return z
    phi, phi0 = euler_phi(z.f), euler_phi(f0)
    red = _reduction_table(z.f)
    step = z.f // f0
    # columns: images of the Q(xi_f0) power basis inside Q(xi_f)
    cols = [red[(step * j) % z.f] for j in range(phi0)]
    # Gaussian elimination on the phi x (phi0+1) augmented system
    aug = [[Fraction(cols[j][i]) for j in range(phi0)] + [z.coeffs[i]] for i in range(phi)]
    pivots: list[tuple[int, int]] = []
    row = 0
    for col in range(phi0):
        sel = None
        for r in range(row, phi):
            if aug[r][col] != 0:
                sel = r
                break
        if sel is None:
            continue
        aug[row], aug[sel] = aug[sel], aug[row]
        pr = aug[row]
        inv = 1 / pr[col]
        for c in range(col, phi0 + 1):
            pr[c] *= inv
        for r in range(phi):
            if r != row and aug[r][col] != 0:
                factor = aug[r][col]
                for c in range(col, phi0 + 1):
                    aug[r][c] -= factor * pr[c]
        pivots.append((row, col))
        row += 1
    # consistency: rows without pivots must have zero rhs
    for r in range(row, phi):
        if aug[r][phi0] != 0:
            raise NotInSubfield(f"element of Q(xi_{z.f}) not in Q(xi_{f0})")
    sol = [Fraction(0)] * phi0
    for r, c in pivots:
        sol[c] = aug[r][phi0]
    return CyclotomicNumber(f0, tuple(sol))


# ---------------------------------------------------------------------------
# capped-precision p-adic integers


@dataclass(frozen=True)
class ModPN:
    """A p-adic integer known modulo p^N (N = tracked precision digits)."""

    p: int
    N: int
    value: int

    def __post_init__(self) -> None:
        if self.N < 0:
            raise PrecisionTooLow(f"precision {self.N} < 0")
        object.__setattr__(self, "value", self.value % self.p**self.N)

    @property
    def modulus(self) -> int:
        return self.p**self.N

    def _join(self, other: "ModPN") -> int:
        assert self.p == other.p, "mixed primes"
        return min(self.N, other.N)

    def __add__(self, other: "ModPN") -> "ModPN":
        N = self._join(other)
        return ModPN(self.p, N, self.value + other.value)

    def __sub__(self, other: "ModPN") -> "ModPN":
        N = self._join(other)
        return ModPN(self.p, N, self.value - other.value)

    def __mul__(self, other: "ModPN") -> "ModPN":
        N = self._join(other)
        return ModPN(self.p, N, self.value * other.value)

    def __neg__(self) -> "ModPN":
        return ModPN(self.p, self.N, -self.value)

    def scale(self, k: int) -> "ModPN":
        return ModPN(self.p, self.N, self.value * k)

    def inverse(self) -> "ModPN":
        if self.value % self.p == 0:
            raise NonUnitResidue(f"{self.value} not a unit mod {self.p}^{self.N}")
        return ModPN(self.p, self.N, pow(self.value, -1, self.modulus))

    def divide_exact_by_p_power(self, k: int) -> "ModPN":
        """Divide by p^k; requires exact divisibility and costs k digits."""
        assert k >= 0
        if k == 0:
            return self
        if self.N < k:
            raise PrecisionTooLow(f"cannot divide by p^{k} at precision {self.N}")
        if self.value % self.p**k != 0:
            raise NonIntegral(
                f"value has p-valuation {self.valuation()} < {k}"
            )
        return ModPN(self.p, self.N - k, self.value // self.p**k)

    def valuation(self):
        """v_p of the value, or None when the value is 0 mod p^N (v >= N)."""
        if self.value == 0:
            return None
        v = 0
        x = self.value
        while x % self.p == 0:
            x //= self.p
            v += 1
        return v

    def reduce_to(self, N: int) -> "ModPN":
        if N > self.N:
            raise PrecisionTooLow(f"cannot raise precision {self.N} -> {N}")
        return ModPN(self.p, N, self.value)

    def eq_mod(self, other: "ModPN", s: int) -> bool:
        """Equality mod p^s; demands both operands carry >= s digits."""
        assert self.p == other.p
        if self.N < s or other.N < s:
            raise PrecisionTooLow(f"comparison mod p^{s} at precision {min(self.N, other.N)}")
        return (self.value - other.value) % self.p**s == 0

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.p}^{self.N})"


def rational_to_modpn(q: Fraction, p: int, N: int) -> ModPN:
    """Embed a p-integral rational into Z/p^N."""
    q = Fraction(q)
    if q.denominator % p == 0:
        raise NonIntegral(f"{q} has p in the denominator")
    num = ModPN(p, N, q.numerator % p**N)
    return num * ModPN(p, N, q.denominator).inverse()
