"""p-adic arithmetic, layer one: canonical unramified cyclotomic models.

For p coprime to t the field Q_p(xi_t) is unramified of degree
r = ord(p mod t) and is realized as Z_p[y]/(g) where g is a fixed monic
irreducible factor of Phi_t over Z_p.  The factor is pinned canonically
(lexicographically smallest mod-p factor, then Hensel-lifted), so every
part of the package that embeds Q(xi_t) p-adically lands in the *same*
completion.  Valuations computed here are exact: the working precision is
doubled until the answer is visible with a two-digit guard.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd

from sympy.polys.domains import ZZ
from sympy.polys.factortools import dup_zz_hensel_lift
from sympy.polys.galoistools import gf_factor_sqf

from .errors import NonIntegral, NonUnitResidue, NotCM, NotPrincipalUnit, PrecisionTooLow
from .exact import CyclotomicNumber, ModPN, cyclotomic_poly, euler_phi


def multiplicative_order(a: int, n: int) -> int:
    if n == 1:
        return 1
    if gcd(a, n) != 1:
        raise ValueError(f"{a} is not a unit mod {n}")
    k, x = 1, a % n
    while x != 1:
        x = (x * a) % n
        k += 1
    return k


@lru_cache(maxsize=None)
def _mod_p_factors(p: int, t: int) -> tuple[tuple[int, ...], ...]:
    """Monic irreducible factors of Phi_t mod p, descending coefficients,
    sorted lexicographically (all have degree ord(p mod t))."""
    phi = cyclotomic_poly(t)  # ascending coefficients
    dup = [c % p for c in reversed(phi)]
    _, facs = gf_factor_sqf(dup, ZZ(p), ZZ)
    out = sorted(tuple(int(c) % p for c in g) for g in facs)
    r = multiplicative_order(p, t)
    assert all(len(g) == r + 1 for g in out)
    return tuple(out)


@lru_cache(maxsize=None)
def canonical_unramified_factor(p: int, t: int, digits: int) -> tuple[int, ...]:
    """The canonical monic factor of Phi_t over Z/p^digits (descending
    coefficients in [0, p^digits)); its root is the distinguished image
    of xi_t in the fixed completion."""
    if gcd(p, t) != 1:
        raise ValueError(f"p={p} ramifies in the cyclotomic field of level {t}")
    facs = _mod_p_factors(p, t)
    target = facs[0]
    if len(facs) == 1:
        pd = p**digits
        phi = cyclotomic_poly(t)
        return tuple(c % pd for c in reversed(phi))
    phi_dup = [ZZ(c) for c in reversed(cyclotomic_poly(t))]
    lifted = dup_zz_hensel_lift(ZZ(p), phi_dup, [[ZZ(c) for c in g] for g in facs], digits, ZZ)
    pd = p**digits
    for g in lifted:
        gg = tuple(int(c) % pd for c in g)
        if tuple(c % p for c in gg) == target:
            return gg
    raise AssertionError("lifted factorization lost the canonical factor")


class UnramifiedModel:
    """Arithmetic in O/p^digits where O = Z_p[y]/(g) is the ring of integers
    of the fixed completion of Q(xi_t) at p (p coprime to t)."""

    def __init__(self, p: int, t: int, digits: int):
        self.p = p
        self.t = t
        self.digits = digits
        self.modulus = p**digits
        self.g = canonical_unramified_factor(p, t, digits)
        self.r = len(self.g) - 1

    def reduce_poly(self, coeffs_ascending) -> tuple[int, ...]:
        """Image of sum c_i y^i, returned as r coefficients mod p^digits."""
        pd = self.modulus
        rem = [c % pd for c in coeffs_ascending]
        g_asc = list(reversed(self.g))
        r = self.r
        for i in range(len(rem) - 1, r - 1, -1):
            top = rem[i]
            if top:
                for j in range(r):
                    rem[i - r + j] = (rem[i - r + j] - top * g_asc[j]) % pd
            rem[i] = 0
        rem = rem[:r] + [0] * (r - len(rem))
        return tuple(c % pd for c in rem[:r])

    def root_power(self, k: int) -> tuple[int, ...]:
        """Image of xi_t^k (k may be any integer)."""
        vec = [0] * (k % self.t) + [1]
        return self.reduce_poly(vec)

    def embed(self, z: CyclotomicNumber) -> tuple[int, ...]:
        """Image of an integral cyclotomic number (denominators prime to p)."""
        assert z.f == self.t
        pd = self.modulus
        coeffs = []
        for c in z.coeffs:
            if c.denominator % self.p == 0:
                raise ValueError("denominator not prime to p; scale first")
            coeffs.append(c.numerator * pow(c.denominator, -1, pd))
        return self.reduce_poly(coeffs)

    def min_valuation(self, vec) -> int | None:
        """min_i v_p(vec_i), or None if every entry is 0 mod p^digits."""
        best = None
        for c in vec:
            c %= self.modulus
            if c == 0:
                continue
            v = 0
            while c % self.p == 0:
                c //= self.p
                v += 1
            best = v if best is None else min(best, v)
            if best == 0:
                return 0
        return best


@lru_cache(maxsize=None)
def unramified_model(p: int, t: int, digits: int) -> UnramifiedModel:
    return UnramifiedModel(p, t, digits)


def unramified_valuation(z: CyclotomicNumber, p: int) -> int:
    """Exact valuation of z in Q(xi_{z.f}) at the distinguished prime over p.

    Requires p coprime to z.f (the completion is unramified, so the
    valuation extends v_p with value group Z).  The working precision is
    grown until the valuation is determined with a two-digit guard.
    """
    if z.is_zero():
        raise ValueError("valuation of zero")
    den = 1
    for c in z.coeffs:
        den = den * c.denominator // gcd(den, c.denominator)
    shift = 0
    while den % p == 0:
        den //= p
        shift += 1
    zi = z.scale(p**shift)
    digits = 12
    while True:
        model = unramified_model(p, z.f, digits)
        v = model.min_valuation(model.embed(zi))
        if v is not None and v <= digits - 2:
            return v - shift
        if digits > 1 << 14:
            raise PrecisionTooLow("valuation exceeds precision growth cap")
        digits *= 2


# ---------------------------------------------------------------------------
# Layer two: the full local fields L = Q_p(xi_{f' p^(m+1)}) and the semilocal
# algebra K_p = prod_{P|p} K_P with its Galois action.


class LocalFieldSpec:
    """Arithmetic tables for L = Q_p(xi_f), f = f' * p^(m+1), at N digits.

    The unramified part is W = Z_p[x]/(ghat) with ghat the canonical Hensel
    factor of Phi_{f'} (degree r = ord(p mod f')); the ramified part is
    generated by y with Phi_{p^(m+1)}(y) = 0.  For m = -1 there is no y and
    e = 1.  Elements are integral coordinate vectors on the basis x^i y^j
    (0 <= i < r, 0 <= j < e) stored flat at index i + r*j, entries in Z/p^N.

    The canonical primitive f-th root of unity is xi = x^s y^t, normalized
    so that xi^(p^(m+1)) = x and xi^(f') = y.  The local Galois group is
    D = {a in (Z/f)^x : a = p^k mod f'}, acting by xi -> xi^a, i.e.
    x -> x^(p^k) and y -> y^(a mod p^(m+1)).
    """

    def __init__(self, p: int, fprime: int, m: int, N: int):
        if p == 2:
            raise ValueError("p must be odd")
        if fprime % p == 0:
            raise ValueError("fprime must be coprime to p")
        if m < -1 or N < 1:
            raise ValueError("need m >= -1 and N >= 1")
        self.p, self.fprime, self.m, self.N = p, fprime, m, N
        self.pm1 = p ** (m + 1)
        self.f = fprime * self.pm1
        self.r = multiplicative_order(p, fprime)
        self.e = euler_phi(self.pm1)
        self.dim = self.r * self.e
        self.q = p**N
        r, e, q = self.r, self.e, self.q

        self.ghat = canonical_unramified_factor(p, fprime, N)
        g_asc = list(reversed(self.ghat))  # ascending, monic at index r

        # single-step reduction rows: x^r and y^e on the basis
        self._xr = [(-g_asc[i]) % q for i in range(r)]
        phi_y = cyclotomic_poly(self.pm1)  # ascending, degree e
        self._yr = [(-phi_y[j]) % q for j in range(e)]

        # chains x^(r+k), y^(e+k) needed when reducing a full product
        self._xrows = self._power_chain(self._xr, r - 1)
        self._yrows = self._power_chain(self._yr, e - 1)

        # univariate power tables x^a (a < f') and y^b (b < p^(m+1))
        self._xpow = self._univariate_powers(self._xr, r, fprime)
        self._ypow = self._univariate_powers(self._yr, e, self.pm1)

        # canonical root exponents: xi = x^s y^t
        self._s = pow(self.pm1 % fprime, -1, fprime) if fprime > 1 else 0
        self._t = pow(fprime % self.pm1, -1, self.pm1) if m >= 0 else 0

        # local Galois group inside (Z/f)^x, with Frobenius discrete logs
        porbit = {}
        a = 1 % fprime
        for k in range(r):
            porbit[a] = k
            a = (a * p) % fprime
        self._frob_dlog = porbit
        self.galois_exponents = tuple(
            sorted(a for a in range(1, self.f + 1)
                   if gcd(a, self.f) == 1 and (a % fprime) in porbit))
        assert len(self.galois_exponents) == self.dim

        self._trace_row = self._build_trace_row()
        self._binom = [[comb(j, t) for j in range(e)] for t in range(e)]
        self._xi_cache: dict[int, tuple[int, ...]] = {}

    # -- table construction ---------------------------------------------------

    def _power_chain(self, top_row, count):
        """Rows for x^(n), x^(n+1), ... given the row for x^n (length n)."""
        n = len(top_row)
        rows = [list(top_row)]
        for _ in range(max(0, count - 1)):
            prev = rows[-1]
            nxt = [0] + prev[: n - 1]
            lead = prev[n - 1]
            rows.append([(nxt[i] + lead * top_row[i]) % self.q for i in range(n)])
        return [tuple(row) for row in rows]

    def _univariate_powers(self, top_row, n, period):
        pows = [tuple(1 if i == 0 else 0 for i in range(n))]
        for _ in range(period - 1):
            prev = pows[-1]
            nxt = [0] + list(prev[: n - 1])
            lead = prev[n - 1]
            pows.append(tuple((nxt[i] + lead * top_row[i]) % self.q for i in range(n)))
        return pows

    def _pure_sum_coordinate(self, vecs, n):
        total = [0] * n
        for v in vecs:
            for i in range(n):
                total[i] += v[i]
        assert all(c % self.q == 0 for c in total[1:]), "trace of a basis monomial must be rational"
        return total[0] % self.q

    def _build_trace_row(self):
        r, e, q = self.r, self.e, self.q
        trx = [self._pure_sum_coordinate(
            [self._xpow[(i * pow(self.p, k, self.fprime)) % self.fprime] for k in range(r)]
            if self.fprime > 1 else [self._xpow[0]] * r, r)
            for i in range(r)]
        units = [b for b in range(self.pm1) if gcd(b, self.pm1) == 1]
        tr_y = [self._pure_sum_coordinate([self._ypow[(j * b) % self.pm1] for b in units], e)
                for j in range(e)]
        return tuple(trx[i] * tr_y[j] % q for j in range(e) for i in range(r))

    # -- raw vector arithmetic --------------------------------------------------

    def mul_vec(self, a, b, q):
        r, e = self.r, self.e
        if self.dim == 1:
            return ((a[0] * b[0]) % q,)
        wr = 2 * r - 1
        w = [0] * (wr * (2 * e - 1))
        for j1 in range(e):
            b1 = r * j1
            for i1 in range(r):
                c1 = a[b1 + i1]
                if not c1:
                    continue
                for j2 in range(e):
                    b2 = r * j2
                    wb = i1 + wr * (j1 + j2)
                    for i2 in range(r):
                        c2 = b[b2 + i2]
                        if c2:
                            w[wb + i2] += c1 * c2
        for j in range(2 * e - 2, e - 1, -1):
            row = self._yrows[j - e]
            for i in range(wr):
                c = w[i + wr * j]
                if c:
                    for jj in range(e):
                        rv = row[jj]
                        if rv:
                            w[i + wr * jj] += c * rv
        for i in range(2 * r - 2, r - 1, -1):
            row = self._xrows[i - r]
            for j in range(e):
                c = w[i + wr * j]
                if c:
                    base = wr * j
                    for ii in range(r):
                        rv = row[ii]
                        if rv:
                            w[base + ii] += c * rv
        return tuple(w[i + wr * j] % q for j in range(e) for i in range(r))

    def mul_by_x(self, vec, q):
        r, e = self.r, self.e
        out = [0] * self.dim
        for j in range(e):
            base = r * j
            lead = vec[base + r - 1]
            for i in range(r - 1, 0, -1):
                out[base + i] = vec[base + i - 1]
            out[base] = 0
            if lead:
                for i in range(r):
                    out[base + i] = (out[base + i] + lead * self._xr[i]) % q
        return tuple(c % q for c in out)

    def mul_by_y(self, vec, q):
        r, e = self.r, self.e
        out = [0] * self.dim
        top = vec[r * (e - 1): r * e]
        for j in range(e - 1, 0, -1):
            for i in range(r):
                out[r * j + i] = vec[r * (j - 1) + i]
        for j in range(e):
            rv = self._yr[j]
            if rv:
                for i in range(r):
                    out[r * j + i] = (out[r * j + i] + top[i] * rv) % q
        return tuple(c % q for c in out)

    def xi_vec(self, k: int) -> tuple[int, ...]:
        """Coordinates of xi^k (xi the canonical primitive f-th root)."""
        k %= self.f
        if k not in self._xi_cache:
            xv = self._xpow[(self._s * k) % self.fprime] if self.fprime > 1 else (1,)
            yv = self._ypow[(self._t * k) % self.pm1] if self.m >= 0 else (1,)
            r = self.r
            out = [0] * self.dim
            for j, cy in enumerate(yv):
                if cy:
                    for i, cx in enumerate(xv):
                        if cx:
                            out[i + r * j] = (cx * cy) % self.q
            self._xi_cache[k] = tuple(out)
        return self._xi_cache[k]

    def galois_vec(self, a: int, vec, q):
        """Apply the local automorphism xi -> xi^a (a in the local group)."""
        a %= self.f
        if (a % self.fprime) not in self._frob_dlog or gcd(a, self.f) != 1:
            raise ValueError(f"{a} is not in the local Galois group mod {self.f}")
        k = self._frob_dlog[a % self.fprime]
        xq = pow(self.p, k, self.fprime) if self.fprime > 1 else 0
        b = a % self.pm1
        r, e = self.r, self.e
        out = [0] * self.dim
        for j in range(e):
            yv = self._ypow[(b * j) % self.pm1] if self.m >= 0 else (1,)
            for i in range(r):
                c = vec[i + r * j]
                if not c:
                    continue
                xv = self._xpow[(i * xq) % self.fprime] if self.fprime > 1 else (1,)
                for jj in range(e):
                    cy = yv[jj]
                    if cy:
                        base = r * jj
                        cc = c * cy
                        for ii in range(r):
                            cx = xv[ii]
                            if cx:
                                out[base + ii] += cc * cx
        return tuple(cv % q for cv in out)

    def valuation_vec(self, vec, prec):
        """pi-adic valuation (v(p) = e) or None when 0 mod p^prec."""
        r, e = self.r, self.e
        q = self.p**prec
        best = None
        for t in range(e):
            brow = self._binom[t]
            for i in range(r):
                c = sum(brow[j] * vec[i + r * j] for j in range(t, e)) % q
                if c == 0:
                    continue
                vp = 0
                while c % self.p == 0:
                    c //= self.p
                    vp += 1
                val = e * vp + t
                if best is None or val < best:
                    best = val
        return best

    def __repr__(self) -> str:
        return f"LocalFieldSpec(p={self.p}, f'={self.fprime}, m={self.m}, N={self.N})"


@lru_cache(maxsize=None)
def build_local(p: int, fprime: int, m: int, N: int) -> LocalFieldSpec:
    """Memoized constructor; the canonical factor pins the model per (p,f',m)."""
    return LocalFieldSpec(p, fprime, m, N)


@dataclass(frozen=True)
class LocalElement:
    """An integral element of L known coordinatewise mod p^prec."""

    spec: LocalFieldSpec
    coeffs: tuple[int, ...]
    prec: int

    def __post_init__(self):
        assert 1 <= self.prec <= self.spec.N
        q = self.spec.p**self.prec
        object.__setattr__(self, "coeffs", tuple(c % q for c in self.coeffs))

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def from_int(spec: LocalFieldSpec, k: int, prec: int | None = None) -> "LocalElement":
        prec = spec.N if prec is None else prec
        return LocalElement(spec, (k,) + (0,) * (spec.dim - 1), prec)

    @staticmethod
    def one(spec: LocalFieldSpec, prec: int | None = None) -> "LocalElement":
        return LocalElement.from_int(spec, 1, prec)

    @staticmethod
    def zero(spec: LocalFieldSpec, prec: int | None = None) -> "LocalElement":
        return LocalElement.from_int(spec, 0, prec)

    @staticmethod
    def xi_power(spec: LocalFieldSpec, k: int, prec: int | None = None) -> "LocalElement":
        prec = spec.N if prec is None else prec
        return LocalElement(spec, spec.xi_vec(k), prec)

    # -- ring operations ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, LocalElement):
            assert other.spec is self.spec or (
                (other.spec.p, other.spec.fprime, other.spec.m, other.spec.N)
                == (self.spec.p, self.spec.fprime, self.spec.m, self.spec.N)
            ), "mixed local fields"
            return other
        if isinstance(other, int):
            return LocalElement.from_int(self.spec, other, self.prec)
        if isinstance(other, Fraction):
            return LocalElement.from_int(self.spec, 1, self.prec).scale(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        prec = min(self.prec, o.prec)
        return LocalElement(self.spec, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)), prec)

    __radd__ = __add__

    def __neg__(self):
        return LocalElement(self.spec, tuple(-c for c in self.coeffs), self.prec)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        prec = min(self.prec, o.prec)
        vec = self.spec.mul_vec(self.coeffs, o.coeffs, self.spec.p**prec)
        return LocalElement(self.spec, vec, prec)

    __rmul__ = __mul__

    def scale(self, k) -> "LocalElement":
        """Multiply by an integer or a p-integral rational."""
        k = Fraction(k)
        if k.denominator % self.spec.p == 0:
            raise NonIntegral(f"scalar {k} has p in the denominator")
        q = self.spec.p**self.prec
        mult = k.numerator * pow(k.denominator, -1, q)
        return LocalElement(self.spec, tuple(c * mult for c in self.coeffs), self.prec)

    def __pow__(self, k: int) -> "LocalElement":
        if k < 0:
            return self.inverse() ** (-k)
        out = LocalElement.one(self.spec, self.prec)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inverse(self) -> "LocalElement":
        n, spec = self.spec.dim, self.spec
        q = spec.p**self.prec
        cols = [list(self.coeffs)]
        for j in range(spec.e):
            for i in range(spec.r):
                if i == 0 and j == 0:
                    continue
                prev = cols[-1]
                cols.append(list(spec.mul_by_x(prev, q) if i else spec.mul_by_y(cols[-spec.r], q)))
        rows = [[cols[t][s] for t in range(n)] for s in range(n)]
        rhs = [1] + [0] * (n - 1)
        sol = solve_mod_padic(rows, rhs, spec.p, q)
        return LocalElement(spec, tuple(sol), self.prec)

    # -- precision and valuation ---------------------------------------------------

    def reduce_to(self, prec: int) -> "LocalElement":
        if prec > self.prec:
            raise PrecisionTooLow(f"cannot raise precision {self.prec} -> {prec}")
        return LocalElement(self.spec, self.coeffs, prec)

    def divide_exact_by_p_power(self, k: int) -> "LocalElement":
        if k == 0:
            return self
        pk = self.spec.p**k
        if self.prec <= k:
            raise PrecisionTooLow(f"cannot divide by p^{k} at precision {self.prec}")
        if any(c % pk for c in self.coeffs):
            raise NonIntegral(f"coordinates not divisible by p^{k}")
        return LocalElement(self.spec, tuple(c // pk for c in self.coeffs), self.prec - k)

    def valuation(self):
        """pi-adic valuation normalized by v(p) = e; None if 0 mod p^prec."""
        return self.spec.valuation_vec(self.coeffs, self.prec)

    def eq_mod(self, other: "LocalElement", digits: int) -> bool:
        """Coordinatewise congruence mod p^digits."""
        assert other.spec is self.spec
        if self.prec < digits or other.prec < digits:
            raise PrecisionTooLow(f"comparison mod p^{digits} at precision {min(self.prec, other.prec)}")
        q = self.spec.p**digits
        return all((a - b) % q == 0 for a, b in zip(self.coeffs, other.coeffs))

    def constant_coordinate(self) -> ModPN:
        """The Q_p-coordinate of an element asserted to be rational."""
        assert all(c == 0 for c in self.coeffs[1:]), "element is not rational"
        return ModPN(self.spec.p, self.prec, self.coeffs[0])

    def galois(self, a: int) -> "LocalElement":
        vec = self.spec.galois_vec(a, self.coeffs, self.spec.p**self.prec)
        return LocalElement(self.spec, vec, self.prec)

    def __repr__(self) -> str:
        return f"LocalElement({self.coeffs}, prec={self.prec})"


def solve_mod_padic(rows: list[list[int]], rhs: list[int], p: int, q: int) -> list[int]:
    """Solve A x = b over Z/q (q = p^N) by elimination with unit pivots.

    A may have more rows than columns; the extra equations are checked for
    consistency.  Raises NonUnitResidue when no unit pivot exists (A is not
    invertible mod p on its column space).
    """
    nrows, ncols = len(rows), len(rows[0]) if rows else 0
    a = [row[:] + [rhs[i]] for i, row in enumerate(rows)]
    piv_row_of_col: list[int] = []
    rr = 0
    for col in range(ncols):
        piv = next((i for i in range(rr, nrows) if a[i][col] % p != 0), None)
        if piv is None:
            raise NonUnitResidue(f"no unit pivot in column {col}")
        a[rr], a[piv] = a[piv], a[rr]
        inv = pow(a[rr][col], -1, q)
        a[rr] = [(v * inv) % q for v in a[rr]]
        for i in range(nrows):
            if i != rr and a[i][col] % q:
                c = a[i][col]
                a[i] = [(a[i][t] - c * a[rr][t]) % q for t in range(ncols + 1)]
        piv_row_of_col.append(rr)
        rr += 1
    for i in range(rr, nrows):
        assert a[i][ncols] % q == 0, "inconsistent linear system"
    return [a[piv_row_of_col[c]][ncols] % q for c in range(ncols)]


def divide_exact(z: LocalElement, d: LocalElement) -> LocalElement:
    """z / d for integral quotients, including non-unit divisors.

    When d is a unit this is a linear solve.  Otherwise z * prod_{a != 1}
    sigma_a(d) is divided by the rational norm of d, costing v_p(N(d))
    digits; a non-integral quotient raises NonIntegral.
    """
    spec = z.spec
    if d.valuation() == 0:
        return z * d.inverse()
    conj = LocalElement.one(spec, d.prec)
    for a in spec.galois_exponents:
        if a != 1:
            conj = conj * d.galois(a)
    norm = (d * conj).constant_coordinate()
    t = norm.valuation()
    if t is None:
        raise NonUnitResidue("division by an element indistinguishable from 0")
    unit = norm.divide_exact_by_p_power(t)
    return (z * conj).scale(Fraction(1, unit.value)).divide_exact_by_p_power(t)


# -- logarithm, exponential, trace ------------------------------------------


def _vp(k: int, p: int) -> int:
    v = 0
    while k % p == 0:
        k //= p
        v += 1
    return v


def _log_cutoff(v1: int, e: int, p: int, n_target: int) -> int:
    """Least k0 with k*v1 - e*v_p(k) >= e*n_target for all k >= k0.

    Requires v1 >= e; then v_p(k) <= log_p(k) <= k/2 makes every k beyond
    2*n_target satisfy the bound, so a finite scan suffices.
    """
    assert v1 >= e >= 1
    horizon = 2 * n_target + 4
    last_fail = 0
    for k in range(1, horizon + 1):
        if k * v1 - e * _vp(k, p) < e * n_target:
            last_fail = k
    return last_fail + 1


def log_p(u: LocalElement, n_target: int | None = None) -> LocalElement:
    """p-adic logarithm of a principal unit (log of torsion is 0).

    Units with v(u-1) < e are first raised to p-th powers until the series
    has integral terms; the final exact division by p^s costs s digits and
    raises NonIntegral when the logarithm genuinely is not integral.
    """
    spec = u.spec
    e, p = spec.e, spec.p
    n_target = u.prec if n_target is None else min(n_target, u.prec)
    v1 = (u - 1).valuation()
    if v1 is None:
        return LocalElement.zero(spec, u.prec)
    if v1 < 1:
        raise NotPrincipalUnit(f"v(u-1) = {v1} < 1")
    s = 0
    w = u
    while v1 is not None and v1 < e:
        w = w**p
        s += 1
        v1 = (w - 1).valuation()
    if v1 is None:  # torsion: some p-power of u is exactly 1
        return LocalElement.zero(spec, max(1, u.prec - s))
    t = w - 1
    k_max = _log_cutoff(v1, e, p, n_target)
    acc = LocalElement.zero(spec, t.prec)
    power = LocalElement.one(spec, t.prec)
    for k in range(1, k_max):
        power = power * t
        vp = _vp(k, p)
        if k * v1 - e * vp >= e * n_target:
            continue  # term vanishes at the working window
        term = power.divide_exact_by_p_power(vp).scale(Fraction((-1) ** (k + 1), k // p**vp))
        acc = acc + term
    acc = acc.reduce_to(min(acc.prec, n_target))
    return acc.divide_exact_by_p_power(s) if s else acc


def exp_p(z: LocalElement) -> LocalElement:
    """p-adic exponential; domain v(z) >= e (that is, z in pO)."""
    spec = z.spec
    e, p = spec.e, spec.p
    v = z.valuation()
    if v is None:
        return LocalElement.one(spec, z.prec)
    if v < e:
        raise ValueError(f"exp_p needs v(z) >= e = {e}, got {v}")
    n_target = z.prec
    horizon = 2 * n_target + 4
    acc = LocalElement.one(spec, z.prec)
    power = LocalElement.one(spec, z.prec)
    vp_fact = 0
    for k in range(1, horizon + 1):
        power = power * z
        vp_fact += _vp(k, p)
        if k * v - e * vp_fact >= e * n_target:
            continue
        term = power.divide_exact_by_p_power(vp_fact).scale(Fraction(1, _factorial_unit_part(k, p)))
        acc = acc + term
    return acc


@lru_cache(maxsize=None)
def _factorial_unit_part(k: int, p: int) -> int:
    """k! / p^(v_p(k!)), exact."""
    out = 1
    for i in range(2, k + 1):
        while i % p == 0:
            i //= p
        out *= i
    return out


def trace_to_Qp(x: LocalElement) -> ModPN:
    """Trace of L over Q_p (sum of the e*r Galois conjugates)."""
    spec = x.spec
    q = spec.p**x.prec
    total = sum(c * t for c, t in zip(x.coeffs, spec._trace_row)) % q
    return ModPN(spec.p, x.prec, total)


# ---------------------------------------------------------------------------
# The semilocal algebra K (x) Q_p = prod_{P|p} K_P.
#
# Every semilocal element is stored at the full conductor level f of its
# field: one component per prime of Q(xi_f) above p, i.e. per coset c*D of
# the local Galois group D = <p-Frobenius> x (p-part units) inside (Z/f)^x.
# The component at c realizes the embedding xi_f -> xi^c into the model
# local field.  Subfields K = Q(xi_f)^H appear as H-invariant tuples.


class SemilocalStructure:
    """Coset bookkeeping for the primes above p in Q(xi_f), plus the model."""

    def __init__(self, f: int, p: int, N: int):
        fprime, m = f, -1
        while fprime % p == 0:
            fprime //= p
            m += 1
        self.f, self.p, self.N = f, p, N
        self.fprime, self.m = fprime, m
        self.local = build_local(p, fprime, m, N)
        rep_of: dict[int, int] = {}
        reps = []
        for c in range(1, f + 1):
            if gcd(c, f) != 1 or c in rep_of:
                continue
            reps.append(c)
            for d in self.local.galois_exponents:
                rep_of[(c * d) % f] = c
        self.reps = tuple(reps)
        self.rep_of = rep_of
        assert len(reps) * self.local.dim == euler_phi(f)

    def __repr__(self) -> str:
        return f"SemilocalStructure(f={self.f}, p={self.p}, primes={len(self.reps)}, N={self.N})"


@lru_cache(maxsize=None)
def semilocal_structure(f: int, p: int, N: int) -> SemilocalStructure:
    return SemilocalStructure(f, p, N)


@dataclass(frozen=True)
class SemilocalElement:
    """An element of K (x) Q_p, one local component per prime above p."""

    fspec: "object"  # FieldSpec; kept untyped to avoid an import cycle
    structure: SemilocalStructure
    components: dict

    def __post_init__(self):
        assert set(self.components) == set(self.structure.reps)

    @staticmethod
    def one(fspec, st: SemilocalStructure, prec: int | None = None) -> "SemilocalElement":
        prec = st.N if prec is None else prec
        return SemilocalElement(
            fspec, st, {c: LocalElement.one(st.local, prec) for c in st.reps})

    def _zip(self, other, op):
        assert other.structure is self.structure
        return SemilocalElement(
            self.fspec, self.structure,
            {c: op(self.components[c], other.components[c]) for c in self.structure.reps})

    def __mul__(self, other):
        return self._zip(other, lambda a, b: a * b)

    def inverse(self) -> "SemilocalElement":
        return SemilocalElement(
            self.fspec, self.structure,
            {c: x.inverse() for c, x in self.components.items()})

    def __pow__(self, k: int) -> "SemilocalElement":
        return SemilocalElement(
            self.fspec, self.structure,
            {c: x**k for c, x in self.components.items()})

    def galois(self, b: int) -> "SemilocalElement":
        """The action of sigma_b, b in (Z/f)^x: component c of the image is
        sigma_d applied to component rep(c*b), where d = c*b*rep(c*b)^(-1)
        lies in the local Galois group."""
        st = self.structure
        b %= st.f
        if gcd(b, st.f) != 1:
            raise ValueError(f"{b} is not a unit mod {st.f}")
        comps = {}
        for c in st.reps:
            cb = (c * b) % st.f
            c2 = st.rep_of[cb]
            d = (cb * pow(c2, -1, st.f)) % st.f
            comps[c] = self.components[c2].galois(d)
        return SemilocalElement(self.fspec, st, comps)

    def conjugate(self) -> "SemilocalElement":
        return self.galois(self.structure.f - 1)

    def eq_mod(self, other: "SemilocalElement", digits: int) -> bool:
        assert other.structure is self.structure
        return all(self.components[c].eq_mod(other.components[c], digits)
                   for c in self.structure.reps)

    def is_principal_unit(self) -> bool:
        for x in self.components.values():
            v = (x - 1).valuation()
            if v is not None and v < 1:
                return False
        return True

    def min_precision(self) -> int:
        return min(x.prec for x in self.components.values())

    def __repr__(self) -> str:
        return f"SemilocalElement({self.structure}, prec={self.min_precision()})"


def iota_P(z: CyclotomicNumber, c: int, st: SemilocalStructure,
           prec: int | None = None) -> LocalElement:
    """The embedding of z in the local field at the prime indexed by c,
    sending xi_{f0} to xi^(c * f/f0) for the canonical model root xi."""
    prec = st.N if prec is None else prec
    local = st.local
    if st.f % z.f != 0:
        raise ValueError(f"level {z.f} does not divide {st.f}")
    step = st.f // z.f
    q = local.p**prec
    acc = [0] * local.dim
    for k, coeff in enumerate(z.coeffs):
        if not coeff:
            continue
        if coeff.denominator % local.p == 0:
            raise NonIntegral(f"coefficient {coeff} has p = {local.p} in the denominator")
        mult = coeff.numerator * pow(coeff.denominator, -1, q) % q
        vec = local.xi_vec((c * k * step) % st.f)
        for i in range(local.dim):
            if vec[i]:
                acc[i] = (acc[i] + mult * vec[i]) % q
    return LocalElement(local, tuple(acc), prec)


def iota_semilocal(z: CyclotomicNumber, fspec, st: SemilocalStructure,
                   prec: int | None = None) -> SemilocalElement:
    """All components of the semilocal embedding of a global element."""
    return SemilocalElement(
        fspec, st, {c: iota_P(z, c, st, prec) for c in st.reps})


def sample_minus_unit(fspec, p: int, seed, prec: int) -> SemilocalElement:
    """A deterministic pseudo-random element of U^1(K_p) in the image of
    u = w * c(w)^(-1) (c = complex conjugation), so that u * c(u) = 1.

    The raw w has components 1 + p*(random integral element); digits are
    drawn coordinatewise from independent streams so that samples at higher
    precision truncate to samples at lower precision.  For a proper
    subfield K = Q(xi_f)^H the raw element is averaged over H first.
    """
    if not fspec.is_cm:
        raise NotCM(f"{fspec} is not CM; minus-units are trivial")
    st = semilocal_structure(fspec.f, p, prec)
    hset = fspec.gamma_group.hset
    comps = {}
    for c in st.reps:
        coords = []
        for idx in range(st.local.dim):
            rng = random.Random(f"minus-unit:{fspec.f}:{tuple(sorted(hset))}:{p}:{seed}:{c}:{idx}")
            z = sum(rng.randrange(p) * p**k for k in range(prec - 1))
            coords.append((1 if idx == 0 else 0) + p * z)
        comps[c] = LocalElement(st.local, tuple(coords), prec)
    w = SemilocalElement(fspec, st, comps)
    if hset != frozenset({1}):
        sym = None
        for h in sorted(hset):
            wh = w.galois(h)
            sym = wh if sym is None else sym * wh
        w = sym
    return w * w.conjugate().inverse()


class _LevelConversion:
    """Change of model from level f_K down to level f_F | f_K.

    The canonical roots at the two levels need not be directly compatible:
    the degree-f_F' factor pinned at the lower level vanishes at exactly one
    Frobenius orbit of f_F'-th roots of unity inside the big model.  The
    smallest exponent w with ghat_F(omega^w) = 0 (omega = the canonical
    f_F'-th root upstairs) fixes the embedding eps(xi_F) = xi_K^(ratio*w'),
    w' = w lifted to a unit mod f_F that is 1 mod the p-part.  Columns of
    `rows` are the eps-images of the downstairs basis monomials.
    """

    def __init__(self, fK: int, fF: int, p: int, N: int):
        assert fK % fF == 0
        stK = semilocal_structure(fK, p, N)
        stF = semilocal_structure(fF, p, N)
        LK, LF = stK.local, stF.local
        ratio = fK // fF
        q = p**N
        one = (1,) + (0,) * (LK.dim - 1)
        w_found = None
        for w in range(1, LF.fprime + 1):
            if gcd(w, LF.fprime) != 1:
                continue
            root = LK.xi_vec((ratio * LF.pm1 * w) % fK)
            acc = tuple([0] * LK.dim)
            for coef in LF.ghat:  # descending coefficients, Horner
                acc = LK.mul_vec(acc, root, q)
                acc = tuple((a + coef * o) % q for a, o in zip(acc, one))
            if all(a % q == 0 for a in acc):
                w_found = w
                break
        assert w_found is not None, "no compatible root for the lower-level factor"
        if fF == 1:
            wprime = 1
        else:
            n1, n2 = LF.fprime, LF.pm1
            a1 = w_found % n1
            if n2 == 1:
                wprime = a1 % fF
            elif n1 == 1:
                wprime = 1 % fF
            else:
                wprime = (a1 + n1 * (((1 - a1) * pow(n1, -1, n2)) % n2)) % fF
        self.wprime = wprime
        self.stK, self.stF = stK, stF
        cols = []
        for j in range(LF.e):
            for i in range(LF.r):
                expo = (ratio * wprime * (LF.pm1 * i + LF.fprime * j)) % fK
                cols.append(LK.xi_vec(expo))
        self.rows = [[cols[t][s] for t in range(LF.dim)] for s in range(LK.dim)]


@lru_cache(maxsize=None)
def level_conversion(fK: int, fF: int, p: int, N: int) -> _LevelConversion:
    return _LevelConversion(fK, fF, p, N)


def to_sublevel(v: SemilocalElement, F) -> SemilocalElement:
    """Rewrite an element already invariant under Gal(K/F) in the F-level model."""
    stK = v.structure
    p = stK.p
    conv = level_conversion(stK.f, F.f, p, stK.N)
    stF = conv.stF
    comps = {}
    for cF in stF.reps:
        target = (conv.wprime * cF) % F.f
        ctil = target if target else F.f
        while gcd(ctil, stK.f) != 1:
            ctil += F.f
        cr = stK.rep_of[ctil % stK.f]
        d = (ctil * pow(cr, -1, stK.f)) % stK.f
        big = v.components[cr].galois(d)
        sol = solve_mod_padic(conv.rows, list(big.coeffs), p, p**big.prec)
        comps[cF] = LocalElement(stF.local, tuple(sol), big.prec)
    return SemilocalElement(F, stF, comps)


def semilocal_norm(u: SemilocalElement, F) -> SemilocalElement:
    """The norm K (x) Q_p -> F (x) Q_p for a subfield F of K, computed as the
    product of the Galois translates over coset representatives of
    Gal(Q(xi_{f_K})/K) inside Gal(Q(xi_{f_K})/F-part), then rewritten in the
    lower-level model."""
    K = u.fspec
    stK = u.structure
    fK, fF = stK.f, F.f
    if fK % fF != 0:
        raise ValueError(f"conductor {fF} does not divide {fK}")
    H_F = F.gamma_group.hset
    H_K = K.gamma_group.hset
    H_rel = {a for a in range(1, fK + 1)
             if gcd(a, fK) == 1 and (a % fF) in H_F}
    assert H_K <= H_rel, "F is not a subfield of K"
    seen: set[int] = set()
    acc = None
    for a in sorted(H_rel):
        if a in seen:
            continue
        for h in H_K:
            seen.add((a * h) % fK)
        ga = u.galois(a)
        acc = ga if acc is None else acc * ga
    if fF == fK:
        return SemilocalElement(F, stK, acc.components)
    return to_sublevel(acc, F)
