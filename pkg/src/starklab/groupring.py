"""Finite abelian Galois-type groups and their group rings.

Groups here are quotients U/H where H <= U <= (Z/fZ)^x.  Elements are stored
as canonical coset representatives (the smallest member of a*H).  This covers
the full Galois group of the f-th cyclotomic field (U = all units), the
subgroup fixing a base field (U smaller) and quotients by enlarged H
(restriction to subfields, or killing complex conjugation) with one type.

Group ring elements are coefficient dictionaries keyed by representative.
Coefficients may be Fraction, CyclotomicNumber or ModPN; arithmetic only ever
uses +, -, * on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd, lcm

from .errors import (
    CharacterUndefined,
    EvenCharacter,
    NoComplexConjugation,
)
from .exact import CyclotomicNumber, ModPN


def _closure(f: int, gens) -> frozenset[int]:
    """Subgroup of (Z/fZ)^x generated by gens."""
    for g in gens:
        assert gcd(g, f) == 1, f"{g} not a unit mod {f}"
    seen = {1 % f}
    frontier = [1 % f]
    gens = [g % f for g in gens]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = (x * g) % f
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return frozenset(seen)


def _unit_gens(f: int) -> tuple[int, ...]:
    """Generators of (Z/fZ)^x, via CRT on prime power parts."""
    from sympy import factorint, primitive_root

    gens: list[int] = []
    parts = factorint(f)
    for q, e in parts.items():
        qe = q**e
        rest = f // qe
        if q == 2:
            local = [i for i in (-1 % qe, 5 % qe) if qe > 2]
            if qe == 2:
                local = []
        else:
            local = [int(primitive_root(qe))]
        for g in local:
            if rest == 1:
                gens.append(g % f)
            else:
                # g at q-part, 1 elsewhere
                inv = pow(qe, -1, rest)
                gens.append((g * rest * pow(rest, -1, qe) + 1 * qe * inv) % f)
    return tuple(g for g in gens if g != 1 % f) or ((1 % f),)


@dataclass(frozen=True)
class AbelianGroup:
    """The quotient U/H with H <= U <= (Z/fZ)^x, elements as min-reps."""

    f: int
    hset: frozenset[int]
    uset: frozenset[int]

    @staticmethod
    def make(f: int, h_gens=(), u_gens=None) -> "AbelianGroup":
        hset = _closure(f, h_gens)
        if u_gens is None:
            uset = _closure(f, _unit_gens(f))
            assert len(uset) == _phi(f)
        else:
            uset = _closure(f, tuple(u_gens) + tuple(hset))
        assert hset <= uset
        return AbelianGroup(f, hset, uset)

    # -- element plumbing ----------------------------------------------------

    def rep(self, a: int) -> int:
        a %= self.f
        assert a in self.uset, f"{a} not in the underlying subgroup mod {self.f}"
        return min((a * h) % self.f for h in self.hset)

    @property
    def identity(self) -> int:
        return self.rep(1)

    def mul(self, a: int, b: int) -> int:
        return self.rep(a * b)

    def inv(self, a: int) -> int:
        return self.rep(pow(a, -1, self.f))

    def power(self, a: int, k: int) -> int:
        return self.rep(pow(a, k, self.f))

    @property
    def elements(self) -> tuple[int, ...]:
        return _elements(self)

    @property
    def order(self) -> int:
        return len(self.elements)

    def element_order(self, a: int) -> int:
        a = self.rep(a)
        x, k = a, 1
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    def contains(self, a: int) -> bool:
        return a % self.f in self.uset

    # -- derived groups -------------------------------------------------------

    def subgroup(self, gens) -> "AbelianGroup":
        return AbelianGroup(self.f, self.hset, _closure(self.f, tuple(gens) + tuple(self.hset)))

    def quotient_by(self, gens) -> "AbelianGroup":
        for g in gens:
            assert g % self.f in self.uset
        return AbelianGroup(self.f, _closure(self.f, tuple(gens) + tuple(self.hset)), self.uset)

    def conjugation(self) -> int:
        """The class of -1, raising if it is trivial (field not CM)."""
        c = self.rep(-1)
        if c == self.identity:
            raise NoComplexConjugation(f"-1 lies in H mod {self.f}")
        return c

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        """d_1 | d_2 | ... | d_k with the group isomorphic to prod Z/d_i."""
        return tuple(d for _, d in reversed(_basis(self)))

    @property
    def basis(self) -> tuple[tuple[int, int], ...]:
        """(generator rep, order) pairs, orders in decreasing divisibility."""
        return _basis(self)

    def coordinates(self, a: int) -> tuple[int, ...]:
        """Exponents of a on the basis (same order as .basis)."""
        return _coords(self)[self.rep(a)]

    def __repr__(self) -> str:
        return f"AbelianGroup(f={self.f}, |H|={len(self.hset)}, |G|={self.order})"


def _phi(f: int) -> int:
    from .exact import euler_phi

    return euler_phi(f)


@lru_cache(maxsize=None)
def _elements(g: AbelianGroup) -> tuple[int, ...]:
    return tuple(sorted({min((u * h) % g.f for h in g.hset) for u in g.uset}))


@lru_cache(maxsize=None)
def _basis(g: AbelianGroup) -> tuple[tuple[int, int], ...]:
    """Basis of U/H: (rep, order) with each order dividing the previous one.

    Classical construction: pick an element of maximal order (= the exponent
    of the group), quotient it out, recurse, and lift the recursive basis.
    """
    if g.order == 1:
        return ()
    best, best_ord = None, 0
    for a in g.elements:
        o = g.element_order(a)
        if o > best_ord:
            best, best_ord = a, o
    e = best_ord
    sub = g.quotient_by([best])
    out = [(best, e)]
    for y, d in _basis(sub):
        # y^d lands in H*<best>; write it as best^t, then strip best^(t/d)
        yd = g.power(y, d)
        t = None
        x, k = g.identity, 0
        while True:
            if x == yd:
                t = k
                break
            x, k = g.mul(x, best), k + 1
            assert k <= e, "lift search failed"
        assert t % d == 0, "maximal-order invariant violated"
        lifted = g.mul(y, g.power(best, (-(t // d)) % e))
        assert g.element_order(lifted) == d
        out.append((lifted, d))
    return tuple(out)


@lru_cache(maxsize=None)
def _coords(g: AbelianGroup) -> dict[int, tuple[int, ...]]:
    basis = _basis(g)
    table: dict[int, tuple[int, ...]] = {}
    ranges = [range(d) for _, d in basis]
    for exps in product(*ranges) if basis else [()]:
        x = g.identity
        for (b, _), k in zip(basis, exps):
            x = g.mul(x, g.power(b, k))
        table[x] = tuple(exps)
    assert len(table) == g.order, "basis does not span"
    return table


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class Character:
    """Character of an AbelianGroup, as exponents t_j on the basis.

    The value on a basis element of order d_j is xi_e^(t_j * e / d_j) where e
    is the group exponent; values are returned exactly in Q(xi_e).
    """

    group: AbelianGroup
    exps: tuple[int, ...]

    @property
    def modulus(self) -> int:
        basis = _basis(self.group)
        return lcm(*[d for _, d in basis]) if basis else 1

    def value_exponent(self, a: int) -> Fraction:
        """chi(a) = exp(2 pi i * r) with r in [0,1) returned exactly."""
        basis = _basis(self.group)
        coords = self.group.coordinates(a)
        r = Fraction(0)
        for (_, d), t, k in zip(basis, self.exps, coords):
            r += Fraction(t * k, d)
        return r % 1

    def value(self, a: int) -> CyclotomicNumber:
        e = self.modulus
        r = self.value_exponent(a)
        k = r * e
        assert k.denominator == 1
        return CyclotomicNumber.root_of_unity(e, int(k) % e)

    @property
    def order(self) -> int:
        basis = _basis(self.group)
        o = 1
        for (_, d), t in zip(basis, self.exps):
            o = lcm(o, d // gcd(d, t))
        return o

    def kernel_reps(self) -> frozenset[int]:
        return frozenset(a for a in self.group.elements if self.value_exponent(a) == 0)

    def is_trivial(self) -> bool:
        return all(self.value_exponent(a) == 0 for a in self.group.elements)

    def is_odd(self) -> bool:
        c = self.group.conjugation()
        r = self.value_exponent(c)
        return r == Fraction(1, 2)

    def restrict(self, sub: AbelianGroup) -> "Character":
        """Restriction to a subgroup (same f, same H, smaller U)."""
        assert sub.hset == self.group.hset and sub.uset <= self.group.uset
        vals = {a: self.value_exponent(a) for a in sub.elements}
        return _character_from_values(sub, vals)

    def __mul__(self, other: "Character") -> "Character":
        assert self.group == other.group
        basis = _basis(self.group)
        return Character(
            self.group,
            tuple((s + t) % d for (_, d), s, t in zip(basis, self.exps, other.exps)),
        )

    def inverse(self) -> "Character":
        basis = _basis(self.group)
        return Character(self.group, tuple((-t) % d for (_, d), t in zip(basis, self.exps)))


def characters(group: AbelianGroup) -> tuple[Character, ...]:
    basis = _basis(group)
    return tuple(
        Character(group, exps)
        for exps in product(*[range(d) for _, d in basis])
    ) if basis else (Character(group, ()),)


def _character_from_values(group: AbelianGroup, vals: dict[int, Fraction]) -> Character:
    basis = _basis(group)
    exps = []
    for b, d in basis:
        r = vals[group.rep(b)]
        t = r * d
        assert t.denominator == 1, "values incompatible with basis orders"
        exps.append(int(t) % d)
    chi = Character(group, tuple(exps))
    for a, r in vals.items():
        assert chi.value_exponent(a) == r
    return chi


# ---------------------------------------------------------------------------
# group ring elements


@dataclass(frozen=True)
class GroupRingElem:
    """sum_g coeffs[g] * g over an AbelianGroup; coefficient-type agnostic."""

    group: AbelianGroup
    coeffs: tuple  # sorted tuple of (rep, coefficient)

    @staticmethod
    def from_dict(group: AbelianGroup, d: dict) -> "GroupRingElem":
        items = tuple(sorted((g, c) for g, c in d.items() if not _is_exact_zero(c)))
        return GroupRingElem(group, items)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    @staticmethod
    def zero(group: AbelianGroup) -> "GroupRingElem":
        return GroupRingElem(group, ())

    @staticmethod
    def one(group: AbelianGroup, unit=Fraction(1)) -> "GroupRingElem":
        return GroupRingElem.from_dict(group, {group.identity: unit})

    @staticmethod
    def of_element(group: AbelianGroup, a: int, unit=Fraction(1)) -> "GroupRingElem":
        return GroupRingElem.from_dict(group, {group.rep(a): unit})

    def coefficient(self, a: int, zero=Fraction(0)):
        return self.as_dict().get(self.group.rep(a), zero)

    def __add__(self, other: "GroupRingElem") -> "GroupRingElem":
        assert self.group == other.group
        d = dict(self.coeffs)
        for g, c in other.coeffs:
            d[g] = _coeff_add(d[g], c) if g in d else c
        return GroupRingElem.from_dict(self.group, d)

    def __neg__(self) -> "GroupRingElem":
        return GroupRingElem(self.group, tuple((g, -c) for g, c in self.coeffs))

    def __sub__(self, other: "GroupRingElem") -> "GroupRingElem":
        return self + (-other)

    def __mul__(self, other: "GroupRingElem") -> "GroupRingElem":
        assert self.group == other.group
        d: dict = {}
        for g, a in self.coeffs:
            for h, b in other.coeffs:
                k = self.group.mul(g, h)
                ab = _coeff_mul(a, b)
                d[k] = _coeff_add(d[k], ab) if k in d else ab
        return GroupRingElem.from_dict(self.group, d)

    def scale(self, c) -> "GroupRingElem":
        return GroupRingElem.from_dict(
            self.group, {g: _coeff_mul(c, a) for g, a in self.coeffs}
        )

    def star(self) -> "GroupRingElem":
        """The involution g -> g^(-1), coefficients untouched."""
        return GroupRingElem.from_dict(
            self.group, {self.group.inv(g): c for g, c in self.coeffs}
        )

    def act_on_cyclotomic(self, z: CyclotomicNumber) -> CyclotomicNumber:
        """sum_g c_g * sigma_g(z) for rational or cyclotomic coefficients."""
        out = CyclotomicNumber.zero(z.f)
        for g, c in self.coeffs:
            img = z.galois(g)
            out = out + _coeff_mul_cyc(c, img)
        return out

    def __repr__(self) -> str:
        return " + ".join(f"({c})*s{g}" for g, c in self.coeffs) or "0"


def _is_exact_zero(c) -> bool:
    if isinstance(c, Fraction) or isinstance(c, int):
        return c == 0
    if isinstance(c, CyclotomicNumber):
        return c.is_zero()
    return False  # never drop ModPN coefficients: 0 mod p^N is not exactly 0


def _coeff_mul(c, a):
    if isinstance(c, CyclotomicNumber) and isinstance(a, (Fraction, int)):
        return c.scale(a)
    if isinstance(a, CyclotomicNumber) and isinstance(c, (Fraction, int)):
        return a.scale(c)
    if isinstance(c, (Fraction, int)) and isinstance(a, ModPN):
        from .exact import rational_to_modpn

        return rational_to_modpn(Fraction(c), a.p, a.N) * a
    if isinstance(a, (Fraction, int)) and isinstance(c, ModPN):
        from .exact import rational_to_modpn

        return c * rational_to_modpn(Fraction(a), c.p, c.N)
    if isinstance(c, CyclotomicNumber) and isinstance(a, CyclotomicNumber) and c.f != a.f:
        from math import lcm

        level = lcm(c.f, a.f)
        return c.lift(level) * a.lift(level)
    return c * a


def _coeff_add(c, a):
    if isinstance(c, CyclotomicNumber) and isinstance(a, (Fraction, int)):
        return c + CyclotomicNumber.from_rational(c.f, Fraction(a))
    if isinstance(a, CyclotomicNumber) and isinstance(c, (Fraction, int)):
        return a + CyclotomicNumber.from_rational(a.f, Fraction(c))
    if isinstance(c, CyclotomicNumber) and isinstance(a, CyclotomicNumber) and c.f != a.f:
        from math import lcm

        level = lcm(c.f, a.f)
        return c.lift(level) + a.lift(level)
    if isinstance(c, (Fraction, int)) and isinstance(a, ModPN):
        from .exact import rational_to_modpn

        return rational_to_modpn(Fraction(c), a.p, a.N) + a
    if isinstance(a, (Fraction, int)) and isinstance(c, ModPN):
        from .exact import rational_to_modpn

        return c + rational_to_modpn(Fraction(a), c.p, c.N)
    return c + a


def _coeff_mul_cyc(c, z: CyclotomicNumber) -> CyclotomicNumber:
    if isinstance(c, (Fraction, int)):
        return z.scale(c)
    assert isinstance(c, CyclotomicNumber)
    return c.lift(z.f) * z if c.f != z.f else c * z


# -- idempotents --------------------------------------------------------------


def plus_minus_idempotents(group: AbelianGroup) -> tuple[GroupRingElem, GroupRingElem]:
    """e^+ = (1+c)/2, e^- = (1-c)/2 for c the class of -1."""
    c = group.conjugation()
    half = Fraction(1, 2)
    e_plus = GroupRingElem.from_dict(group, {group.identity: half, c: half})
    e_minus = GroupRingElem.from_dict(group, {group.identity: half, c: -half})
    return e_plus, e_minus


def character_idempotent(chi: Character) -> GroupRingElem:
    """e_chi = |G|^-1 sum_g chi(g) g^(-1), coefficients in Q(xi_e)."""
    g = chi.group
    e = chi.modulus
    inv_order = Fraction(1, g.order)
    d = {}
    for a in g.elements:
        d[g.inv(a)] = chi.value(a).scale(inv_order)
    return GroupRingElem.from_dict(g, d)


def norm_element(group: AbelianGroup, sub: AbelianGroup, unit=Fraction(1)) -> GroupRingElem:
    """sum over the subgroup's elements inside group's ring."""
    assert sub.uset <= group.uset and sub.hset == group.hset
    return GroupRingElem.from_dict(group, {group.rep(a): unit for a in sub.elements})


# -- restriction / corestriction ----------------------------------------------


def restrict_pi(x: GroupRingElem, target: AbelianGroup) -> GroupRingElem:
    """Push forward along the quotient map (target has larger H, same U)."""
    g = x.group
    assert target.f == g.f and g.hset <= target.hset and g.uset == target.uset
    d: dict = {}
    for a, c in x.coeffs:
        k = target.rep(a)
        d[k] = d[k] + c if k in d else c
    return GroupRingElem.from_dict(target, d)


def corestrict_nu(x: GroupRingElem, big: AbelianGroup) -> GroupRingElem:
    """Pull back along the quotient big -> x.group, summing over preimages."""
    small = x.group
    assert big.f == small.f and big.hset <= small.hset and big.uset == small.uset
    d: dict = {}
    for a in big.elements:
        img = small.rep(a)
        c = x.as_dict().get(img)
        if c is not None:
            d[a] = c
    return GroupRingElem.from_dict(big, d)


def apply_character(chi: Character, x: GroupRingElem) -> CyclotomicNumber:
    """chi extended linearly to the group ring; exact coefficients only."""
    e = chi.modulus
    target_f = e
    for _, c in x.coeffs:
        if isinstance(c, CyclotomicNumber):
            target_f = lcm(target_f, c.f)
    out = CyclotomicNumber.zero(target_f)
    for g, c in x.coeffs:
        val = chi.value(g).lift(target_f)
        out = out + _coeff_mul_cyc(c, val)
    return out


# -- cyclotomic character and its twisted corestriction ------------------------


def kappa_n(group: AbelianGroup, a: int, p: int, n: int) -> ModPN:
    """kappa_n(sigma_a) = a mod p^(n+1); defined only if the class is well posed."""
    pn1 = p ** (n + 1)
    if group.f % pn1 != 0:
        raise CharacterUndefined(f"p^{n + 1} does not divide f={group.f}")
    for h in group.hset:
        if h % pn1 != 1:
            raise CharacterUndefined("H not contained in the kernel mod p^(n+1)")
    assert group.contains(a)
    return ModPN(p, n + 1, a % pn1)


def kappa_bar_star(x: GroupRingElem, minus_group: AbelianGroup, p: int, n: int) -> GroupRingElem:
    """Twisted corestriction (Z/p^(n+1))[G/<c>] -> ((Z/p^(n+1))[G])^-.

    Sends the class of g to 2^(-1) * sum over the two preimages theta of
    kappa_n(theta) * theta^(-1); a ring isomorphism onto the minus part.
    Input coefficients must be ModPN at precision n+1 (or rationals, which
    are embedded).
    """
    bar = x.group
    g = minus_group
    assert bar.f == g.f and g.hset <= bar.hset and g.uset == bar.uset
    c = g.conjugation()
    pn1 = p ** (n + 1)
    inv2 = pow(2, -1, pn1)
    d: dict = {}
    xd = x.as_dict()
    for theta in g.elements:
        img = bar.rep(theta)
        coeff = xd.get(img)
        if coeff is None:
            continue
        if isinstance(coeff, (int, Fraction)):
            from .exact import rational_to_modpn

            coeff = rational_to_modpn(Fraction(coeff), p, n + 1)
        kap = kappa_n(g, theta, p, n)
        key = g.inv(theta)
        term = coeff * kap.scale(inv2)
        d[key] = d[key] + term if key in d else term
    # the two preimages theta, c*theta of each class both contribute
    return GroupRingElem.from_dict(g, d)


# -- determinant of multiplication on a free module over a subgroup ring -------


def det_over_subgroup(x: GroupRingElem, sub: AbelianGroup) -> GroupRingElem:
    """det of multiplication by x on R[B] viewed as a free R[C]-module.

    C = sub must be a subgroup of B = x.group (same f, same H).  The
    transversal is canonical: smallest representative of each coset, cosets
    ordered by that representative.
    """
    big = x.group
    assert sub.hset == big.hset and sub.uset <= big.uset
    subset = frozenset(sub.elements)
    cosets: dict[int, int] = {}  # big rep -> min rep of its C-coset
    for b in big.elements:
        cosets[b] = min(big.mul(b, s) for s in sub.elements)
    transversal = sorted(set(cosets.values()))
    t = len(transversal)
    index = {rep: i for i, rep in enumerate(transversal)}
    # column j: x * t_j = sum_i t_i * M[i][j], M[i][j] in R[C]
    cols: list[list[dict]] = [[{} for _ in range(t)] for _ in range(t)]
    for j, tj in enumerate(transversal):
        for b, c in x.coeffs:
            btj = big.mul(b, tj)
            i = index[cosets[btj]]
            cc = big.mul(big.inv(transversal[i]), btj)
            assert cc in subset
            cell = cols[i][j]
            cell[cc] = cell[cc] + c if cc in cell else c
    mat = [[GroupRingElem.from_dict(sub, cols[i][j]) for j in range(t)] for i in range(t)]
    return _det_laplace(mat, sub)


def _det_laplace(mat: list[list[GroupRingElem]], sub: AbelianGroup) -> GroupRingElem:
    """Determinant over a commutative ring by first-column expansion, memoized."""
    t = len(mat)
    if t == 0:
        return GroupRingElem.one(sub)
    from functools import cache

    @cache
    def minor(rows: frozenset, col: int) -> GroupRingElem:
        if col == t:
            return GroupRingElem.one(sub)
        acc = GroupRingElem.zero(sub)
        sign = 1
        for r in sorted(rows):
            entry = mat[r][col]
            if entry.coeffs:
                term = entry * minor(rows - {r}, col + 1)
                acc = acc + (term if sign > 0 else -term)
            sign = -sign
        return acc

    return minor(frozenset(range(t)), 0)
