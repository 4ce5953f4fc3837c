"""Field and place bookkeeping for abelian fields inside Q(xi_f).

A FieldSpec fixes K = Q(xi_f)^H and k = Q(xi_f)^H' with H <= H'.  All Galois
groups in play are quotients U/H of subgroups of (Z/fZ)^x and are built on
demand:

    Gamma  = Gal(K/Q)      = (Z/f)^x / H
    G      = Gal(K/k)      = H'/H
    Gbar   = Gal(K+/k)     = H'/<H,-1>
    Gal(k/Q)               = (Z/f)^x / H'

Places of k are recorded as pairs (q, r) where r is the canonical coset
representative of the decomposition group D_q(k/Q) in Gal(k/Q) that names the
prime of k above q.  Infinite places are an all-or-nothing flag (they form a
single Galois orbit).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from sympy import factorint

from .errors import BadPlaceSet, NotCM, RamifiedPrime
from .exact import euler_phi, divisors
from .groupring import AbelianGroup, Character, GroupRingElem, character_idempotent, characters, norm_element


@dataclass(frozen=True)
class FieldSpec:
    """K = Q(xi_f)^H over k = Q(xi_f)^H'; h/hp are generator tuples."""

    f: int
    h_gens: tuple[int, ...] = ()
    hp_gens: tuple[int, ...] | None = None  # None means k = Q

    @staticmethod
    def make(f: int, h_gens=(), hp_gens=None) -> "FieldSpec":
        h = tuple(int(a) % f for a in h_gens)
        if hp_gens is not None:
            hp_gens = tuple(int(a) % f for a in hp_gens) + h  # force H <= H'
        return FieldSpec(f, h, hp_gens)

    # -- groups ---------------------------------------------------------------

    @property
    def gamma_group(self) -> AbelianGroup:
        """Gal(K/Q)."""
        return AbelianGroup.make(self.f, self.h_gens)

    @property
    def G(self) -> AbelianGroup:
        """Gal(K/k) as a subgroup of Gamma."""
        if self.hp_gens is None:
            return self.gamma_group
        return self.gamma_group.subgroup(self.hp_gens)

    @property
    def gal_k(self) -> AbelianGroup:
        """Gal(k/Q); trivial when k = Q."""
        if self.hp_gens is None:
            full = AbelianGroup.make(self.f)
            return AbelianGroup(self.f, full.uset, full.uset)
        return AbelianGroup.make(self.f, self.hp_gens)

    @property
    def gamma_plus(self) -> AbelianGroup:
        """Gal(K+/Q)."""
        return self.gamma_group.quotient_by([-1])

    @property
    def gbar(self) -> AbelianGroup:
        """Gal(K+/k); requires k real (i.e. -1 in H')."""
        gp = self.gamma_plus
        if self.hp_gens is None:
            return gp
        return AbelianGroup(gp.f, gp.hset, _mul_closure(self.f, self.G.uset | {self.f - 1}))

    @property
    def degree_k(self) -> int:
        """d = [k : Q]."""
        return euler_phi(self.f) // len(self.gal_k.hset)

    # -- hypotheses -------------------------------------------------------------

    @property
    def is_cm(self) -> bool:
        return (self.f - 1) not in self.gamma_group.hset

    @property
    def k_totally_real(self) -> bool:
        return (self.f - 1) in self.gal_k.hset

    def require_cm_over_totally_real(self) -> None:
        if not self.is_cm:
            raise NotCM(f"K = Q(xi_{self.f})^H is not CM (-1 fixes K)")
        if not self.k_totally_real:
            raise NotCM("base field k is not totally real")

    def subfield_fixed_by(self, extra_h_gens) -> "FieldSpec":
        """The subfield of K fixed by the given classes (H enlarged)."""
        new_h = tuple(self.h_gens) + tuple(int(a) % self.f for a in extra_h_gens)
        return FieldSpec(self.f, new_h, self.hp_gens)

    def __repr__(self) -> str:
        return f"FieldSpec(f={self.f}, H=<{self.h_gens}>, H'=<{self.hp_gens}>)"


def _mul_closure(f: int, elems) -> frozenset[int]:
    from .groupring import _closure

    return _closure(f, tuple(elems))


# ---------------------------------------------------------------------------
# conductor / frobenius / decomposition


def conductor(spec: FieldSpec) -> int:
    """Smallest f0 | f with ker((Z/f)^x -> (Z/f0)^x) contained in H."""
    gamma = spec.gamma_group
    for f0 in divisors(spec.f):
        ker = {a for a in range(1, spec.f + 1) if gcd(a, spec.f) == 1 and a % f0 == 1 % f0}
        if ker <= gamma.hset:
            return f0
    raise AssertionError("unreachable: f0 = f always works")


def splitting_modulus(spec: FieldSpec, q: int) -> tuple[int, int]:
    """f = q^v * f_q with q not dividing f_q; returns (v, f_q)."""
    v, fq = 0, spec.f
    while fq % q == 0:
        fq //= q
        v += 1
    return v, fq


def inertia_decomposition(spec: FieldSpec, q: int) -> tuple[AbelianGroup, AbelianGroup]:
    """(T_q, D_q) as subgroups of Gamma = Gal(K/Q)."""
    gamma = spec.gamma_group
    v, fq = splitting_modulus(spec, q)
    t_gens = [a for a in range(1, spec.f + 1) if gcd(a, spec.f) == 1 and a % fq == 1 % fq]
    T = gamma.subgroup(t_gens)
    frob_lift = _crt_unit(spec.f, q, v, fq)
    D = gamma.subgroup(t_gens + [frob_lift])
    return T, D


def _crt_unit(f: int, q: int, v: int, fq: int) -> int:
    """The unit a mod f with a = q mod f_q and a = 1 mod q^v."""
    if v == 0:
        return q % f
    qv = q**v
    if fq == 1:
        return 1
    # CRT: a = q (fq), a = 1 (q^v)
    a = (q * qv * pow(qv, -1, fq) + 1 * fq * pow(fq, -1, qv)) % f
    assert a % fq == q % fq and a % qv == 1
    return a


def frobenius(spec: FieldSpec, q: int) -> int:
    """Class of sigma_q in Gamma; q must be unramified in K."""
    gamma = spec.gamma_group
    T, _ = inertia_decomposition(spec, q)
    if T.order != 1:
        raise RamifiedPrime(f"{q} ramifies in K (inertia of order {T.order})")
    v, fq = splitting_modulus(spec, q)
    return gamma.rep(_crt_unit(spec.f, q, v, fq))


def residue_degree_in_k(spec: FieldSpec, q: int) -> int:
    """f(q-bar/q) for any prime of k above q (they are conjugate)."""
    galk = spec.gal_k
    v, fq = splitting_modulus(spec, q)
    t_gens = [a for a in range(1, spec.f + 1) if gcd(a, spec.f) == 1 and a % fq == 1 % fq]
    Tk = galk.subgroup(t_gens)
    frob = galk.rep(_crt_unit(spec.f, q, v, fq))
    # order of the Frobenius class in D/T
    quot = AbelianGroup(galk.f, _mul_closure(galk.f, Tk.uset), galk.uset)
    return quot.element_order(frob)


def frobenius_of_k_prime(spec: FieldSpec, q: int) -> int:
    """Frobenius in G = Gal(K/k) of any prime of k above q (q unramified in K)."""
    gamma = spec.gamma_group
    fdeg = residue_degree_in_k(spec, q)
    frob = frobenius(spec, q)
    rep = gamma.power(frob, fdeg)
    assert spec.G.contains(rep), "sigma_q^f(q) must fix k"
    return rep


def ramified_primes(spec: FieldSpec) -> tuple[int, ...]:
    """Rational primes ramified in K/Q."""
    out = []
    for q in factorint(spec.f):
        T, _ = inertia_decomposition(spec, q)
        if T.order > 1:
            out.append(q)
    return tuple(sorted(out))


def ramified_primes_over_k(spec: FieldSpec) -> tuple[int, ...]:
    """Rational primes q whose primes of k ramify in K/k (T_q meets G)."""
    out = []
    for q in factorint(spec.f):
        T, _ = inertia_decomposition(spec, q)
        if len(T.uset & spec.G.uset) > len(spec.gamma_group.hset):
            out.append(q)
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# places of k


@dataclass(frozen=True)
class PlaceSet:
    """Places of k: the Galois orbit of infinite places plus finite primes.

    A finite prime of k above q is named by the canonical representative of
    its coset of D_q(k/Q) in Gal(k/Q) (primes <-> cosets; the canonical rep
    is the smallest member, and the distinguished prime is the coset of 1).
    """

    includes_infinity: bool
    finite: frozenset[tuple[int, int]]  # (q, coset rep in Gal(k/Q))

    @staticmethod
    def above_rational_primes(spec: FieldSpec, qs, includes_infinity: bool = True) -> "PlaceSet":
        finite = set()
        for q in qs:
            for r in k_primes_above(spec, q):
                finite.add((q, r))
        return PlaceSet(includes_infinity, frozenset(finite))

    def rational_primes(self) -> tuple[int, ...]:
        return tuple(sorted({q for q, _ in self.finite}))

    def size(self, spec: FieldSpec) -> int:
        return (spec.degree_k if self.includes_infinity else 0) + len(self.finite)

    def contains_all_above(self, spec: FieldSpec, q: int) -> bool:
        return all((q, r) in self.finite for r in k_primes_above(spec, q))

    def union(self, other: "PlaceSet") -> "PlaceSet":
        return PlaceSet(self.includes_infinity or other.includes_infinity,
                        self.finite | other.finite)


def k_primes_above(spec: FieldSpec, q: int) -> tuple[int, ...]:
    """Coset representatives of D_q(k/Q) in Gal(k/Q), one per prime of k | q."""
    galk = spec.gal_k
    v, fq = splitting_modulus(spec, q)
    t_gens = [a for a in range(1, spec.f + 1) if gcd(a, spec.f) == 1 and a % fq == 1 % fq]
    D = galk.subgroup(t_gens + [_crt_unit(spec.f, q, v, fq)])
    cosets = {}
    for b in galk.elements:
        cosets[b] = min(galk.mul(b, s) for s in D.elements)
    return tuple(sorted(set(cosets.values())))


def s1_places(spec: FieldSpec, p: int) -> PlaceSet:
    """S^1 = S_infty(k) + S_p(k) + primes of k ramified in K/k."""
    qs = set(ramified_primes_over_k(spec)) | {p}
    return PlaceSet.above_rational_primes(spec, sorted(qs))


def s_Q_part(spec: FieldSpec, S: PlaceSet) -> tuple[int, ...]:
    """Rational primes q with every prime of k above q inside S."""
    return tuple(sorted(q for q in S.rational_primes() if S.contains_all_above(spec, q)))


def bad_primes(spec: FieldSpec, S: PlaceSet) -> tuple[int, ...]:
    """Ramified primes of K/Q whose k-fiber is not entirely inside S."""
    return tuple(sorted(q for q in ramified_primes(spec)
                        if not S.contains_all_above(spec, q)))


def check_hypothesis_bad_ramification(spec: FieldSpec, S: PlaceSet, p: int) -> None:
    """p must not divide e_q(k/Q) for q in Bad(S)."""
    from .errors import HypothesisViolated

    galk = spec.gal_k
    for q in bad_primes(spec, S):
        v, fq = splitting_modulus(spec, q)
        t_gens = [a for a in range(1, spec.f + 1) if gcd(a, spec.f) == 1 and a % fq == 1 % fq]
        e_q = galk.subgroup(t_gens).order
        if e_q % p == 0:
            raise HypothesisViolated(f"p={p} divides e_{q}(k/Q)={e_q}")


# ---------------------------------------------------------------------------
# r_S and the eigen-idempotent over Gbar


def _decomposition_in_gbar(spec: FieldSpec, q: int) -> AbelianGroup:
    """D_q(K+/k) as a subgroup of Gbar (same for every prime of k above q)."""
    gbar = spec.gbar
    v, fq = splitting_modulus(spec, q)
    t_gens = [a for a in range(1, spec.f + 1) if gcd(a, spec.f) == 1 and a % fq == 1 % fq]
    d_all = _mul_closure(spec.f, set(t_gens) | {_crt_unit(spec.f, q, v, fq)} | gbar.hset)
    return AbelianGroup(gbar.f, gbar.hset, d_all & gbar.uset)


def r_S(spec: FieldSpec, S: PlaceSet, phi: Character) -> int:
    """Vanishing-order integer r_S(phi) for a character of Gbar."""
    assert phi.group == spec.gbar
    if not S.includes_infinity:
        raise BadPlaceSet("S must contain the infinite places")
    if phi.is_trivial():
        return S.size(spec) - 1
    d = spec.degree_k
    count = 0
    for q, _ in S.finite:
        D = _decomposition_in_gbar(spec, q)
        if all(phi.value_exponent(a) == 0 for a in D.elements):
            count += 1
    return d + count


def eigen_idempotent(spec: FieldSpec, S: PlaceSet, d: int | None = None) -> GroupRingElem:
    """The rational idempotent cutting out the characters with r_S(phi) = d."""
    gbar = spec.gbar
    if d is None:
        d = spec.degree_k
    if not S.includes_infinity or not S.finite:
        raise BadPlaceSet("S must contain the infinite places and a finite place")
    out = GroupRingElem.one(gbar)
    for q, _ in sorted(S.finite):
        D = _decomposition_in_gbar(spec, q)
        nd = norm_element(gbar, D, Fraction(-1, D.order))
        out = out * (GroupRingElem.one(gbar) + nd)
    if S.size(spec) == d + 1:
        out = out + norm_element(gbar, gbar, Fraction(1, gbar.order))
    return out
