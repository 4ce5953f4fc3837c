"""Exact L-value elements.

Everything here is computed with exact rational/cyclotomic arithmetic:
the equivariant zeta element at s = 0 (as a group-ring element), generalized
Bernoulli numbers B_{1,chi}, the minus-part element at s = 1 given by the
explicit cyclotomic formula xi/(1 - xi), Euler factors for enlarging the
place set, the relative (base-change) version obtained as a determinant over
the subgroup ring, and the exact right-hand side of the valuation theorem
available when p does not divide the group order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from sympy import factorint
from sympy.matrices import Matrix
from sympy.matrices.normalforms import smith_normal_form

from .errors import BadPlaceSet, EvenCharacter, NotCM, PDividesGroupOrder
from .exact import CyclotomicNumber, divisors, euler_phi
from .fields import (
    FieldSpec,
    PlaceSet,
    _crt_unit,
    conductor,
    frobenius,
    inertia_decomposition,
    ramified_primes,
    splitting_modulus,
)
from .groupring import (
    AbelianGroup,
    Character,
    GroupRingElem,
    _basis,
    _character_from_values,
    character_idempotent,
    characters,
    corestrict_nu,
    det_over_subgroup,
    plus_minus_idempotents,
    restrict_pi,
)
from .padic import multiplicative_order, unramified_valuation


@dataclass(frozen=True)
class ThetaElement:
    """A group-ring-valued L-value with its evaluation point and place set."""

    elem: GroupRingElem
    s_point: int  # 0 for the zeta element, 1 for the minus-part element
    places: PlaceSet


# ---------------------------------------------------------------------------
# helpers


def _unit_lift(f: int, f0: int, b: int) -> int:
    """A unit mod f congruent to b mod f0 (requires f0 | f, gcd(b, f0) = 1)."""
    assert f % f0 == 0 and gcd(b, f0) == 1
    if f == f0:
        return b % f
    f1 = 1
    for q in factorint(f0):
        qe = q
        while f % (qe * q) == 0:
            qe *= q
        f1 *= qe
    f2 = f // f1
    if f2 == 1:
        return b % f
    x = (b % f1) * f2 * pow(f2, -1, f1) + f1 * pow(f1, -1, f2)
    x %= f
    assert gcd(x, f) == 1 and x % f0 == b % f0
    return x


def _lift_coeffs(x: GroupRingElem, level: int) -> GroupRingElem:
    """Coerce every coefficient into Q(xi_level)."""
    d = {}
    for a, c in x.coeffs:
        if isinstance(c, Fraction):
            c = CyclotomicNumber.from_rational(level, c)
        elif isinstance(c, CyclotomicNumber) and c.f != level:
            c = c.lift(level)
        d[a] = c
    return GroupRingElem.from_dict(x.group, d)


def _euler_factor(gamma: AbelianGroup, spec: FieldSpec, q: int, at_s: int) -> GroupRingElem:
    """(1 - sigma_q^-1) at s=0, or (1 - q^-1 sigma_q^-1) at s=1."""
    sq_inv = gamma.inv(frobenius(spec, q))
    unit = Fraction(1) if at_s == 0 else Fraction(1, q)
    return GroupRingElem.one(gamma) - GroupRingElem.of_element(gamma, sq_inv, unit)


# ---------------------------------------------------------------------------
# the zeta element at s = 0 over the full cyclotomic field


def stickelberger_theta0(spec: FieldSpec, S: PlaceSet) -> ThetaElement:
    """sum_{(a,f)=1} (1/2 - a/f) sigma_a^-1, with Euler factors for extra
    primes of S.  Defined on the full cyclotomic field of level f."""
    f = spec.f
    gamma = spec.gamma_group
    if gamma.order != euler_phi(f):
        raise ValueError("defined on the full cyclotomic field only")
    if not S.includes_infinity:
        raise BadPlaceSet("the infinite place must be in S")
    f_primes = set(factorint(f))
    s_primes = set(S.rational_primes())
    if not f_primes <= s_primes:
        raise BadPlaceSet("S must contain every prime dividing the level")
    d: dict[int, Fraction] = {}
    for a in gamma.elements:
        d[gamma.inv(a)] = Fraction(f - 2 * a, 2 * f)
    theta = GroupRingElem.from_dict(gamma, d)
    for q in sorted(s_primes - f_primes):
        theta = theta * _euler_factor(gamma, spec, q, 0)
    return ThetaElement(theta, 0, S)


# ---------------------------------------------------------------------------
# characters: conductor, primitivization, Bernoulli numbers


def character_conductor(chi: Character) -> int:
    """Smallest f0 | f such that chi is trivial on classes a = 1 mod f0."""
    g = chi.group
    for f0 in divisors(g.f):
        if all(
            chi.value_exponent(g.rep(a)) == 0
            for a in g.uset
            if a % f0 == 1 % f0
        ):
            return f0
    raise AssertionError("unreachable: the level itself always works")


def primitive_character(chi: Character) -> tuple[int, Character]:
    """The conductor f0 and the primitive character mod f0 inducing chi."""
    f0 = character_conductor(chi)
    if f0 == 1:
        raise ValueError("the trivial character has no primitive model here")
    g = chi.group
    g0 = AbelianGroup.make(f0)
    vals = {
        b: chi.value_exponent(g.rep(_unit_lift(g.f, f0, b)))
        for b in g0.elements
    }
    return f0, _character_from_values(g0, vals)


def character_root_value(chi: Character, a: int, level: int | None = None) -> CyclotomicNumber:
    """chi(a) as a root of unity of the character's own order (or a chosen
    multiple), avoiding the generally larger group-exponent level."""
    t = level if level is not None else chi.order
    r = chi.value_exponent(a) * t
    assert r.denominator == 1
    return CyclotomicNumber.root_of_unity(t, int(r) % t)


def bernoulli_B1(chi: Character) -> CyclotomicNumber:
    """B_{1,chi} = (1/f) sum_{a mod f} chi(a) a for a primitive character.

    The result lies in Q(xi_t) with t the order of chi."""
    g = chi.group
    f = g.f
    if g.order != euler_phi(f):
        raise ValueError("chi must be a character of the full unit group")
    if chi.is_trivial():
        raise ValueError("B_1 of the trivial character is excluded (pole)")
    if character_conductor(chi) != f:
        raise ValueError(f"chi is not primitive: conductor {character_conductor(chi)} < {f}")
    t = chi.order
    out = CyclotomicNumber.zero(t)
    for a in g.elements:
        out = out + character_root_value(chi, a).scale(a)
    return out.scale(Fraction(1, f))


def bernoulli_of_induced(chi: Character) -> CyclotomicNumber:
    """B_{1,chi-hat} for the primitive character inducing chi."""
    _, chat = primitive_character(chi)
    return bernoulli_B1(chat)


# ---------------------------------------------------------------------------
# the minus-part element at s = 1


def a_minus(spec: FieldSpec, S: PlaceSet) -> ThetaElement:
    """The minus-part element at s = 1 over Q, by the cyclotomic formula.

    Computed at the conductor f0: e^- (1/f0) sum_a sigma_a(w) sigma_a^-1 with
    w = xi/(1 - xi), projected to K and transported to K's ambient level,
    then multiplied by (1 - q^-1 sigma_q^-1) for each extra prime q of S."""
    if not spec.is_cm:
        raise NotCM("the minus-part element needs a CM field")
    if not S.includes_infinity:
        raise BadPlaceSet("the infinite place must be in S")
    ram = set(ramified_primes(spec))
    s_primes = set(S.rational_primes())
    if not ram <= s_primes:
        raise BadPlaceSet("S must contain every ramified prime")

    f0 = conductor(spec)
    full0 = AbelianGroup.make(f0)
    gamma = spec.gamma_group
    k0 = AbelianGroup.make(f0, tuple(sorted({h % f0 for h in gamma.hset})))

    xi = CyclotomicNumber.root_of_unity(f0)
    w = xi / (CyclotomicNumber.one(f0) - xi)
    d = {}
    for a in full0.elements:
        d[full0.inv(a)] = w.galois(a).scale(Fraction(1, f0))
    x = GroupRingElem.from_dict(full0, d)
    _, e_minus = plus_minus_idempotents(full0)
    x = e_minus * x
    x0 = restrict_pi(x, k0)

    transported: dict[int, CyclotomicNumber] = {}
    for a0, c in x0.coeffs:
        a = gamma.rep(_unit_lift(spec.f, f0, a0))
        assert a not in transported
        transported[a] = c
    out = GroupRingElem.from_dict(gamma, transported)

    for q in sorted(s_primes - ram):
        out = out * _euler_factor(gamma, spec, q, 1)
    return ThetaElement(out, 1, S)


# ---------------------------------------------------------------------------
# the relative minus-part element over G = Gal(K/k), as a determinant


def _char_power(chi: Character, j: int) -> Character:
    basis = _basis(chi.group)
    return Character(chi.group, tuple((j * t) % d for (_, d), t in zip(basis, chi.exps)))


def rational_character_orbits(group: AbelianGroup) -> tuple[tuple[Character, ...], ...]:
    """Galois conjugacy classes of the character group (orbits chi -> chi^j)."""
    seen: set[tuple[int, ...]] = set()
    orbits = []
    for chi in characters(group):
        if chi.exps in seen:
            continue
        t = chi.order
        orbit_exps = {_char_power(chi, j).exps for j in range(1, t + 1) if gcd(j, t) == 1}
        seen |= orbit_exps
        orbits.append(tuple(Character(group, e) for e in sorted(orbit_exps)))
    return tuple(orbits)


def _orbit_idempotent(gamma: AbelianGroup, orbit) -> GroupRingElem:
    """e_A = sum of e_chi over a Galois orbit; rational coefficients."""
    acc = None
    for chi in orbit:
        e = character_idempotent(chi)
        acc = e if acc is None else acc + e
    d: dict[int, Fraction] = {}
    for a, c in acc.coeffs:
        if isinstance(c, CyclotomicNumber):
            c = c.as_rational()
        if c:
            d[gamma.rep(a)] = c
    return GroupRingElem.from_dict(gamma, d)


def bad_set_inertia(spec: FieldSpec, S_Q: PlaceSet) -> AbelianGroup:
    """The subgroup of Gamma generated by inertia at ramified primes not in S."""
    s_primes = set(S_Q.rational_primes())
    gens: list[int] = []
    for q in ramified_primes(spec):
        if q not in s_primes:
            T, _ = inertia_decomposition(spec, q)
            gens.extend(T.uset)
    return spec.gamma_group.subgroup(gens)


def a_minus_relative(spec: FieldSpec, S_Q: PlaceSet) -> ThetaElement:
    """The starred minus-part element for K/k at S_Q(k), as the determinant
    over the subgroup ring of a sum of averaged corestrictions.

    Each rational character class of the inertia subgroup at the primes
    missing from S contributes e_A nu~_A(a*-) of the corresponding subfield,
    with its own enlarged place set; classes fixing complex conjugation drop
    out.  The sum is taken in Q(xi_f)Gamma and the determinant over G."""
    spec.require_cm_over_totally_real()
    if not S_Q.includes_infinity:
        raise BadPlaceSet("the infinite places must be in S")
    f = spec.f
    gamma = spec.gamma_group
    s_primes = set(S_Q.rational_primes())
    A = bad_set_inertia(spec, S_Q)
    c = gamma.conjugation()

    x_total = GroupRingElem.zero(gamma)
    for orbit in rational_character_orbits(A):
        chi = orbit[0]
        if A.contains(c) and chi.value_exponent(c) == 0:
            continue  # complex conjugation in the kernel: killed by e^-
        ker = sorted(chi.kernel_reps())
        sub = FieldSpec.make(f, tuple(spec.h_gens) + tuple(ker))
        s_a = PlaceSet(True, frozenset((q, 1) for q in (s_primes | set(ramified_primes(sub)))))
        a_star = a_minus(sub, s_a).elem.star()
        lifted = corestrict_nu(a_star, gamma).scale(Fraction(1, len(ker)))
        term = _orbit_idempotent(gamma, orbit) * lifted
        x_total = x_total + _lift_coeffs(term, f)

    det = det_over_subgroup(x_total, spec.G)
    return ThetaElement(det, 1, S_Q)


# ---------------------------------------------------------------------------
# the exact right-hand side of the valuation theorem (p not dividing |G|)


@dataclass(frozen=True)
class PndivgRhs:
    """Exact data generating the predicted ideal phi(S_{K/Q,S})."""

    valuation: int              # v_phi of the generator
    generator: CyclotomicNumber  # in Q(xi_t), t = order of phi
    mu_valuation: int           # contribution of the p-power roots of unity
    euler_primes: tuple[int, ...]
    bernoulli: CyclotomicNumber  # B_{1, phi-hat^-1}


def _torsion_level(exps: set[int], p: int, cap: int) -> int:
    """Largest s <= cap with x = 1 mod p^s for all x in the set."""
    s = cap
    while s > 0 and any(x % p**s != 1 for x in exps):
        s -= 1
    return s


def _lattice_index(rows: list[list[int]], n: int) -> int:
    """[Z^n : L] for the lattice L spanned by the given row vectors."""
    snf = smith_normal_form(Matrix(rows))
    diag = [abs(snf[i, i]) for i in range(min(snf.shape))]
    nonzero = [d for d in diag if d != 0]
    assert len(nonzero) == n, "lattice not of full rank"
    idx = 1
    for d in nonzero:
        idx *= int(d)
    return idx


def local_mu_phi_valuation(spec: FieldSpec, p: int, phi: Character) -> int:
    """v_phi of the order ideal of the Phi-part of the p-power roots of unity
    of the semilocal completion at p (the product over the primes above p).
    Zero whenever p does not divide the level: the completions are then
    unramified, hence contain no p-th roots of unity."""
    f = spec.f
    m1 = 0
    ff = f
    while ff % p == 0:
        ff //= p
        m1 += 1
    if m1 == 0:
        return 0
    gamma = spec.gamma_group
    hset = gamma.hset
    v, fp = splitting_modulus(spec, p)
    full = AbelianGroup.make(f)
    t_set = [a for a in full.uset if a % fp == 1 % fp]
    dfull = full.subgroup(t_set + [_crt_unit(f, p, v, fp)])
    # each completion contains exactly the p^m_loc-th roots of unity, where
    # the local decomposition group (inside the full cyclotomic one) must fix
    # them; the cyclotomic action is through the mod-p-power reduction
    m_loc = _torsion_level(dfull.uset & hset, p, m1)
    if m_loc == 0:
        return 0
    pm = p**m_loc

    # component indices: cosets of the decomposition subgroup in Gamma
    D = gamma.subgroup(sorted(dfull.uset))
    coset_rep = {b: min(gamma.mul(b, s) for s in D.elements) for b in gamma.elements}
    reps = sorted(set(coset_rep.values()))
    n = len(reps)
    index_of = {r: i for i, r in enumerate(reps)}

    def kappa_loc(d_rep: int) -> int:
        lifts = {(d_rep * h) % f for h in hset} & dfull.uset
        return next(iter(lifts)) % pm

    def action_matrix(g: int) -> list[list[int]]:
        mat = [[0] * n for _ in range(n)]
        for jcol, cr in enumerate(reps):
            gc = gamma.mul(g, cr)
            target = coset_rep[gc]
            d = gamma.mul(gamma.inv(target), gc)
            mat[index_of[target]][jcol] = kappa_loc(d)
        return mat

    # the Phi-idempotent, with denominators (units mod p) cleared
    orbit_exps = {
        _char_power(phi, jj).exps
        for jj in range(1, phi.order + 1)
        if gcd(jj, phi.order) == 1
    }
    e_phi = _orbit_idempotent(gamma, tuple(Character(gamma, e) for e in sorted(orbit_exps)))
    E = [[0] * n for _ in range(n)]
    for g, coeff in e_phi.coeffs:
        c_int = coeff.numerator * pow(coeff.denominator, -1, pm) % pm
        mat = action_matrix(g)
        for i in range(n):
            for jcol in range(n):
                E[i][jcol] = (E[i][jcol] + c_int * mat[i][jcol]) % pm

    # relation lattice of the module (Z/p^m_loc)^n
    rel = [[pm if i == jcol else 0 for jcol in range(n)] for i in range(n)]
    idx_rel = _lattice_index(rel, n)
    idx_img = _lattice_index(rel + [list(row) for row in zip(*E)], n)
    order = idx_rel // idx_img
    assert idx_rel % idx_img == 0

    t_deg = multiplicative_order(p, phi.order)
    vp = 0
    while order % p == 0:
        order //= p
        vp += 1
    assert order == 1, "order of the Phi-part must be a p-power"
    assert vp % t_deg == 0
    return vp // t_deg


def pndivg_rhs(spec: FieldSpec, S: PlaceSet, p: int, phi: Character) -> PndivgRhs:
    """Exact generator and valuation of the predicted phi-component:
    (mu order ideal) * prod_{q in S, q != p, q not | f_phi} (1 - q^-1 phi-hat(q))
    * (-B_{1, phi-hat^-1}), valued in the distinguished completion."""
    if spec.hp_gens is not None:
        raise ValueError("the valuation theorem is stated over Q")
    gamma = spec.gamma_group
    if gamma.order % p == 0:
        raise PDividesGroupOrder(f"p={p} divides |G|={gamma.order}")
    if not phi.is_odd():
        raise EvenCharacter("the predicted component exists for odd phi only")
    assert phi.group == gamma

    f0, phat = primitive_character(phi)
    t = phi.order
    bern = bernoulli_B1(phat.inverse())
    gen = -bern
    g0 = phat.group
    euler: list[int] = []
    for q in sorted(set(S.rational_primes())):
        if q == p or f0 % q == 0:
            continue
        val = character_root_value(phat, g0.rep(q % f0), t)
        gen = gen * (CyclotomicNumber.one(t) - val.scale(Fraction(1, q)))
        euler.append(q)
    mu_v = local_mu_phi_valuation(spec, p, phi)
    gen = gen.scale(p**mu_v)
    return PndivgRhs(
        valuation=unramified_valuation(gen, p),
        generator=gen,
        mu_valuation=mu_v,
        euler_primes=tuple(euler),
        bernoulli=bern,
    )
