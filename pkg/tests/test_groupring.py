"""Group quotients of (Z/fZ)^x, characters, idempotents, kappa maps, dets."""

import random
from fractions import Fraction
from math import lcm

import pytest

from starklab.errors import CharacterUndefined, NoComplexConjugation
from starklab.exact import CyclotomicNumber, ModPN
from starklab.groupring import (
    AbelianGroup,
    Character,
    GroupRingElem,
    apply_character,
    character_idempotent,
    characters,
    corestrict_nu,
    det_over_subgroup,
    kappa_bar_star,
    kappa_n,
    norm_element,
    plus_minus_idempotents,
    restrict_pi,
)


def G45():
    return AbelianGroup.make(45)


def G45_over_sqrt5():
    # Gal(Q(xi_45)/Q(sqrt 5)): classes a = +-1 mod 5
    us = [a for a in range(1, 45) if a % 5 in (1, 4) and a % 3 != 0]
    return AbelianGroup.make(45, u_gens=us)


def test_group_orders_and_invariant_factors():
    assert G45().order == 24
    assert G45().invariant_factors == (2, 12)
    assert AbelianGroup.make(63).invariant_factors == (6, 6)
    g = G45_over_sqrt5()
    assert g.order == 12
    assert g.invariant_factors == (2, 6)


def test_quotient_and_rep():
    g9 = AbelianGroup.make(9)
    gbar = g9.quotient_by([-1])
    assert gbar.order == 3
    assert gbar.rep(8) == gbar.identity
    assert g9.rep(8) == 8


def test_conjugation_and_failure():
    g9 = AbelianGroup.make(9)
    assert g9.conjugation() == 8
    with pytest.raises(NoComplexConjugation):
        g9.quotient_by([-1]).conjugation()


def test_character_count_orthogonality():
    g = AbelianGroup.make(9)
    chars = characters(g)
    assert len(chars) == g.order == 6
    for chi in chars:
        for psi in chars:
            s = Fraction(0)
            e = lcm(chi.modulus, psi.modulus)
            acc = CyclotomicNumber.zero(e)
            for a in g.elements:
                acc = acc + (chi.value(a).lift(e) * psi.value(a).lift(e).conj())
            if chi == psi:
                assert acc.as_rational() == g.order
            else:
                assert acc.is_zero()
            del s


def test_character_idempotents():
    g = AbelianGroup.make(9)
    chars = characters(g)
    es = [character_idempotent(c) for c in chars]
    total = GroupRingElem.zero(g)
    for e in es:
        assert e * e == e
        total = total + e
    assert total == GroupRingElem.one(g, CyclotomicNumber.one(6))
    assert (es[0] * es[1]).coeffs == ()


def test_plus_minus_idempotents():
    g = AbelianGroup.make(9)
    ep, em = plus_minus_idempotents(g)
    assert ep * ep == ep and em * em == em
    assert (ep * em).coeffs == ()
    assert ep + em == GroupRingElem.one(g)


def test_star_involution():
    g = AbelianGroup.make(45)
    rng = random.Random(1)
    x = GroupRingElem.from_dict(g, {a: Fraction(rng.randint(-3, 3)) for a in g.elements})
    y = GroupRingElem.from_dict(g, {a: Fraction(rng.randint(-3, 3)) for a in g.elements})
    assert x.star().star() == x
    assert (x * y).star() == x.star() * y.star()


def test_pi_nu_composition():
    g = AbelianGroup.make(45)
    q = g.quotient_by([19])  # some index
    ker = [a for a in g.elements if q.rep(a) == q.identity]
    x = GroupRingElem.from_dict(q, {a: Fraction(i + 1) for i, a in enumerate(q.elements)})
    back = restrict_pi(corestrict_nu(x, g), q)
    assert back == x.scale(len(ker))


def test_norm_element_is_nu_of_identity():
    g = AbelianGroup.make(45)
    sub = g.subgroup([19])
    nu = norm_element(g, sub)
    assert sum(1 for _ in nu.coeffs) == sub.order
    assert all(c == 1 for _, c in nu.coeffs)


def test_apply_character_ring_hom():
    g = AbelianGroup.make(9)
    chi = [c for c in characters(g) if c.order == 6][0]
    rng = random.Random(7)
    x = GroupRingElem.from_dict(g, {a: Fraction(rng.randint(-4, 4)) for a in g.elements})
    y = GroupRingElem.from_dict(g, {a: Fraction(rng.randint(-4, 4)) for a in g.elements})
    assert apply_character(chi, x * y) == apply_character(chi, x) * apply_character(chi, y)
    assert apply_character(chi, x + y) == apply_character(chi, x) + apply_character(chi, y)


def test_kappa_n_values_and_undefined():
    g = AbelianGroup.make(9)
    assert kappa_n(g, 4, 3, 1).value == 4
    assert kappa_n(g, 8, 3, 0).value == 2
    with pytest.raises(CharacterUndefined):
        kappa_n(g, 2, 3, 2)  # 27 does not divide 9
    gq = AbelianGroup.make(45, h_gens=[19])  # 19 = 1 mod 9 fails mod 45's 3-part? 19 % 9 = 1
    # H = <19>: 19 = 1 mod 9, so kappa_1 at p=3 is still defined
    assert kappa_n(gq, 7, 3, 1).value == 7
    gq2 = AbelianGroup.make(45, h_gens=[7])
    with pytest.raises(CharacterUndefined):
        kappa_n(gq2, 2, 3, 1)


def test_kappa_bar_star_is_ring_iso_onto_minus_part():
    p, n = 3, 1
    g = AbelianGroup.make(9)
    gbar = g.quotient_by([-1])
    rng = random.Random(3)

    def rand_bar():
        return GroupRingElem.from_dict(
            gbar, {a: ModPN(p, n + 1, rng.randint(0, 8)) for a in gbar.elements}
        )

    x, y = rand_bar(), rand_bar()
    kx, ky, kxy = (kappa_bar_star(t, g, p, n) for t in (x, y, x * y))
    assert kxy == kx * ky
    # unit maps to e^-, so k(x) always lies in the minus part
    c = g.conjugation()
    for a, coeff in kx.coeffs:
        mirrored = kx.as_dict()[g.mul(c, a)]
        assert (coeff + mirrored).value == 0
    one = GroupRingElem.one(gbar, ModPN(p, n + 1, 1))
    kone = kappa_bar_star(one, g, p, n)
    # kappa(c) = -1, so the unit maps to (1 - c)/2 = e^-
    inv2 = pow(2, -1, 9)
    expected = {g.identity: ModPN(p, 2, inv2), c: ModPN(p, 2, -inv2)}
    assert kone == GroupRingElem.from_dict(g, expected)


def test_kappa_bar_star_on_class_of_g():
    # class of sigma_2 in the quotient must map to e^- kappa(2) sigma_2^(-1)
    p, n = 3, 1
    g = AbelianGroup.make(9)
    gbar = g.quotient_by([-1])
    x = GroupRingElem.of_element(gbar, 2, ModPN(p, n + 1, 1))
    kx = kappa_bar_star(x, g, p, n)
    c = g.conjugation()
    inv2 = pow(2, -1, 9)
    s2inv = g.inv(2)
    expected = {
        s2inv: ModPN(p, 2, 2 * inv2),
        g.mul(c, s2inv): ModPN(p, 2, -2 * inv2),
    }
    assert kx == GroupRingElem.from_dict(g, expected)


def _random_grelem(g, rng, lo=-3, hi=3):
    return GroupRingElem.from_dict(g, {a: Fraction(rng.randint(lo, hi)) for a in g.elements})


def test_det_over_trivial_subgroup_is_norm_style_det():
    # B cyclic of order 2: det of mult by (a + b c) on the 2-dim Q-space
    g = AbelianGroup.make(4)
    triv = g.subgroup([])
    x = GroupRingElem.from_dict(g, {1: Fraction(5), 3: Fraction(2)})
    d = det_over_subgroup(x, triv)
    assert d == GroupRingElem.one(triv, Fraction(21))  # 5^2 - 2^2


def test_det_over_subgroup_character_identity():
    # chi(det_{R[C]}(x | R[B])) = prod over characters phi of B restricting
    # to chi of phi(x)
    g = AbelianGroup.make(21)  # order 12
    sub = g.subgroup([4])  # order 3
    rng = random.Random(11)
    x = _random_grelem(g, rng)
    d = det_over_subgroup(x, sub)
    for chi in characters(sub):
        lhs = apply_character(chi, d)
        rhs = None
        for phi in characters(g):
            if phi.restrict(sub) == chi:
                v = apply_character(phi, x)
                rhs = v if rhs is None else rhs.lift(lcm(rhs.f, v.f)) * v.lift(lcm(rhs.f, v.f))
        e = lcm(lhs.f, rhs.f)
        assert lhs.lift(e) == rhs.lift(e)


def test_det_over_subgroup_multiplicative():
    g = AbelianGroup.make(15)
    sub = g.subgroup([4])
    rng = random.Random(13)
    x, y = _random_grelem(g, rng), _random_grelem(g, rng)
    dx, dy, dxy = (det_over_subgroup(t, sub) for t in (x, y, x * y))
    assert dxy == dx * dy
