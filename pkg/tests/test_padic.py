"""Tests for the unramified p-adic embedding layer."""

from fractions import Fraction

import pytest

from starklab.exact import CyclotomicNumber, cyclotomic_poly
from starklab.padic import (
    UnramifiedModel,
    canonical_unramified_factor,
    multiplicative_order,
    unramified_model,
    unramified_valuation,
)


class TestCanonicalFactor:
    @pytest.mark.parametrize("p,t", [(5, 12), (7, 3), (3, 4), (5, 6), (7, 6), (11, 9)])
    def test_factor_divides_cyclotomic(self, p, t):
        digits = 16
        g = canonical_unramified_factor(p, t, digits)  # descending coefficients
        r = multiplicative_order(p, t)
        assert len(g) == r + 1 and g[0] == 1  # monic of degree r
        # synthetic division of Phi_t by g over Z/p^digits must be exact
        mod = p**digits
        g_asc = list(reversed(g))
        rem = [c % mod for c in cyclotomic_poly(t)]  # ascending
        for i in range(len(rem) - 1, r - 1, -1):
            q = rem[i]
            for j in range(r + 1):
                rem[i - r + j] = (rem[i - r + j] - q * g_asc[j]) % mod
        assert all(c % mod == 0 for c in rem)

    def test_consistent_across_precision(self):
        lo = canonical_unramified_factor(5, 12, 8)
        hi = canonical_unramified_factor(5, 12, 20)
        assert [c % 5**8 for c in hi] == [c % 5**8 for c in lo]

    def test_root_has_exact_order(self):
        model = unramified_model(5, 12, 10)
        one = model.root_power(0)
        assert model.root_power(12) == one
        assert model.root_power(6) != one
        assert model.root_power(4) != one

    def test_rejects_ramified_level(self):
        with pytest.raises(ValueError):
            canonical_unramified_factor(5, 10, 8)


class TestValuation:
    def test_rational_values(self):
        z = CyclotomicNumber.from_rational(1, Fraction(50, 3))
        assert unramified_valuation(z, 5) == 2
        z = CyclotomicNumber.from_rational(3, Fraction(1, 7))
        assert unramified_valuation(z, 7) == -1

    def test_unit_at_split_prime(self):
        # 7 = 1 mod 3 splits in Q(xi_3); 3 + xi has norm 7 so exactly one
        # of the two conjugates lands in the distinguished maximal ideal
        xi = CyclotomicNumber.root_of_unity(3, 1)
        three = CyclotomicNumber.from_rational(3, Fraction(3))
        a = three + xi
        b = three + xi * xi
        va, vb = unramified_valuation(a, 7), unramified_valuation(b, 7)
        assert sorted((va, vb)) == [0, 1]

    def test_inert_prime_norm(self):
        # 1 - xi_3 generates the prime over 3, but 5 is inert: unit there
        xi = CyclotomicNumber.root_of_unity(3, 1)
        z = CyclotomicNumber.one(3) - xi
        assert unramified_valuation(z, 5) == 0

    def test_scaling_shifts(self):
        xi = CyclotomicNumber.root_of_unity(4, 1)
        z = (CyclotomicNumber.one(4) + xi).scale(Fraction(49, 2))
        assert unramified_valuation(z, 7) == 2

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            unramified_valuation(CyclotomicNumber.zero(3), 5)

    def test_multiplicative_order(self):
        assert multiplicative_order(5, 12) == 2
        assert multiplicative_order(2, 9) == 6
        assert multiplicative_order(7, 1) == 1


# ---------------------------------------------------------------------------
# Full local fields (ramified part included) and the semilocal algebra.

from math import gcd

from starklab.errors import NonIntegral, NotPrincipalUnit, PrecisionTooLow
from starklab.exact import ModPN, cyc_galois, cyc_project, euler_phi
from starklab.fields import FieldSpec
from starklab.padic import (
    LocalElement,
    SemilocalElement,
    build_local,
    divide_exact,
    exp_p,
    iota_P,
    iota_semilocal,
    log_p,
    sample_minus_unit,
    semilocal_norm,
    semilocal_structure,
    trace_to_Qp,
)


class TestLocalFieldModel:
    def test_build_dimensions(self):
        # purely ramified
        sp = build_local(3, 1, 1, 10)
        assert (sp.r, sp.e, sp.dim) == (1, 6, 6)
        # Phi_7 stays irreducible mod 3, lifted whole
        sp2 = build_local(3, 7, -1, 10)
        assert (sp2.r, sp2.e, sp2.dim) == (6, 1, 6)
        assert list(sp2.ghat) == [1, 1, 1, 1, 1, 1, 1]
        # mixed
        sp3 = build_local(3, 7, 1, 8)
        assert (sp3.r, sp3.e, sp3.dim) == (6, 6, 36)

    def test_canonical_root_normalization(self):
        for p, fprime, m in [(3, 5, 1), (5, 7, 0), (3, 7, 1), (7, 9, -1)]:
            sp = build_local(p, fprime, m, 8)
            one = LocalElement.one(sp)
            xi = LocalElement.xi_power(sp, 1)
            assert (xi**sp.f).coeffs == one.coeffs
            # xi^(p^(m+1)) = x and xi^(f') = y exactly
            x_vec = tuple(1 if i == 1 else 0 for i in range(sp.dim))
            y_vec = tuple(1 if i == sp.r else 0 for i in range(sp.dim))
            if sp.r > 1:
                assert (xi**sp.pm1).coeffs == x_vec
            if sp.e > 1:
                assert (xi**sp.fprime).coeffs == y_vec

    def test_ramified_relation(self):
        sp = build_local(5, 1, 1, 8)  # Q_5(xi_25), e = 20
        assert sp.e == 20
        y = LocalElement.xi_power(sp, 1)
        acc = LocalElement.zero(sp)
        for j in range(5):
            acc = acc + y ** (5 * j)
        assert all(c == 0 for c in acc.coeffs)  # Phi_25(y) = sum y^(5j) = 0

    def test_valuation(self):
        sp = build_local(3, 1, 1, 10)
        one = LocalElement.one(sp)
        y = LocalElement.xi_power(sp, 1)
        assert LocalElement.from_int(sp, 3).valuation() == sp.e
        assert (one - y).valuation() == 1
        assert ((one - y) ** 5 * 3).valuation() == sp.e + 5
        assert LocalElement.zero(sp).valuation() is None
        # unramified: valuation is e * min v_p
        sp2 = build_local(5, 7, -1, 8)
        z = LocalElement(sp2, (25, 50, 0, 125, 0, 0), 8)
        assert z.valuation() == 2 * sp2.e

    def test_mixed_precision_join(self):
        sp = build_local(3, 1, 1, 10)
        a = LocalElement.one(sp, 10)
        b = LocalElement.one(sp, 7)
        assert (a * b).prec == 7 and (a + b).prec == 7
        with pytest.raises(PrecisionTooLow):
            a.reduce_to(11)

    def test_inverse_and_division(self):
        sp = build_local(3, 1, 1, 10)
        one = LocalElement.one(sp)
        y = LocalElement.xi_power(sp, 1)
        u = one + LocalElement(sp, (0, 3, 6, 0, 9, 3), 10)
        assert (u * u.inverse()).coeffs == one.coeffs
        # (1 - y) divides 3 but not 1
        pi = one - y
        q = divide_exact(LocalElement.from_int(sp, 3), pi)
        assert (q * pi).eq_mod(LocalElement.from_int(sp, 3).reduce_to(q.prec), q.prec)
        with pytest.raises(NonIntegral):
            divide_exact(one, pi)

    def test_galois_is_ring_automorphism(self):
        sp = build_local(3, 7, 1, 8)
        za = LocalElement(sp, tuple((5 * i + 1) % 40 for i in range(36)), 8)
        zb = LocalElement(sp, tuple((7 * i + 3) % 23 for i in range(36)), 8)
        for a in (2, 5, 11):
            assert gcd(a, 63) == 1 and (a % 7) in sp._frob_dlog
            lhs = (za * zb).galois(a)
            assert lhs.coeffs == (za.galois(a) * zb.galois(a)).coeffs
        with pytest.raises(ValueError):
            za.galois(3)  # not prime to 63

    def test_galois_group_size(self):
        sp = build_local(3, 7, 1, 6)
        assert len(sp.galois_exponents) == sp.dim == 36


class TestTrace:
    def test_trace_of_one(self):
        for p, fprime, m in [(3, 1, 1), (5, 1, 0), (3, 7, 0), (7, 9, -1)]:
            sp = build_local(p, fprime, m, 8)
            assert trace_to_Qp(LocalElement.one(sp)).value == sp.e * sp.r

    def test_trace_of_ramified_root(self):
        # trace of a primitive p-th root at m = 0 is -r
        sp = build_local(3, 7, 0, 8)
        zeta = LocalElement.xi_power(sp, sp.fprime)  # = y, order p
        t = trace_to_Qp(zeta)
        assert t.eq_mod(ModPN(3, 8, -sp.r), 8)

    def test_linearity(self):
        sp = build_local(3, 5, 1, 8)
        za = LocalElement(sp, tuple((3 * i + 2) % 50 for i in range(24)), 8)
        zb = LocalElement(sp, tuple((11 * i + 7) % 31 for i in range(24)), 8)
        lhs = trace_to_Qp(za + zb)
        rhs = trace_to_Qp(za) + trace_to_Qp(zb)
        assert lhs.eq_mod(rhs, 8)

    def test_galois_invariance(self):
        sp = build_local(3, 5, 1, 8)
        z = LocalElement(sp, tuple((9 * i + 4) % 43 for i in range(24)), 8)
        for a in sp.galois_exponents[:5]:
            assert trace_to_Qp(z.galois(a)).eq_mod(trace_to_Qp(z), 8)


class TestLogExp:
    def test_log_of_one_and_torsion(self):
        sp = build_local(3, 1, 1, 12)
        one = LocalElement.one(sp)
        assert all(c == 0 for c in log_p(one).coeffs)
        for k in range(1, 9):
            zeta = LocalElement.xi_power(sp, k)
            assert all(c == 0 for c in log_p(zeta).coeffs)

    def test_log_homomorphism(self):
        sp = build_local(3, 1, 1, 12)
        one = LocalElement.one(sp)
        u = one + LocalElement(sp, tuple(3 * k for k in (1, 2, 0, 1, 2, 2)), 12)
        v = one + LocalElement(sp, tuple(3 * k for k in (2, 0, 1, 2, 1, 0)), 12)
        lu, lv, luv = log_p(u), log_p(v), log_p(u * v)
        m = min(lu.prec, lv.prec, luv.prec)
        assert (lu + lv).eq_mod(luv, m)
        assert log_p(u * u).eq_mod(lu + lu, min(log_p(u * u).prec, lu.prec))

    def test_log_kills_torsion_part(self):
        sp = build_local(3, 1, 1, 12)
        one = LocalElement.one(sp)
        u = one + LocalElement(sp, tuple(3 * k for k in (1, 2, 0, 1, 2, 2)), 12)
        zeta = LocalElement.xi_power(sp, 2)
        assert log_p(zeta * u).eq_mod(log_p(u).reduce_to(log_p(zeta * u).prec),
                                      log_p(zeta * u).prec)

    def test_exp_log_roundtrip_on_deep_units(self):
        for p, fprime, m in [(3, 1, 1), (5, 7, -1)]:
            sp = build_local(p, fprime, m, 12)
            one = LocalElement.one(sp)
            bump = LocalElement(sp, tuple(p * p * ((7 * i + 3) % p) for i in range(sp.dim)), 12)
            u = one + bump  # v(u-1) >= 2e >= e+1
            le = log_p(u)
            back = exp_p(le)
            assert back.eq_mod(u.reduce_to(back.prec), back.prec)

    def test_not_principal_unit(self):
        sp = build_local(3, 7, 0, 8)
        x = LocalElement(sp, tuple(1 if i == 1 else 0 for i in range(sp.dim)), 8)
        with pytest.raises(NotPrincipalUnit):
            log_p(x)

    def test_exp_domain(self):
        sp = build_local(3, 1, 1, 10)
        pi = LocalElement.one(sp) - LocalElement.xi_power(sp, 1)
        with pytest.raises(ValueError):
            exp_p(pi)


class TestSemilocal:
    def test_prime_counts(self):
        # primes x local degree = phi(f)
        for f, p, nprimes in [(9, 3, 1), (63, 3, 1), (45, 3, 1), (7, 5, 1), (9, 7, 2), (9, 5, 1), (25, 5, 1)]:
            st = semilocal_structure(f, p, 6)
            assert len(st.reps) == nprimes
            assert len(st.reps) * st.local.dim == euler_phi(f)

    def test_iota_rational_is_constant(self):
        st = semilocal_structure(9, 7, 8)
        z = CyclotomicNumber.from_rational(9, Fraction(22, 5))
        u = iota_semilocal(z, FieldSpec.make(9), st)
        for comp in u.components.values():
            assert all(c == 0 for c in comp.coeffs[1:])

    def test_iota_root_of_unity_order(self):
        st = semilocal_structure(9, 7, 8)
        z = CyclotomicNumber.root_of_unity(9, 1)
        for c in st.reps:
            comp = iota_P(z, c, st)
            assert (comp**9).coeffs == LocalElement.one(st.local).coeffs
            assert (comp**3).coeffs != LocalElement.one(st.local).coeffs

    def test_iota_p_denominator_rejected(self):
        st = semilocal_structure(9, 7, 8)
        z = CyclotomicNumber.from_rational(9, Fraction(1, 7))
        with pytest.raises(NonIntegral):
            iota_P(z, 1, st)

    def test_iota_galois_equivariance(self):
        import random as _r

        st = semilocal_structure(9, 7, 8)
        K9 = FieldSpec.make(9)
        rng = _r.Random(20240)
        for _ in range(20):
            b = rng.choice([a for a in range(1, 9) if a % 3 != 0])
            zz = CyclotomicNumber(
                9, tuple(Fraction(rng.randrange(-9, 10), rng.choice([1, 2, 5])) for _ in range(6)))
            lhs = iota_semilocal(cyc_galois(zz, b), K9, st)
            rhs = iota_semilocal(zz, K9, st).galois(b)
            assert lhs.eq_mod(rhs, 8)

    def test_iota_multiplicative(self):
        st = semilocal_structure(63, 3, 8)
        K = FieldSpec.make(63)
        a = CyclotomicNumber.one(63) - CyclotomicNumber.root_of_unity(63, 5)
        b = CyclotomicNumber.one(63) + CyclotomicNumber.root_of_unity(63, 17)
        lhs = iota_semilocal(a * b, K, st)
        rhs = iota_semilocal(a, K, st) * iota_semilocal(b, K, st)
        assert lhs.eq_mod(rhs, 8)


class TestSampler:
    def test_determinism_and_distinctness(self):
        K = FieldSpec.make(63)
        u1 = sample_minus_unit(K, 3, 11, 10)
        u1b = sample_minus_unit(K, 3, 11, 10)
        u2 = sample_minus_unit(K, 3, 12, 10)
        assert u1.eq_mod(u1b, 10)
        assert not u1.eq_mod(u2, 10)

    def test_minus_property_and_principality(self):
        K = FieldSpec.make(9)
        u = sample_minus_unit(K, 3, 7, 10)
        one = SemilocalElement.one(K, u.structure)
        assert (u * u.conjugate()).eq_mod(one, 10)
        assert u.is_principal_unit()

    def test_w_equals_one_gives_u_equals_one(self):
        K = FieldSpec.make(9)
        st = semilocal_structure(9, 3, 8)
        w = SemilocalElement.one(K, st)
        u = w * w.conjugate().inverse()
        assert u.eq_mod(SemilocalElement.one(K, st), 8)

    def test_precision_prefix_compatible(self):
        K = FieldSpec.make(63)
        lo = sample_minus_unit(K, 3, 11, 9)
        hi = sample_minus_unit(K, 3, 11, 13)
        for c in lo.structure.reps:
            assert tuple(v % 3**9 for v in hi.components[c].coeffs) == lo.components[c].coeffs

    def test_requires_cm(self):
        from starklab.errors import NotCM

        K_plus = FieldSpec.make(9, h_gens=(8,))  # real subfield
        with pytest.raises(NotCM):
            sample_minus_unit(K_plus, 3, 1, 8)


class TestSemilocalNorm:
    def test_identity_and_one(self):
        K = FieldSpec.make(63)
        u = sample_minus_unit(K, 3, 5, 10)
        assert semilocal_norm(u, K).eq_mod(u, 10)
        F = FieldSpec.make(21)
        n1 = semilocal_norm(SemilocalElement.one(K, u.structure), F)
        assert n1.eq_mod(SemilocalElement.one(F, n1.structure), 10)

    def test_transitivity_tower(self):
        K, F, E = FieldSpec.make(63), FieldSpec.make(21), FieldSpec.make(3)
        u = sample_minus_unit(K, 3, 5, 12)
        via = semilocal_norm(semilocal_norm(u, F), E)
        direct = semilocal_norm(u, E)
        assert via.eq_mod(direct, via.min_precision())

    def test_norm_matches_global_norm(self):
        # N(iota(z)) == iota(N(z)) for z = 1 - xi_63 down to level 21 and 3
        K = FieldSpec.make(63)
        st = semilocal_structure(63, 3, 12)
        z = CyclotomicNumber.one(63) - CyclotomicNumber.root_of_unity(63, 1)
        zi = iota_semilocal(z, K, st)
        for ff in (21, 3):
            F = FieldSpec.make(ff)
            norm_local = semilocal_norm(zi, F)
            acc = CyclotomicNumber.one(63)
            for a in range(1, 64):
                if gcd(a, 63) == 1 and a % ff == 1:
                    acc = acc * cyc_galois(z, a)
            direct = iota_semilocal(cyc_project(acc, ff), F, norm_local.structure)
            assert norm_local.eq_mod(direct, 12)


class TestPrecisionHonesty:
    def test_operations_stable_under_extra_digits(self):
        lo, hi = build_local(3, 5, 1, 8), build_local(3, 5, 1, 13)
        raw = tuple((13 * i + 4) % 6561 for i in range(24))
        raw2 = tuple((5 * i + 1) % 6561 for i in range(24))
        for op in ("mul", "inv", "log"):
            a_lo = LocalElement(lo, raw, 8)
            a_hi = LocalElement(hi, raw, 13)
            if op == "mul":
                r_lo = a_lo * LocalElement(lo, raw2, 8)
                r_hi = a_hi * LocalElement(hi, raw2, 13)
            elif op == "inv":
                # invert principal units (guaranteed invertible)
                r_lo = (LocalElement.one(lo) + a_lo * 3).inverse()
                r_hi = (LocalElement.one(hi) + a_hi * 3).inverse()
            else:
                u_lo = LocalElement.one(lo) + (a_lo * 3)
                u_hi = LocalElement.one(hi) + (a_hi * 3)
                r_lo, r_hi = log_p(u_lo), log_p(u_hi)
            k = r_lo.prec
            assert tuple(c % 3**k for c in r_hi.coeffs) == tuple(c % 3**k for c in r_lo.coeffs)

    def test_hensel_factor_stable(self):
        lo = build_local(3, 7, 1, 8)
        hi = build_local(3, 7, 1, 13)
        assert [c % 3**8 for c in hi.ghat] == [c % 3**8 for c in lo.ghat]
