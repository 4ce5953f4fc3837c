"""Structural property battery: named identities the engine must satisfy.

Each property function returns a JSON-able record
``{"name", "seed", "lhs", "rhs", "equal"}`` with small evidence payloads;
``run_all`` executes the whole battery.  The same functions back the
property test suite, so a failure here is a failure there.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import lcm

from .exact import CyclotomicNumber, ModPN
from .fields import FieldSpec, PlaceSet, s1_places
from .groupring import AbelianGroup, GroupRingElem, apply_character, characters, \
    det_over_subgroup, kappa_n
from .padic import LocalElement, iota_semilocal, sample_minus_unit, \
    semilocal_norm, semilocal_structure
from .starkmap import H_pairing, WedgeUnits, _eta_terms_over_Q, _group_ring_eq, \
    _monomial_norm, _translate_terms, determinantal_map, hilbert_bracket, \
    minus_lattice_data, project_to_subfield, rubin_stark_eta, s_map, \
    semilocal_logs

DEFAULT_GUARD = 8


def _record(name: str, lhs, rhs, equal: bool) -> dict:
    return {"name": name, "seed": 0, "lhs": lhs, "rhs": rhs, "equal": bool(equal)}


def _elem_min_digits(*elems) -> int:
    return min(c.N for x in elems for _, c in x.coeffs)


def _elems_equal(a: GroupRingElem, b: GroupRingElem, p: int) -> bool:
    return _group_ring_eq(a, b, p, _elem_min_digits(a, b))


def _coeff_strings(x: GroupRingElem) -> list:
    return [str(c) for _, c in x.coeffs] or ["0"]


# ---------------------------------------------------------------------------
# the determinantal construction on synthetic data


def _synthetic_setup():
    group = AbelianGroup.make(5)
    weights = [
        {a: Fraction(3 * i + j + 1, 2 + j) for j, a in enumerate(group.elements)}
        for i in range(2)
    ]
    fs = [lambda m, w=w: sum(w[a] * c for a, c in m.as_dict().items())
          for w in weights]

    def act(h, m):
        return GroupRingElem.of_element(group, h) * m

    m1 = GroupRingElem.from_dict(group, {1: Fraction(1), 2: Fraction(2)})
    m2 = GroupRingElem.from_dict(group, {4: Fraction(3), 3: Fraction(-1)})
    m3 = GroupRingElem.from_dict(group, {2: Fraction(1), 3: Fraction(5)})
    return group, fs, act, (m1, m2, m3)


def det_multilinearity() -> dict:
    group, fs, act, (m1, m2, m3) = _synthetic_setup()
    lam = Fraction(7, 3)
    lhs = determinantal_map(fs, (m1 + m3.scale(lam), m2), group, act)
    rhs = (determinantal_map(fs, (m1, m2), group, act)
           + determinantal_map(fs, (m3, m2), group, act).scale(lam))
    return _record("det-multilinearity", _coeff_strings(lhs),
                   _coeff_strings(rhs), lhs == rhs)


def det_alternating() -> dict:
    group, fs, act, (m1, m2, _) = _synthetic_setup()
    repeated = determinantal_map(fs, (m1, m1), group, act)
    swapped = determinantal_map(fs, (m2, m1), group, act)
    straight = determinantal_map(fs, (m1, m2), group, act)
    equal = repeated == GroupRingElem.zero(group) and swapped == -straight
    return _record("det-alternating", _coeff_strings(repeated),
                   ["0"], equal)


def det_translation() -> dict:
    group, fs, act, (m1, m2, _) = _synthetic_setup()
    h = 3
    lhs = determinantal_map(fs, (act(h, m1), m2), group, act)
    rhs = GroupRingElem.of_element(group, h) * determinantal_map(
        fs, (m1, m2), group, act)
    return _record("det-translation", _coeff_strings(lhs),
                   _coeff_strings(rhs), lhs == rhs)


# ---------------------------------------------------------------------------
# the symbol pairing


def bracket_kappa_equivariance(guard: int = DEFAULT_GUARD) -> dict:
    """[sigma_b alpha, sigma_b u] = b * [alpha, u] mod p^(n+1): the symbol
    transforms under the group through the cyclotomic character."""
    n = 1
    checks, lhs_vals, rhs_vals = [], [], []
    for f, p, a, bs in ((9, 3, 1, (2, 4, 5, 7, 8)), (63, 3, 2, (5, 11))):
        spec = FieldSpec.make(f)
        st = semilocal_structure(f, p, n + 1 + guard)
        u = sample_minus_unit(spec, p, 11, n + 1 + guard)
        base = hilbert_bracket(((f, a, 1),), u, n)
        for b in bs:
            lhs = hilbert_bracket(((f, (a * b) % f, 1),), u.galois(b), n)
            rhs = base.scale(b)
            lhs_vals.append(int(lhs.value))
            rhs_vals.append(int(rhs.value))
            checks.append(lhs.eq_mod(rhs, n + 1))
    return _record("bracket-kappa-equivariance", lhs_vals, rhs_vals, all(checks))


def map_translation_equivariance(guard: int = DEFAULT_GUARD) -> dict:
    """The map commutes with the group action on units."""
    spec = FieldSpec.make(9)
    p = 3
    S = s1_places(spec, p)
    _, t = minus_lattice_data(spec, S, p)
    st = semilocal_structure(9, p, guard + t)
    u = sample_minus_unit(spec, p, 5, guard + t)
    h = 4
    lhs = s_map(spec, S, (u.galois(h),), st)
    rhs = GroupRingElem.of_element(spec.G, h) * s_map(spec, S, (u,), st).elem
    equal = lhs.shift == t and _elems_equal(lhs.elem, rhs, p)
    return _record("map-translation-equivariance",
                   _coeff_strings(lhs.elem), _coeff_strings(rhs), equal)


def euler_functoriality(guard: int = DEFAULT_GUARD) -> dict:
    """Enlarging the place set by an unramified rational q multiplies the
    map by the group-ring Euler multiplier 1 - q^-1 sigma_q."""
    spec = FieldSpec.make(9)
    p, q = 3, 7
    S = s1_places(spec, p)
    S7 = PlaceSet.above_rational_primes(spec, (3, q))
    _, t = minus_lattice_data(spec, S, p)
    _, t7 = minus_lattice_data(spec, S7, p)
    st = semilocal_structure(9, p, guard + max(t, t7))
    u = sample_minus_unit(spec, p, 3, guard + max(t, t7))
    big = s_map(spec, S7, (u,), st)
    small = s_map(spec, S, (u,), st)
    mult = GroupRingElem.from_dict(
        spec.G, {1: Fraction(1), q % 9: Fraction(-1, q)})
    lhs = big.elem.scale(p ** small.shift)
    rhs = (small.elem * mult).scale(p ** big.shift)
    return _record("euler-functoriality", _coeff_strings(lhs),
                   _coeff_strings(rhs), _elems_equal(lhs, rhs, p))


def norm_descent(guard: int = DEFAULT_GUARD) -> dict:
    """Projecting the level-63 map value to level 9 agrees with the level-9
    map on the norm of the unit."""
    p = 3
    spec63 = FieldSpec.make(63)
    spec9 = FieldSpec.make(9)
    S63 = s1_places(spec63, p)
    S9 = PlaceSet.above_rational_primes(spec9, (3, 7))
    _, t63 = minus_lattice_data(spec63, S63, p)
    _, t9 = minus_lattice_data(spec9, S9, p)
    digits = guard + max(t63, t9)
    st63 = semilocal_structure(63, p, digits)
    u = sample_minus_unit(spec63, p, 9, digits)
    down = s_map(spec63, S63, (u,), st63)
    v = semilocal_norm(u, spec9)
    sub = s_map(spec9, S9, (v,), v.structure)
    lhs = project_to_subfield(down.elem, spec9.G).scale(p ** sub.shift)
    rhs = sub.elem.scale(p ** down.shift)
    return _record("norm-descent", _coeff_strings(lhs), _coeff_strings(rhs),
                   _elems_equal(lhs, rhs, p))


def n_reduction(guard: int = DEFAULT_GUARD) -> dict:
    """The level-p^2 pairing reduces coefficientwise to the level-p pairing,
    compatibly with the kappa factors."""
    spec = FieldSpec.make(9)
    p = 3
    S = s1_places(spec, p)
    _, t = minus_lattice_data(spec, S, p)
    st = semilocal_structure(9, p, 2 + guard + t)
    u = sample_minus_unit(spec, p, 13, 2 + guard + t)
    eta = rubin_stark_eta(spec, S, p)
    logs = [semilocal_logs(u)]
    h1 = H_pairing(eta, (u,), 1, spec.G, logs)
    h0 = H_pairing(eta, (u,), 0, spec.G, logs)
    k1 = kappa_n(spec.gamma_group, 1, p, 1)
    k0 = kappa_n(spec.gamma_group, 1, p, 0)
    equal = (_group_ring_eq(h1, h0, p, 1)
             and _group_ring_eq(h1.scale(k1), h0.scale(k0), p, 1))
    return _record("n-reduction", _coeff_strings(h1), _coeff_strings(h0), equal)


def split_prime_divisibility(guard: int = DEFAULT_GUARD) -> dict:
    """Adding a place over a rational q = 1 mod p^(n+1) that splits in the
    field makes both sides of the congruence vanish mod p^(n+1): the map
    gains the Euler factor 1 - 1/q and the solution's monomials cancel."""
    spec = FieldSpec.make(9)
    p, n, q = 3, 1, 19
    S = PlaceSet.above_rational_primes(spec, (3, q))
    _, t = minus_lattice_data(spec, S, p)
    st = semilocal_structure(9, p, n + 1 + guard + t)
    u = sample_minus_unit(spec, p, 17, n + 1 + guard + t)
    sv = s_map(spec, S, (u,), st)
    margins = sv.margins()
    terms = _eta_terms_over_Q(spec, {3, q})
    eta = WedgeUnits(1, ((Fraction(-1, 2), (terms,)),))
    h = H_pairing(eta, (u,), n, spec.G)
    h_zero = all(c.value % p ** (n + 1) == 0 for _, c in h.coeffs)
    s_divisible = all(m >= n + 1 for m in margins.values())
    return _record("split-prime-divisibility",
                   [margins[g] for g in spec.G.elements],
                   _coeff_strings(h), s_divisible and h_zero)


def torsion_vanishing(guard: int = DEFAULT_GUARD) -> dict:
    """Both the pairing and the map kill roots of unity exactly."""
    spec = FieldSpec.make(9)
    p = 3
    S = s1_places(spec, p)
    _, t = minus_lattice_data(spec, S, p)
    st = semilocal_structure(9, p, guard + t)
    u = iota_semilocal(CyclotomicNumber.root_of_unity(9), spec, st)
    eta = rubin_stark_eta(spec, S, p)
    h = H_pairing(eta, (u,), 1, spec.G)
    sv = s_map(spec, S, (u,), st)
    h_zero = all(c.value == 0 for _, c in h.coeffs)
    s_zero = all(c.valuation() is None for _, c in sv.elem.coeffs)
    return _record("torsion-vanishing", _coeff_strings(h),
                   _coeff_strings(sv.elem), h_zero and s_zero)


def cyclotomic_norm_relations() -> dict:
    """Full-group norms of 1 - xi_f: the prime for a prime-power level,
    one for a level with two distinct prime factors, and the conjugate-pair
    monomial norm over the +-1-classes."""
    lhs, rhs = [], []
    for f, expected in ((9, 3), (5, 5), (63, 1)):
        got = _monomial_norm(((f, 1, 1),), AbelianGroup.make(f).elements)
        lhs.append(str(got))
        rhs.append(str(Fraction(expected)))
    pair = _monomial_norm(((5, 1, 1), (5, 4, 1)),
                          FieldSpec.make(5).gbar.elements)
    lhs.append(str(pair))
    rhs.append("5")
    return _record("cyclotomic-norm-relations", lhs, rhs, lhs == rhs)


# ---------------------------------------------------------------------------
# the determinant-character identity on group rings


def _all_subgroups(big: AbelianGroup):
    seen = {}
    for size in range(4):
        for gens in itertools.combinations(big.elements, size):
            sub = big.subgroup(gens)
            seen.setdefault(sub.uset, sub)
    return [seen[key] for key in sorted(seen, key=sorted)]


def _restricts_to(phi, chi, sub: AbelianGroup) -> bool:
    return all((phi.value_exponent(c) - chi.value_exponent(c)).denominator == 1
               for c in sub.elements)


def det_character_identity(levels=(3, 4, 5, 7, 8, 9, 11, 12, 13, 15, 16, 20, 21, 24)) -> dict:
    """chi(det of multiplication by x on the subgroup-module) equals the
    product of phi(x) over the characters phi restricting to chi, for every
    subgroup of every abelian group of order at most twelve."""
    checked = 0
    failures = []
    for f in levels:
        big = AbelianGroup.make(f)
        x = GroupRingElem.from_dict(
            big, {a: Fraction(2 * i + 1, i + 2)
                  for i, a in enumerate(big.elements)})
        phis = characters(big)
        phi_vals = [apply_character(phi, x) for phi in phis]
        for sub in _all_subgroups(big):
            det = det_over_subgroup(x, sub)
            for chi in characters(sub):
                matching = [v for phi, v in zip(phis, phi_vals)
                            if _restricts_to(phi, chi, sub)]
                lhs = apply_character(chi, det)
                level = lcm(lhs.f, *(v.f for v in matching))
                product = CyclotomicNumber.one(level)
                for v in matching:
                    product = product * v.lift(level)
                checked += 1
                if lhs.lift(level) != product:
                    failures.append([f, sorted(sub.uset), str(chi)])
    return _record("det-character-identity", [checked, failures],
                   [checked, []], not failures)


EXACT_PROPERTIES = (
    det_multilinearity,
    det_alternating,
    det_translation,
    cyclotomic_norm_relations,
    det_character_identity,
)

PADIC_PROPERTIES = (
    bracket_kappa_equivariance,
    map_translation_equivariance,
    euler_functoriality,
    norm_descent,
    n_reduction,
    split_prime_divisibility,
    torsion_vanishing,
)


def run_all(guard: int = DEFAULT_GUARD) -> list:
    """Run every property; guard digits feed the p-adic instances."""
    out = [prop() for prop in EXACT_PROPERTIES]
    out.extend(prop(guard) for prop in PADIC_PROPERTIES)
    return out
