"""Stark-type p-adic maps and the conjecture checkers built on them.

The map under test sends a tuple of principal semilocal units to a
minus-part group-ring element: the p-adic embedding of the starred
minus L-element multiplied by a determinant of semilocal logarithms.
The congruence checker compares it, modulo p^(n+1), with a determinant
of explicit local symbols taken against a cyclotomic unit system; the
integrality checker certifies p-integrality of its coefficients with a
guard window.

All computations happen in the exact local models of `padic`: every
number carries its modulus, and every verdict is a congruence or a
valuation certified within a tracked precision window.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, prod

from sympy import factorint

from .errors import (
    BadPlaceSet,
    HypothesisViolated,
    InsufficientPrecision,
    IntegralityFailure,
    NonIntegral,
    NotCM,
    PrecisionTooLow,
    UnsupportedFirstArgument,
)
from .exact import CyclotomicNumber, ModPN, rational_to_modpn
from .fields import (
    FieldSpec,
    PlaceSet,
    _decomposition_in_gbar,
    check_hypothesis_bad_ramification,
    conductor,
    ramified_primes,
    s1_places,
    s_Q_part,
)
from .groupring import (
    AbelianGroup,
    GroupRingElem,
    _coeff_add,
    characters,
    corestrict_nu,
    kappa_n,
)
from .lvalues import (
    _orbit_idempotent,
    a_minus,
    a_minus_relative,
    bad_set_inertia,
    pndivg_rhs,
    rational_character_orbits,
)
from .padic import (
    LocalElement,
    LocalFieldSpec,
    SemilocalElement,
    SemilocalStructure,
    build_local,
    divide_exact,
    iota_P,
    log_p,
    sample_minus_unit,
    semilocal_norm,
    semilocal_structure,
    trace_to_Qp,
)

# ---------------------------------------------------------------------------
# component evaluation and semilocal logarithms


def component_at(u: SemilocalElement, b: int) -> LocalElement:
    """The image of u under the model embedding that sends the ambient root
    of unity to its b-th power (the component at the prime indexed by b)."""
    st = u.structure
    b %= st.f
    if gcd(b, st.f) != 1:
        raise ValueError(f"exponent {b} is not a unit mod {st.f}")
    c = st.rep_of[b]
    return u.components[c].galois((b * pow(c, -1, st.f)) % st.f)


def semilocal_logs(u: SemilocalElement) -> dict[int, LocalElement]:
    """Iwasawa logarithms of all components, keyed like the components."""
    return {c: log_p(x) for c, x in u.components.items()}


def _log_at(st: SemilocalStructure, logs: dict[int, LocalElement], b: int) -> LocalElement:
    """log of component_at(u, b) from the precomputed component logs; the
    logarithm commutes with the coefficientwise Galois action."""
    b %= st.f
    c = st.rep_of[b]
    return logs[c].galois((b * pow(c, -1, st.f)) % st.f)


def _translated_logs(st: SemilocalStructure, logs: dict[int, LocalElement],
                     b: int) -> dict[int, LocalElement]:
    """Component logs of the sigma_b-translate of u from those of u."""
    out = {}
    for c in st.reps:
        cb = (c * b) % st.f
        r = st.rep_of[cb]
        out[c] = logs[r].galois((cb * pow(r, -1, st.f)) % st.f)
    return out


# ---------------------------------------------------------------------------
# determinants over a commutative group ring


def _perm_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def _group_det(mat, group: AbelianGroup) -> GroupRingElem:
    """Determinant of a small square matrix over the (commutative) group ring."""
    size = len(mat)
    acc = GroupRingElem.zero(group)
    for perm in itertools.permutations(range(size)):
        term = mat[0][perm[0]]
        for i in range(1, size):
            term = term * mat[i][perm[i]]
        acc = acc + (term if _perm_sign(perm) > 0 else -term)
    return acc


def determinantal_map(fs, ms, group: AbelianGroup, act) -> GroupRingElem:
    """det over the group ring of the equivariant pairing matrix
    (sum_h f_i(h^-1.m_t) h)_{i,t}.

    `fs` are coefficient-valued functions on whatever module the m's live in
    and act(exponent, m) realizes the group action.  The result is additive
    and alternating in both argument tuples, and composing an f_i with a
    group translation multiplies the whole determinant by that element.
    """
    if not fs or len(fs) != len(ms):
        raise ValueError("need equally many maps and module elements, at least one each")
    mat = [
        [
            GroupRingElem.from_dict(
                group, {h: f(act(group.inv(h), m)) for h in group.elements})
            for m in ms
        ]
        for f in fs
    ]
    return _group_det(mat, group)


def regulator(theta, group: AbelianGroup, gammas,
              logs_list=None) -> GroupRingElem:
    """The logarithmic determinant of the unit tuple: entry (i, t) of the
    underlying matrix is sum_g log(component of u_t at gamma_i * g^-1) * g.

    Components that are not principal units (times model torsion) raise
    NotPrincipalUnit via the logarithm."""
    if len(theta) != len(gammas):
        raise ValueError("need one embedding representative per unit")
    st = theta[0].structure
    if logs_list is None:
        logs_list = [semilocal_logs(u) for u in theta]
    mat = [
        [
            GroupRingElem.from_dict(
                group,
                {g: _log_at(st, logs, (gi * group.inv(g)) % st.f)
                 for g in group.elements})
            for logs in logs_list
        ]
        for gi in gammas
    ]
    return _group_det(mat, group)


def gamma_transversal(spec: FieldSpec) -> tuple[int, ...]:
    """Coset representatives of Gal(K/k) inside Gal(K/Q), identity first,
    then smallest exponents."""
    gamma = spec.gamma_group
    G = spec.G
    reps = [1]
    seen = {frozenset(u % spec.f for u in G.uset)}
    for a in gamma.elements:
        coset = frozenset((u * a) % spec.f for u in G.uset)
        if coset not in seen:
            seen.add(coset)
            reps.append(a)
    assert len(reps) * G.order == gamma.order
    return tuple(reps)


# ---------------------------------------------------------------------------
# the Coleman-style local symbol: b(xi, v) = Tr(xi/(1-xi) * log v) / f


_MU_CACHE: dict = {}


def _symbol_numerator(local: LocalFieldSpec, idx: int) -> tuple[LocalElement, int]:
    """(p^shift * xi^idx/(1 - xi^idx), shift) as an integral element; shift
    is 1 exactly when 1 - xi^idx lies in the maximal ideal."""
    idx %= local.f
    key = (local.p, local.fprime, local.m, local.N, idx)
    out = _MU_CACHE.get(key)
    if out is None:
        xi = LocalElement.xi_power(local, idx)
        den = LocalElement.one(local) - xi
        if idx % max(local.fprime, 1):
            out = (divide_exact(xi, den), 0)
        else:
            # the residue of xi^idx is 1: clear the uniformizer against p
            out = (xi * divide_exact(LocalElement.from_int(local, local.p), den), 1)
        _MU_CACHE[key] = out
    return out


def _b_value(local: LocalFieldSpec, numerator: LocalElement, shift: int,
             lam: LocalElement) -> ModPN:
    """Tr(mu * lam) / f for mu given as p^-shift * numerator; f is the full
    torsion level fprime * p^(m+1) of the model."""
    tr = trace_to_Qp(numerator * lam)
    if local.fprime > 1:
        tr = tr * ModPN(local.p, tr.N, local.fprime).inverse()
    try:
        return tr.divide_exact_by_p_power(local.m + 1 + shift)
    except NonIntegral as exc:
        raise IntegralityFailure(f"symbol trace is not divisible by the level: {exc}") from exc
    except PrecisionTooLow as exc:
        raise InsufficientPrecision(str(exc)) from exc


def coleman_b(xi: LocalElement, v: LocalElement,
              lam: LocalElement | None = None) -> ModPN:
    """The local symbol coefficient b(xi, v) = Tr(xi/(1-xi) * log v) / f for
    a full-level root of unity xi of the model; integral by construction,
    zero on torsion v."""
    local = xi.spec
    one = LocalElement.one(local)
    if not (xi ** local.f).eq_mod(one, xi.prec):
        raise UnsupportedFirstArgument(f"not a level-{local.f} root of unity")
    for q in factorint(local.f):
        if (xi ** (local.f // q)).eq_mod(one, xi.prec):
            raise UnsupportedFirstArgument("imprimitive root of unity")
    if lam is None:
        lam = log_p(v)
    den = one - xi
    vden = den.valuation()
    if vden is None:
        raise UnsupportedFirstArgument("1 - xi vanishes at working precision")
    if vden == 0:
        num, shift = divide_exact(xi, den), 0
    else:
        num, shift = xi * divide_exact(LocalElement.from_int(local, local.p), den), 1
    return _b_value(local, num, shift, lam)


# ---------------------------------------------------------------------------
# the semilocal symbol against cyclotomic-unit monomials


def _normalize_terms(terms, f: int):
    """Split monomial data into full-level and sublevel parts, cancelling
    common factors of exponent and level."""
    plain: list[tuple[int, int]] = []
    subs: dict[int, list[tuple[int, int]]] = {}
    for f0, a, mult in terms:
        a0 = a % f0
        gdiv = gcd(a0, f0)
        if gdiv == f0:
            raise UnsupportedFirstArgument("factor 1 - 1 vanishes")
        f1, a1 = f0 // gdiv, a0 // gdiv
        if f % f1 != 0:
            raise UnsupportedFirstArgument(
                f"level {f1} does not divide the ambient level {f}")
        if f1 == f:
            plain.append((a1, mult))
        else:
            subs.setdefault(f1, []).append((a1, mult))
    return plain, subs


def _plain_bracket(st: SemilocalStructure, plain, logs, n: int) -> ModPN:
    """sum over primes above p of the level-p^(n+1) symbol values for
    full-level monomial data, from precomputed logs of the second argument:
    each factor 1 - xi^a against u contributes -a * sum_c b(xi^(c a), u_c)."""
    p = st.p
    total = ModPN(p, n + 1, 0)
    for a1, mult in plain:
        acc = None
        for c in st.reps:
            num, shift = _symbol_numerator(st.local, c * a1)
            bc = _b_value(st.local, num, shift, logs[c])
            acc = bc if acc is None else acc + bc
        total = total + acc.scale(-a1 * mult)
    try:
        return total.reduce_to(n + 1)
    except PrecisionTooLow as exc:
        raise InsufficientPrecision(str(exc)) from exc


def _norm_to_level(u: SemilocalElement, f1: int, n: int) -> SemilocalElement:
    p = u.structure.p
    if f1 % p ** (n + 1) != 0:
        raise UnsupportedFirstArgument(
            f"sublevel {f1} does not retain the p^{n + 1}-th roots of unity")
    return semilocal_norm(u, FieldSpec.make(f1))


def hilbert_bracket(terms, u: SemilocalElement, n: int,
                    logs: dict[int, LocalElement] | None = None) -> ModPN:
    """The level-p^(n+1) symbol of prod_j (1 - xi_{f_j}^{a_j})^{e_j} against
    the unit u, summed over the primes above p; the value is the exponent
    (mod p^(n+1)) on the fixed p^(n+1)-th root of unity.

    Sublevel factors are passed down to the subfield they generate via the
    norm of u, and must retain level p^(n+1) there."""
    st = u.structure
    p = st.p
    if st.f % p ** (n + 1) != 0:
        raise HypothesisViolated(
            f"the ambient field has no p^{n + 1}-th roots of unity")
    plain, subs = _normalize_terms(terms, st.f)
    total = ModPN(p, n + 1, 0)
    if plain:
        if logs is None:
            logs = semilocal_logs(u)
        total = total + _plain_bracket(st, plain, logs, n)
    for f1, lst in sorted(subs.items()):
        v = _norm_to_level(u, f1, n)
        total = total + _plain_bracket(v.structure, lst, semilocal_logs(v), n)
    return total


def _bracket_translates(terms, u: SemilocalElement, logs, group: AbelianGroup,
                        n: int) -> dict[int, ModPN]:
    """[terms, g u] for every g in the group, sharing norms and logs."""
    st = u.structure
    p = st.p
    plain, subs = _normalize_terms(terms, st.f)
    out = {g: ModPN(p, n + 1, 0) for g in group.elements}
    if plain:
        for g in group.elements:
            out[g] = out[g] + _plain_bracket(st, plain, _translated_logs(st, logs, g), n)
    for f1, lst in sorted(subs.items()):
        v = _norm_to_level(u, f1, n)
        vlogs = semilocal_logs(v)
        stF = v.structure
        for g in group.elements:
            out[g] = out[g] + _plain_bracket(
                stF, lst, _translated_logs(stF, vlogs, g % f1), n)
    return out


# ---------------------------------------------------------------------------
# wedges of cyclotomic-unit monomials and the pairing H


@dataclass(frozen=True)
class WedgeUnits:
    """A rational combination of wedges of cyclotomic-unit monomials.

    Each part is (coefficient, (factor_1, ..., factor_degree)) where every
    factor is a tuple of (level, exponent, multiplicity) monomial data
    meaning prod_j (1 - xi_level^exponent)^multiplicity; the object is the
    sum over parts of coefficient * factor_1 wedge ... wedge factor_degree.
    """

    degree: int
    parts: tuple

    def __post_init__(self):
        for coeff, factors in self.parts:
            assert len(factors) == self.degree


def _translate_terms(terms, b: int) -> tuple:
    """The sigma_b-translate of monomial data (exponent multiplication)."""
    return tuple((f0, (a * b) % f0, e) for f0, a, e in terms)


def _euler_adjust_terms(terms, q: int) -> tuple:
    """Monomial data of (1 - sigma_q^-1) applied to the monomial (additive
    notation: the monomial divided by its sigma_q^-1-translate)."""
    extra = tuple((f0, (a * pow(q, -1, f0)) % f0, -e) for f0, a, e in terms)
    return tuple(terms) + extra


def H_pairing(eta: WedgeUnits, theta, n: int, group: AbelianGroup,
              logs_list=None) -> GroupRingElem:
    """Sum over the wedge parts of coefficient * det(sum_g [factor_i,
    g u_t] g^-1) with coefficients mod p^(n+1): the symbol pairing of the
    unit system against the wedge of semilocal units."""
    if len(theta) != eta.degree:
        raise ValueError("unit tuple length must match the wedge degree")
    st = theta[0].structure
    p = st.p
    if st.f % p ** (n + 1) != 0:
        raise HypothesisViolated(
            f"the ambient field has no p^{n + 1}-th roots of unity")
    if logs_list is None:
        logs_list = [semilocal_logs(u) for u in theta]
    memo: dict = {}

    def entry(terms, t):
        key = (tuple(terms), t)
        if key not in memo:
            vals = _bracket_translates(terms, theta[t], logs_list[t], group, n)
            memo[key] = GroupRingElem.from_dict(
                group, {group.inv(g): v for g, v in vals.items()})
        return memo[key]

    total = GroupRingElem.zero(group)
    for coeff, factors in eta.parts:
        mat = [[entry(terms, t) for t in range(eta.degree)] for terms in factors]
        det = _group_det(mat, group)
        total = total + det.scale(rational_to_modpn(Fraction(coeff), p, n + 1))
    return total


# ---------------------------------------------------------------------------
# the cyclotomic solutions of the unit-wedge equation


def _eta_terms_over_Q(spec: FieldSpec, s_primes) -> tuple:
    """Monomial data of the conductor-level unit: the norm to the field of
    (1 - xi)(1 - xi^-1), adjusted by one Euler translate per place of the
    set that is unramified in the field.

    The norm runs over a transversal of the +-1 classes of the subgroup
    fixing the field, so each class contributes a conjugate pair once."""
    f0 = conductor(spec)
    image = sorted({h % f0 for h in spec.gamma_group.hset})
    transversal = []
    seen: set[int] = set()
    for h in image:
        if (f0 - h) % f0 in seen:
            continue
        seen.add(h)
        transversal.append(h)
    terms: list[tuple[int, int, int]] = []
    for h in transversal:
        terms.append((f0, h, 1))
        terms.append((f0, (-h) % f0, 1))
    out = tuple(terms)
    for q in sorted(set(s_primes) - set(ramified_primes(spec))):
        out = _euler_adjust_terms(out, q)
    return out


def _prime_vector(r: Fraction) -> dict[int, int]:
    """Prime valuations of a nonzero rational."""
    out: dict[int, int] = {}
    for ell, e in factorint(r.numerator).items():
        if ell > 0:
            out[ell] = out.get(ell, 0) + e
    for ell, e in factorint(r.denominator).items():
        out[ell] = out.get(ell, 0) - e
    return {ell: e for ell, e in out.items() if e}


def _monomial_norm(terms, exps) -> Fraction:
    """The exact product over the exponent set of all translates of the
    monomial, which must come out rational."""
    levels = {f0 for f0, _, _ in terms}
    assert len(levels) == 1
    f0 = levels.pop()
    one = CyclotomicNumber.one(f0)
    num, den = one, one
    for b in exps:
        for _, a, e in terms:
            z = one - CyclotomicNumber.root_of_unity(f0, (a * b) % f0)
            if e > 0:
                num = num * z ** e
            elif e < 0:
                den = den * z ** (-e)
    return (num / den).as_rational()


def eigenspace_profile(spec_Q: FieldSpec, s_primes, parts) -> dict[int, list]:
    """For each finite place, the exact rational decomposition-group norms
    of every degree-one part, as (coefficient, norm) rows."""
    out: dict[int, list] = {}
    for q in sorted(s_primes):
        dbar = _decomposition_in_gbar(spec_Q, q)
        rows = []
        for coeff, factors in parts:
            assert len(factors) == 1
            rows.append((coeff, _monomial_norm(factors[0], dbar.elements)))
        out[q] = rows
    return out


def check_eigenspace(spec_Q: FieldSpec, s_primes, parts, size: int) -> dict:
    """Verify the degree-one eigenspace condition through the rational
    norms: every decomposition norm must be rational (enforced by the exact
    arithmetic), and when the place set is larger than two the parts must
    cancel place by place in the rational unit lattice."""
    profile = eigenspace_profile(spec_Q, s_primes, parts)
    if size > 2:
        for q, rows in profile.items():
            net: dict[int, Fraction] = {}
            for coeff, r in rows:
                for ell, v in _prime_vector(r).items():
                    net[ell] = net.get(ell, Fraction(0)) + Fraction(coeff) * v
            assert not any(net.values()), (
                f"decomposition norm at {q} is not torsion: {net}")
    return profile


def alpha_solution(spec: FieldSpec, S: PlaceSet, p: int) -> WedgeUnits:
    """The degree-one rational combination of subfield unit norms whose
    translates wedge to the full solution, one part per translate of each
    rational character class of the inertia at the places missing from S."""
    s_rational = s_Q_part(spec, S)
    if PlaceSet.above_rational_primes(spec, s_rational) != S:
        raise HypothesisViolated(
            "the place set must consist of all places over a set of rationals")
    S_Q = PlaceSet(True, frozenset((q, 1) for q in s_rational))
    gamma = spec.gamma_group
    A = bad_set_inertia(spec, S_Q)
    if A.order % p == 0:
        raise HypothesisViolated(
            "p divides the inertia order at the places missing from S")
    parts: list[tuple[Fraction, tuple]] = []
    for orbit in rational_character_orbits(A):
        chi = orbit[0]
        ker = sorted(chi.kernel_reps())
        sub = FieldSpec.make(spec.f, tuple(spec.h_gens) + tuple(ker))
        s_a = set(s_rational) | set(ramified_primes(sub))
        terms = _eta_terms_over_Q(sub, s_a)
        e_a = _orbit_idempotent(gamma, orbit)
        for g, r_g in e_a.as_dict().items():
            coeff = Fraction(-1, 2) * Fraction(r_g) / len(ker)
            parts.append((coeff, (_translate_terms(terms, g),)))
    alpha = WedgeUnits(1, tuple(parts))
    _check_unit_support(alpha, set(s_rational))
    spec_Q = FieldSpec.make(spec.f, spec.h_gens)
    check_eigenspace(spec_Q, s_rational, alpha.parts, 1 + len(s_rational))
    return alpha


def _check_unit_support(eta: WedgeUnits, s_primes: set) -> None:
    """Structural place-support check: a prime-power-level factor is only a
    unit away from that prime, so the prime must be in the set; factors of
    composite level are global units by the norm relations."""
    for _, factors in eta.parts:
        for terms in factors:
            for f0, a, _ in eta_levels_normalized(terms):
                facs = factorint(f0)
                if len(facs) == 1:
                    q = next(iter(facs))
                    assert q in s_primes, (
                        f"factor at prime-power level {f0} needs {q} in the set")


def eta_levels_normalized(terms):
    for f0, a, e in terms:
        a0 = a % f0
        g = gcd(a0, f0)
        yield f0 // g, a0 // g, e


def rubin_stark_eta(spec: FieldSpec, S: PlaceSet, p: int) -> WedgeUnits:
    """The cyclotomic solution of the unit-wedge equation for the field and
    place set: over the rationals a single scaled conjugate-pair monomial;
    over a real quadratic base the wedge of coset translates of the
    degree-one combination."""
    d = spec.degree_k
    if d == 1:
        if not spec.is_cm:
            raise NotCM(f"{spec} is not CM")
        s_primes = set(S.rational_primes())
        terms = _eta_terms_over_Q(spec, s_primes)
        eta = WedgeUnits(1, ((Fraction(-1, 2), (terms,)),))
        _check_unit_support(eta, s_primes)
        check_eigenspace(FieldSpec.make(spec.f, spec.h_gens), s_primes,
                         eta.parts, S.size(spec))
        return eta
    spec.require_cm_over_totally_real()
    if d != 2:
        raise HypothesisViolated(
            "only rational or real quadratic base fields are supported")
    alpha = alpha_solution(spec, S, p)
    gammas = gamma_transversal(spec)
    parts = []
    for combo in itertools.product(alpha.parts, repeat=d):
        coeff = Fraction(1)
        factors = []
        for (rho, fac), gi in zip(combo, gammas):
            coeff *= rho
            factors.append(_translate_terms(fac[0], pow(gi, -1, spec.f)))
        parts.append((coeff, tuple(factors)))
    return WedgeUnits(d, tuple(parts))


# ---------------------------------------------------------------------------
# the map itself


@dataclass(frozen=True)
class SMapValue:
    """A group-ring value p^(-shift) * elem with coefficients mod p^N."""

    elem: GroupRingElem
    shift: int

    def margins(self) -> dict[int, int]:
        """p-valuation minus shift per coefficient; coefficients vanishing
        at working precision report the window bound."""
        out = {}
        for g, c in self.elem.as_dict().items():
            v = c.valuation()
            out[g] = (c.N if v is None else v) - self.shift
        return out

    def window(self) -> int:
        """Digits past the shift certified by the model."""
        return min(c.N for _, c in self.elem.coeffs) - self.shift

    def reduced(self, digits: int) -> GroupRingElem:
        """Divide out the shift exactly and reduce mod p^digits; raises
        NonIntegral if some coefficient is not divisible by p^shift."""
        d = {g: c.divide_exact_by_p_power(self.shift).reduce_to(digits)
             for g, c in self.elem.as_dict().items()}
        return GroupRingElem.from_dict(self.elem.group, d)


def _vp_int(x: int, p: int) -> int:
    v = 0
    while x % p == 0 and x:
        x //= p
        v += 1
    return v


def _sQ_placeset(spec: FieldSpec, S: PlaceSet) -> PlaceSet:
    s_rational = s_Q_part(spec, S)
    if PlaceSet.above_rational_primes(spec, s_rational) != S:
        raise HypothesisViolated(
            "the place set must consist of all places over a set of rationals")
    return PlaceSet(True, frozenset((q, 1) for q in s_rational))


@lru_cache(maxsize=None)
def minus_lattice_data(spec: FieldSpec, S: PlaceSet, p: int) -> tuple[GroupRingElem, int]:
    """The starred minus L-element over Gal(K/k), and the power of p needed
    to clear the p-part of its denominators."""
    if spec.degree_k == 1:
        elem = a_minus(spec, S).elem.star()
    else:
        elem = a_minus_relative(spec, _sQ_placeset(spec, S)).elem
    t = 0
    for _, c in elem.coeffs:
        fracs = c.coeffs if isinstance(c, CyclotomicNumber) else (Fraction(c),)
        for fr in fracs:
            t = max(t, _vp_int(fr.denominator, p))
    return elem, t


def _scaled_coefficient(c, t: int, p: int) -> CyclotomicNumber:
    scale = p ** t
    if isinstance(c, CyclotomicNumber):
        return c.scale(scale)
    return CyclotomicNumber.from_rational(1, Fraction(c) * scale)


def _s_map_fast(spec: FieldSpec, S: PlaceSet, st: SemilocalStructure,
                logs, t: int) -> dict[int, ModPN]:
    """Conductor-level route over the rationals: the L-element is the sum of
    the translates of one exact generator, so each coefficient of the map is
    a sum over the primes above p of traces against the translated logs."""
    f = spec.f
    p = st.p
    gamma = spec.gamma_group
    xi = CyclotomicNumber.root_of_unity(f)
    w = xi / (CyclotomicNumber.one(f) - xi)
    v = (w - w.galois(f - 1)).scale(Fraction(1, 2 * f))
    for q in sorted(set(S.rational_primes()) - set(ramified_primes(spec))):
        # the twist sigma_{1/q} on the generator realizes the group-ring
        # Euler multiplier (1 - sigma_q / q) carried by the L-element
        v = v - v.galois(pow(q, -1, f)).scale(Fraction(1, q))
    v = v.scale(p ** t)
    V = {c: iota_P(v, c, st) for c in st.reps}
    out = {}
    for g in gamma.elements:
        lg = _translated_logs(st, logs, gamma.inv(g))
        acc = None
        for c in st.reps:
            term = trace_to_Qp(V[c] * lg[c])
            acc = term if acc is None else acc + term
        out[g] = acc
    return out


def _s_map_general(spec: FieldSpec, theta, st: SemilocalStructure, gammas,
                   logs_list, elem: GroupRingElem, t: int) -> dict[int, ModPN]:
    """Embedded-product route: embed the p^t-cleared L-element coefficients,
    multiply by the logarithmic determinant in the model group ring, and
    read off the constant coordinates (rationality makes every coefficient
    a constant vector, asserted exactly at working precision)."""
    G = spec.G
    reg = regulator(theta, G, gammas, logs_list)
    emb = GroupRingElem.from_dict(
        G, {g: iota_P(_scaled_coefficient(c, t, st.p), 1, st)
            for g, c in elem.as_dict().items()})
    product = emb * reg
    zero = LocalElement.zero(st.local)
    return {g: product.coefficient(g, zero).constant_coordinate()
            for g in G.elements}


def s_map(spec: FieldSpec, S: PlaceSet, theta, st: SemilocalStructure,
          gammas=None, logs_list=None) -> SMapValue:
    """The image of the unit tuple: the p-adic embedding of the starred
    minus L-element times the logarithmic determinant of the units.

    Over the rationals at conductor level the equivariant-generator route
    is used; otherwise the embedded group-ring product."""
    d = spec.degree_k
    if len(theta) != d:
        raise ValueError(f"expected {d} units, got {len(theta)}")
    if gammas is None:
        gammas = gamma_transversal(spec)
    elem, t = minus_lattice_data(spec, S, st.p)
    if logs_list is None:
        logs_list = [semilocal_logs(u) for u in theta]
    if d == 1 and spec.gamma_group.hset == frozenset({1}):
        coeffs = _s_map_fast(spec, S, st, logs_list[0], t)
    else:
        coeffs = _s_map_general(spec, theta, st, gammas, logs_list, elem, t)
    return SMapValue(GroupRingElem.from_dict(spec.G, coeffs), t)


def project_to_subfield(x: GroupRingElem, target: AbelianGroup) -> GroupRingElem:
    """The coefficientwise projection along restriction of the Galois action
    to a lower level: coefficients are summed over the fibers of exponent
    reduction modulo the target level."""
    assert x.group.f % target.f == 0
    pools: dict = {}
    for a, c in x.coeffs:
        key = target.rep(a % target.f)
        pools[key] = _coeff_add(pools[key], c) if key in pools else c
    return GroupRingElem.from_dict(target, pools)


# ---------------------------------------------------------------------------
# coordinates over the subgroup ring and the base-change matrices


def gamma_basis_coords(x: GroupRingElem, G: AbelianGroup, gammas) -> list[GroupRingElem]:
    """Coordinates of x in the free basis {gamma_i^-1} of its group ring
    over the subgroup ring: x = sum_i coords[i] * gamma_i^-1."""
    big = x.group
    pools: list[dict] = [dict() for _ in gammas]
    for a, coeff in x.coeffs:
        for i, gi in enumerate(gammas):
            g = big.mul(a, gi)
            if G.contains(g):
                pools[i][G.rep(g)] = coeff
                break
        else:
            raise ValueError("element outside the chosen coset representatives")
    return [GroupRingElem.from_dict(G, pool) for pool in pools]


@dataclass(frozen=True)
class BaseChangeData:
    """Both routes to the degree-two value: the matrix of degree-one map
    values in the coset basis (det equals the direct map value up to the
    p-shift) and the matrix of degree-one pairing values (det equals the
    kappa-normalized pairing)."""

    c_matrix: tuple
    det_c: GroupRingElem
    shift: int          # per-entry p-shift; det_c carries degree * shift
    d_matrix: tuple
    det_d: GroupRingElem
    kappa: ModPN
    gammas: tuple


def base_change_matrices(spec: FieldSpec, S: PlaceSet, theta, n: int,
                         st: SemilocalStructure, gammas=None,
                         logs_list=None) -> BaseChangeData:
    """Assemble the coset-coordinate matrices of the degree-one data over
    the rationals whose determinants recover the degree-two map value and
    pairing value for the quadratic base field."""
    d = spec.degree_k
    if d != 2:
        raise HypothesisViolated("base-change matrices need a quadratic base")
    G = spec.G
    gamma = spec.gamma_group
    p = st.p
    if gammas is None:
        gammas = gamma_transversal(spec)
    if logs_list is None:
        logs_list = [semilocal_logs(u) for u in theta]
    S_Q = _sQ_placeset(spec, S)
    s_rational = tuple(sorted(S_Q.rational_primes()))
    A = bad_set_inertia(spec, S_Q)
    if A.order % p == 0:
        raise HypothesisViolated(
            "p divides the inertia order at the places missing from S")

    # one degree-one map value per character class and unit, all over Q
    orbit_data = []
    for orbit in rational_character_orbits(A):
        chi = orbit[0]
        ker = sorted(chi.kernel_reps())
        sub = FieldSpec.make(spec.f, tuple(spec.h_gens) + tuple(ker))
        s_a = PlaceSet(True, frozenset(
            (q, 1) for q in set(s_rational) | set(ramified_primes(sub))))
        e_a = _orbit_idempotent(gamma, orbit)
        orbit_data.append((orbit, ker, sub, s_a, e_a))

    columns = []
    shifts = []
    for l, u in enumerate(theta):
        pieces = []
        for _, ker, sub, s_a, e_a in orbit_data:
            v = semilocal_norm(u, sub)
            sv = s_map(sub, s_a, (v,), st)
            lifted = corestrict_nu(sv.elem, gamma).scale(Fraction(1, len(ker)))
            pieces.append((e_a * lifted, sv.shift))
        t_star = max(sh for _, sh in pieces)
        total = GroupRingElem.zero(gamma)
        for x, sh in pieces:
            total = total + (x.scale(p ** (t_star - sh)) if t_star > sh else x)
        columns.append(gamma_basis_coords(total, G, gammas))
        shifts.append(t_star)
    shift = max(shifts)
    c_matrix = tuple(
        tuple(columns[l][i].scale(p ** (shift - shifts[l]))
              if shift > shifts[l] else columns[l][i]
              for l in range(d))
        for i in range(d))
    det_c = _group_det([list(row) for row in c_matrix], G)

    alpha = alpha_solution(spec, S, p)
    spec_Q = FieldSpec.make(spec.f, spec.h_gens)
    d_columns = [
        gamma_basis_coords(
            H_pairing(alpha, (theta[l],), n, spec_Q.gamma_group, [logs_list[l]]),
            G, gammas)
        for l in range(d)
    ]
    d_matrix = tuple(tuple(d_columns[l][i] for l in range(d)) for i in range(d))
    det_d = _group_det([list(row) for row in d_matrix], G)
    kappa = kappa_n(gamma, prod(gammas) % spec.f, p, n)
    return BaseChangeData(c_matrix, det_c, shift * d, d_matrix, det_d, kappa,
                          tuple(gammas))


# ---------------------------------------------------------------------------
# verification drivers


@dataclass(frozen=True)
class Trial:
    seed: int
    lhs: tuple
    rhs: tuple
    equal: bool


@dataclass(frozen=True)
class VerificationReport:
    case: dict
    suite: str
    trials: tuple
    verdict: str  # "pass" | "fail"
    precision: int
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == "pass"


def _case_dict(spec: FieldSpec, S: PlaceSet, p: int, samples: int,
               seed0: int, guard: int, **extra) -> dict:
    case = {
        "f": spec.f,
        "h_gens": list(spec.h_gens),
        "hp_gens": None if spec.hp_gens is None else list(spec.hp_gens),
        "p": p,
        "s_primes": sorted(S.rational_primes()),
        "samples": samples,
        "seed": seed0,
        "guard": guard,
    }
    case.update(extra)
    return case


def _require_standard_hypotheses(spec: FieldSpec, S: PlaceSet, p: int) -> PlaceSet:
    if p == 2:
        raise HypothesisViolated("p must be odd")
    if spec.degree_k == 1:
        if not spec.is_cm:
            raise NotCM(f"{spec} is not CM")
    else:
        spec.require_cm_over_totally_real()
    s1 = s1_places(spec, p)
    if S is None:
        S = s1
    if not S.includes_infinity or not set(s1.finite) <= set(S.finite):
        raise BadPlaceSet(
            "S must contain the infinite places, the places above p and the ramified places")
    check_hypothesis_bad_ramification(spec, S, p)
    return S


def _sample_units(spec: FieldSpec, p: int, seed: int, prec: int) -> tuple:
    d = spec.degree_k
    if d == 1:
        return (sample_minus_unit(spec, p, seed, prec),)
    return tuple(sample_minus_unit(spec, p, f"{seed}:{l}", prec)
                 for l in range(d))


def _coeff_row(x: GroupRingElem, group: AbelianGroup, zero) -> tuple:
    return tuple(int(x.coefficient(g, zero).value) for g in group.elements)


def _group_ring_eq(a: GroupRingElem, b: GroupRingElem, p: int, digits: int) -> bool:
    zero = ModPN(p, digits, 0)
    return all(
        a.coefficient(g, zero).eq_mod(b.coefficient(g, zero), digits)
        for g in a.group.elements)


def cc_check(spec: FieldSpec, p: int, n: int, S: PlaceSet | None = None,
             samples: int = 20, guard: int = 8, seed0: int = 0) -> VerificationReport:
    """Congruence verdict: for seeded unit samples, reduce the map value mod
    p^(n+1) and compare with the kappa-normalized pairing against the
    cyclotomic solution, coefficient by coefficient."""
    S = _require_standard_hypotheses(spec, S, p)
    pn1 = p ** (n + 1)
    if spec.f % pn1 != 0 or any(h % pn1 != 1 for h in spec.gamma_group.hset):
        raise HypothesisViolated(
            f"the field does not contain the p^{n + 1}-th roots of unity")
    gammas = gamma_transversal(spec)
    kappa = kappa_n(spec.gamma_group, prod(gammas) % spec.f, p, n)
    _, t = minus_lattice_data(spec, S, p)
    N = (n + 1) + guard + t
    st = semilocal_structure(spec.f, p, N)
    eta = rubin_stark_eta(spec, S, p)
    G = spec.G
    zero = ModPN(p, n + 1, 0)
    trials = []
    for i in range(samples):
        seed = seed0 + i
        theta = _sample_units(spec, p, seed, N)
        logs_list = [semilocal_logs(u) for u in theta]
        sv = s_map(spec, S, theta, st, gammas, logs_list)
        rhs = H_pairing(eta, theta, n, G, logs_list).scale(kappa)
        try:
            lhs = sv.reduced(n + 1)
            equal = _group_ring_eq(lhs, rhs, p, n + 1)
            lhs_row = _coeff_row(lhs, G, zero)
        except NonIntegral:
            equal = False
            lhs_row = tuple(-1 for _ in G.elements)
        trials.append(Trial(seed, (lhs_row,), (_coeff_row(rhs, G, zero),), equal))
    verdict = "pass" if all(tr.equal for tr in trials) else "fail"
    return VerificationReport(
        case=_case_dict(spec, S, p, samples, seed0, guard, n=n),
        suite="cc",
        trials=tuple(trials),
        verdict=verdict,
        precision=n + 1,
        details={
            "shift": t,
            "model_digits": N,
            "kappa": int(kappa.value),
            "gammas": list(gammas),
            "group_elements": list(G.elements),
            "eta_parts": len(eta.parts),
        },
    )


def ic_check(spec: FieldSpec, p: int, S: PlaceSet | None = None,
             samples: int = 50, guard: int = 8, seed0: int = 0) -> VerificationReport:
    """Integrality verdict: every coefficient of the map value must have
    p-valuation at least the shift, certified within the guard window."""
    if guard < 2:
        raise ValueError("need at least two guard digits for the margin")
    S = _require_standard_hypotheses(spec, S, p)
    gammas = gamma_transversal(spec)
    _, t = minus_lattice_data(spec, S, p)
    N = guard + t
    st = semilocal_structure(spec.f, p, N)
    G = spec.G
    trials = []
    for i in range(samples):
        seed = seed0 + i
        theta = _sample_units(spec, p, seed, N)
        sv = s_map(spec, S, theta, st, gammas)
        margins = sv.margins()
        row = tuple(margins[g] for g in G.elements)
        trials.append(Trial(seed, (row,), ((0,) * len(row),),
                            all(m >= 0 for m in row)))
    verdict = "pass" if all(tr.equal for tr in trials) else "fail"
    return VerificationReport(
        case=_case_dict(spec, S, p, samples, seed0, guard),
        suite="ic",
        trials=tuple(trials),
        verdict=verdict,
        precision=guard,
        details={
            "shift": t,
            "model_digits": N,
            "window": guard,
            "group_elements": list(G.elements),
        },
    )


def character_valuation(sv: SMapValue, chi) -> int | None:
    """v_p of the character applied to the map value, or None when it is
    zero to working precision (valuation at least the window)."""
    torder = chi.order
    p = sv.elem.coeffs[0][1].p
    n_min = min(c.N for _, c in sv.elem.coeffs)
    model = build_local(p, torder, -1, n_min)
    q = p ** n_min
    acc = [0] * model.dim
    for g, c in sv.elem.as_dict().items():
        k = chi.value_exponent(g) * torder
        assert k.denominator == 1
        vec = model.xi_vec(int(k) % torder)
        mult = c.value % q
        if not mult:
            continue
        for i, comp in enumerate(vec):
            if comp:
                acc[i] = (acc[i] + mult * comp) % q
    x = LocalElement(model, tuple(acc), n_min)
    v = x.valuation()
    return None if v is None else v - sv.shift


def pndivg_check(spec: FieldSpec, p: int, S: PlaceSet | None = None,
                 samples: int = 50, guard: int = 8, seed0: int = 0) -> VerificationReport:
    """Valuation verdict when p does not divide the group order: for every
    odd character, the valuation of its value on the map image must be at
    least the predicted one, with equality attained by some sample."""
    S = _require_standard_hypotheses(spec, S, p)
    if spec.degree_k != 1:
        raise HypothesisViolated("the valuation comparison is over the rationals")
    gamma = spec.gamma_group
    odd_chars = [chi for chi in characters(gamma) if chi.is_odd()]
    rhs_vals = [pndivg_rhs(spec, S, p, chi).valuation for chi in odd_chars]
    _, t = minus_lattice_data(spec, S, p)
    N = guard + t + max([0] + rhs_vals)
    st = semilocal_structure(spec.f, p, N)
    window = N - t
    attained = [False] * len(odd_chars)
    trials = []
    for i in range(samples):
        seed = seed0 + i
        theta = _sample_units(spec, p, seed, N)
        sv = s_map(spec, S, theta, st)
        row = []
        ok = True
        for j, chi in enumerate(odd_chars):
            v = character_valuation(sv, chi)
            if v is None:
                if window <= rhs_vals[j]:
                    raise InsufficientPrecision(
                        f"window {window} cannot separate valuation {rhs_vals[j]}")
                row.append(window)
            else:
                row.append(v)
                if v == rhs_vals[j]:
                    attained[j] = True
            ok = ok and row[-1] >= rhs_vals[j]
        trials.append(Trial(seed, (tuple(row),), (tuple(rhs_vals),), ok))
    verdict = ("pass" if all(tr.equal for tr in trials) and all(attained)
               else "fail")
    return VerificationReport(
        case=_case_dict(spec, S, p, samples, seed0, guard),
        suite="pndivg",
        trials=tuple(trials),
        verdict=verdict,
        precision=window,
        details={
            "shift": t,
            "model_digits": N,
            "characters": [
                {"order": chi.order, "rhs": rhs_vals[j], "attained": attained[j]}
                for j, chi in enumerate(odd_chars)
            ],
        },
    )
