"""Exception types shared across the package.

Two families matter to callers:

* ``HypothesisRejection`` subclasses mean the *case* is outside the scope of
  the statements being verified (wrong field type, missing roots of unity,
  bad place set ...).  The CLI maps these to exit code 2.
* ``InsufficientPrecision`` means the computation could not decide an
  assertion with the required margin at the current working precision; the
  driver retries once with a larger guard before giving up (exit code 3).

Everything else signals a genuine bug or an unsupported input.
"""


class StarklabError(Exception):
    """Base class for all package-specific errors."""


class HypothesisRejection(StarklabError):
    """The input case violates a standing hypothesis; verification refused."""


# -- exact algebra ----------------------------------------------------------

class NonUnitResidue(StarklabError):
    """Tried to invert a residue that is divisible by p."""


class NotInSubfield(StarklabError):
    """Element does not lie in the requested cyclotomic subfield."""


# -- group rings and characters ---------------------------------------------

class NoComplexConjugation(HypothesisRejection):
    """The group has no distinguished complex conjugation (field not CM)."""


class CharacterUndefined(StarklabError):
    """The cyclotomic character mod p^(n+1) does not factor through this group."""


class EvenCharacter(StarklabError):
    """An odd character was required but an even one was supplied."""


# -- fields and places -------------------------------------------------------

class RamifiedPrime(StarklabError):
    """Frobenius requested at a prime that ramifies in the field."""


class BadPlaceSet(HypothesisRejection):
    """The place set violates the standing hypotheses for the map at hand."""


class NotCM(HypothesisRejection):
    """The upper field is not CM / the base field is not totally real."""


class HypothesisViolated(HypothesisRejection):
    """A case-specific standing hypothesis fails (stated in the message)."""


class PDividesGroupOrder(HypothesisRejection):
    """p divides |G| where the semisimple reformulation requires p coprime."""


# -- p-adic arithmetic --------------------------------------------------------

class PrecisionTooLow(StarklabError):
    """Requested an operation below the minimum representable precision."""


class NotPrincipalUnit(StarklabError):
    """Argument must be a principal unit (congruent to 1 mod the maximal ideal)."""


class NonIntegral(StarklabError):
    """A quantity that must be p-integral has negative valuation."""


class InsufficientPrecision(StarklabError):
    """An assertion would be decided with too little margin; raise the guard."""


class IntegralityFailure(StarklabError):
    """An exact-divisibility fact guaranteed by a theorem failed; internal bug."""


# -- reciprocity maps ---------------------------------------------------------

class UnsupportedFirstArgument(StarklabError):
    """Bracket first argument is not a supported cyclotomic S-unit product."""
