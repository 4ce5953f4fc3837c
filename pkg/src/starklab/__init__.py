"""Exact verification engine for integrality and congruence properties of a
p-adic Stark-type map on absolutely abelian fields.

Everything is computed with exact rational/cyclotomic arithmetic or
precision-tracked p-adic arithmetic; no floating point anywhere. The three
verification drivers (`ic_check`, `cc_check`, `pndivg_check`) return frozen
`VerificationReport` records; the same engines back the ``starklab`` command
line tool.
"""

from .errors import HypothesisRejection, StarklabError
from .fields import FieldSpec, PlaceSet
from .starkmap import (
    VerificationReport,
    base_change_matrices,
    cc_check,
    ic_check,
    pndivg_check,
    s_map,
)

__all__ = [
    "FieldSpec",
    "PlaceSet",
    "HypothesisRejection",
    "StarklabError",
    "VerificationReport",
    "base_change_matrices",
    "cc_check",
    "ic_check",
    "pndivg_check",
    "s_map",
]
