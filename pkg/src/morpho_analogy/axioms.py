"""Axiom-driven augmentation: equivalent valid forms and conflicting invalid forms."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import AnalogyQuadruple

log = logging.getLogger(__name__)

# index permutations of (A, B, C, D); identity first, then the seven
# forms reachable through symmetry and central permutation
VALID_PERMUTATIONS = (
    (0, 1, 2, 3),  # A:B::C:D
    (0, 2, 1, 3),  # A:C::B:D
    (3, 1, 2, 0),  # D:B::C:A
    (2, 0, 3, 1),  # C:A::D:B
    (2, 3, 0, 1),  # C:D::A:B
    (1, 0, 3, 2),  # B:A::D:C
    (3, 2, 1, 0),  # D:C::B:A
    (1, 3, 0, 2),  # B:D::A:C
)

# applied to a valid form a:b::c:d
INVALID_PERMUTATIONS = (
    (1, 0, 2, 3),  # b:a::c:d
    (2, 1, 0, 3),  # c:b::a:d
    (0, 0, 2, 3),  # a:a::c:d
)

N_VALID = 8
N_INVALID = 8


def _permute(q: AnalogyQuadruple, perm) -> AnalogyQuadruple:
    w = q.words
    return AnalogyQuadruple(*(w[i] for i in perm), q.feature)


def symmetry(q: AnalogyQuadruple) -> AnalogyQuadruple:
    return _permute(q, (2, 3, 0, 1))


def central_permutation(q: AnalogyQuadruple) -> AnalogyQuadruple:
    return _permute(q, (0, 2, 1, 3))


def valid_forms(q: AnalogyQuadruple) -> list[AnalogyQuadruple]:
    return [_permute(q, p) for p in VALID_PERMUTATIONS]


def invalid_forms(q: AnalogyQuadruple) -> list[AnalogyQuadruple]:
    """24 corruptions: each of the 3 rules applied to each of the 8 valid forms."""
    return [_permute(v, p) for v in valid_forms(q) for p in INVALID_PERMUTATIONS]


@dataclass(frozen=True)
class AugmentedBatch:
    valid: tuple[AnalogyQuadruple, ...]
    invalid: tuple[AnalogyQuadruple, ...]
    origin: AnalogyQuadruple
    degenerate: bool = False  # no invalid form survived the collision filter


def augment_for_classification(q: AnalogyQuadruple, rng: np.random.Generator) -> AugmentedBatch:
    valid = valid_forms(q)
    valid_words = {v.words for v in valid}
    survivors = list(dict.fromkeys(inv for inv in invalid_forms(q) if inv.words not in valid_words))
    if not survivors:
        log.warning("no invalid form of %s survives filtering; valid-only batch", q)
        return AugmentedBatch(tuple(valid), (), q, degenerate=True)
    if len(survivors) >= N_INVALID:
        picked = [survivors[i] for i in rng.choice(len(survivors), N_INVALID, replace=False)]
    else:
        extra = rng.choice(len(survivors), N_INVALID - len(survivors), replace=True)
        picked = survivors + [survivors[i] for i in extra]
    return AugmentedBatch(tuple(valid), tuple(picked), q)


def augment_for_regression(q: AnalogyQuadruple) -> list[AnalogyQuadruple]:
    """The 8 equations ``a:b::c:x`` with gold ``x = d`` equivalent to ``q``."""
    return valid_forms(q)
