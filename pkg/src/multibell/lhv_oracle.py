"""Brute-force checks of the classical (local deterministic) side.

Everything here works directly with +-1 outcome tables and never touches
correlation tensors, so it serves as an independent oracle for ``bellineq``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bellineq import InequalitySpec, SignFunction, all_sign_functions, coefficients
from .errors import EnumerationSizeError, ValidationError

MAX_ENUMERATION_BITS = 24


@dataclass(frozen=True)
class DeterministicAssignment:
    """Pre-assigned outcomes, one tuple of +-1 values per party."""

    outcomes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        outs = tuple(tuple(int(v) for v in party) for party in self.outcomes)
        if any(v not in (1, -1) for party in outs for v in party):
            raise ValidationError("deterministic outcomes must be +1 or -1")
        object.__setattr__(self, "outcomes", outs)

    def correlations(self) -> np.ndarray:
        """E[k1, ..., kN] = product of the assigned outcomes."""
        e = np.ones(())
        for party in self.outcomes:
            e = np.multiply.outer(e, np.asarray(party, dtype=float))
        return e


def _all_outcomes(m: int) -> np.ndarray:
    """All 2^m outcome tables for m settings, shape (2^m, m)."""
    return np.array(list(itertools.product((1.0, -1.0), repeat=m)))


def lhv_value_of_product_tensor(assignment: DeterministicAssignment, spec: InequalitySpec) -> float:
    shape = tuple(len(p) for p in assignment.outcomes)
    if shape != spec.settings_per_party:
        raise ValidationError(f"assignment shape {shape} does not match {spec.settings_per_party}")
    w = coefficients(spec)
    return float(np.abs(w.reshape(w.shape[0], -1) @ assignment.correlations().ravel()).sum())


def classical_bound(spec: InequalitySpec, max_bits: int = MAX_ENUMERATION_BITS) -> float:
    """Maximum of the family's left-hand side over all deterministic assignments.

    The first party's outcome tables are looped over; for each, the remaining
    parties are contracted in one vectorised pass (one batch axis per party).
    """
    bits = spec.total_settings
    if bits > max_bits:
        raise EnumerationSizeError(
            f"{spec.family} with n={spec.n_parties} needs 2^{bits} assignments (limit 2^{max_bits})")
    w = coefficients(spec)
    tables = [_all_outcomes(m) for m in spec.settings_per_party]
    best = 0.0
    for first in tables[0]:
        # x: (batch..., rows, m_next, ...)
        x = np.tensordot(w, first, axes=([1], [0]))
        x = x[None]
        for tab in tables[1:]:
            # contract the first remaining setting axis (index 2) with every table
            x = np.tensordot(x, tab, axes=([2], [1]))
            x = np.moveaxis(x, -1, 1)
            x = x.reshape((-1,) + x.shape[2:])
        best = max(best, float(np.abs(x).sum(axis=1).max()))
    return float(round(best))


# --- algebraic identities of the 4x4x2 family -------------------------------

def _assignments_442() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All 2^10 assignments split into A (1024, 4), B (1024, 4), C (1024, 2)."""
    allv = _all_outcomes(10)
    return allv[:, :4], allv[:, 4:8], allv[:, 8:]


def pair_block(sp: SignFunction, x1, x2, y1, y2) -> np.ndarray:
    """sum_{s1,s2} S(s1,s2) (X1 + s1 X2)(Y1 + s2 Y2), elementwise over assignments."""
    return sum(sp(s1, s2) * (x1 + s1 * x2) * (y1 + s2 * y2)
               for s1, s2 in itertools.product((1, -1), repeat=2))


def identity_442_values(sp: SignFunction, spp: SignFunction, s: SignFunction) -> np.ndarray:
    """The generating three-party expression evaluated on all 2^10 assignments."""
    a, b, c = _assignments_442()
    a12 = pair_block(sp, a[:, 0], a[:, 1], b[:, 0], b[:, 1])
    a34 = pair_block(spp, a[:, 2], a[:, 3], b[:, 2], b[:, 3])
    return pair_block(s, a12, a34, c[:, 0], c[:, 1])


def verify_identity_442(sp: SignFunction, spp: SignFunction, s: SignFunction) -> bool:
    """True iff the generating expression equals +16 or -16 on every assignment."""
    return bool(np.all(np.abs(identity_442_values(sp, spp, s)) == 16))


def two_block_values(sp: SignFunction, spp: SignFunction) -> np.ndarray:
    """The non-factorable reduction: S'-block times (C1 + C2) plus S''-block times (C1 - C2)."""
    a, b, c = _assignments_442()
    return (pair_block(sp, a[:, 0], a[:, 1], b[:, 0], b[:, 1]) * (c[:, 0] + c[:, 1])
            + pair_block(spp, a[:, 2], a[:, 3], b[:, 2], b[:, 3]) * (c[:, 0] - c[:, 1]))


def verify_all_identities() -> bool:
    """Identity check over every canonical triple (S' and S'' up to global sign)."""
    signs = all_sign_functions()
    canon = [f for f in signs if f.values[0] == 1]
    a, b, c = _assignments_442()
    a12 = {f: pair_block(f, a[:, 0], a[:, 1], b[:, 0], b[:, 1]) for f in canon}
    a34 = {f: pair_block(f, a[:, 2], a[:, 3], b[:, 2], b[:, 3]) for f in canon}
    for sp, spp, s in itertools.product(canon, canon, signs):
        vals = pair_block(s, a12[sp], a34[spp], c[:, 0], c[:, 1])
        if not np.all(np.abs(vals) == 16):
            return False
    return True
