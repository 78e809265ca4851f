"""Exact rational feasibility for convex-majorization queries.

The single LP shape used everywhere: given generator vectors g_i and a
target e over the same state set, decide whether some convex combination
of the generators is pointwise below e.  Solved as

    max sum(lambda)  s.t.  A lambda <= e,  lambda >= 0

which is feasible for the query iff the optimum reaches 1 (scaling down a
larger sum stays below e because e >= 0).  Runs a dense primal simplex with
Bland's rule over Fractions; no tolerances.

Certificates: a positive answer returns the convex weights; a negative
answer returns separating state weights w >= 0 with
``w . e < min_i w . g_i`` (checkable in extended arithmetic, including the
generators excluded for carrying an infinite entry at a constrained state).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .scalars import Scalar, ZERO, is_inf

counters = {"lp_solves": 0, "member_queries": 0}


@dataclass(frozen=True)
class CoverResult:
    member: bool
    weights: Optional[Tuple[Fraction, ...]] = None   # per generator, sums to 1
    witness: Optional[Tuple[Fraction, ...]] = None   # per state, nonnegative


def check_cover(
    gens: Sequence[Sequence[Scalar]], target: Sequence[Scalar], weights: Sequence[Fraction]
) -> bool:
    """Verify a membership certificate by direct extended arithmetic."""
    if len(weights) != len(gens):
        return False
    if any(w < 0 for w in weights) or sum(weights) != 1:
        return False
    for x in range(len(target)):
        total: Scalar = ZERO
        for g, w in zip(gens, weights):
            if w:
                total = total + g[x] * w
        if not total <= target[x]:
            return False
    return True


def check_separation(
    gens: Sequence[Sequence[Scalar]], target: Sequence[Scalar], witness: Sequence[Fraction]
) -> bool:
    """Verify a non-membership certificate: w.e < min_i w.g_i."""
    if len(witness) != len(target) or any(w < 0 for w in witness):
        return False
    we: Scalar = ZERO
    for w, e in zip(witness, target):
        if w:
            we = we + e * w
    for g in gens:
        wg: Scalar = ZERO
        for w, gx in zip(witness, g):
            if w:
                wg = wg + gx * w
        if not we < wg:
            return False
    return True


def convex_cover(gens: Sequence[Sequence[Scalar]], target: Sequence[Scalar]) -> CoverResult:
    """Decide whether target dominates a convex combination of gens."""
    counters["member_queries"] += 1
    n_states = len(target)
    n_gens = len(gens)
    if n_gens == 0:
        raise ValueError("no generators")

    constrained = [x for x in range(n_states) if not is_inf(target[x])]
    if not constrained:
        weights = [Fraction(0)] * n_gens
        weights[0] = Fraction(1)
        return _verified(gens, target, CoverResult(True, weights=tuple(weights)))

    included: List[int] = []
    inf_state_of = {}
    for i, g in enumerate(gens):
        bad = next((x for x in constrained if is_inf(g[x])), None)
        if bad is None:
            included.append(i)
        else:
            inf_state_of[i] = bad

    if not included:
        witness = [Fraction(0)] * n_states
        for x in inf_state_of.values():
            witness[x] = Fraction(1)
        return _verified(gens, target, CoverResult(False, witness=tuple(witness)))

    # Fast path: a single included generator below target pointwise.
    for i in included:
        if all(gens[i][x] <= target[x] for x in constrained):
            weights = [Fraction(0)] * n_gens
            weights[i] = Fraction(1)
            return _verified(gens, target, CoverResult(True, weights=tuple(weights)))

    # Deduplicate identical constraint rows and drop vacuous all-zero rows.
    row_map = {}
    rows: List[Tuple[Tuple[Fraction, ...], Fraction]] = []
    row_state: List[int] = []
    for x in constrained:
        coeffs = tuple(Fraction(gens[i][x]) for i in included)
        rhs = Fraction(target[x])
        if all(c == 0 for c in coeffs):
            continue
        key = (coeffs, rhs)
        if key not in row_map:
            row_map[key] = len(rows)
            rows.append(key)
            row_state.append(x)

    if not rows:
        # Every constrained row is vacuous: any single generator works.
        weights = [Fraction(0)] * n_gens
        weights[included[0]] = Fraction(1)
        return _verified(gens, target, CoverResult(True, weights=tuple(weights)))

    lam, dual = _simplex_max_sum([r[0] for r in rows], [r[1] for r in rows])

    if lam is not None:
        weights = [Fraction(0)] * n_gens
        for pos, i in enumerate(included):
            weights[i] = lam[pos]
        return _verified(gens, target, CoverResult(True, weights=tuple(weights)))

    w_rows, sigma = dual
    witness = [Fraction(0)] * n_states
    for pos, x in enumerate(row_state):
        witness[x] = w_rows[pos]
    if inf_state_of:
        bump_states = sorted(set(inf_state_of.values()))
        bound = sum(Fraction(target[x]) for x in bump_states)
        eps = (Fraction(1) - sigma) / (2 * (bound + 1))
        for x in bump_states:
            witness[x] += eps
    return _verified(gens, target, CoverResult(False, witness=tuple(witness)))


def _verified(gens, target, result: CoverResult) -> CoverResult:
    """Every answer leaves this module with its certificate re-checked."""
    if result.member:
        ok = check_cover(gens, target, result.weights)
    else:
        ok = check_separation(gens, target, result.witness)
    if not ok:
        raise RuntimeError("internal error: LP certificate failed verification")
    return result


def _simplex_max_sum(
    matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> Tuple[Optional[List[Fraction]], Optional[Tuple[List[Fraction], Fraction]]]:
    """max 1.lam s.t. matrix lam <= rhs, lam >= 0, with rhs >= 0.

    Returns (weights, None) with weights summing to exactly 1 when the
    optimum reaches 1 (possibly via an unbounded ray), otherwise
    (None, (dual_weights, optimum)).
    """
    counters["lp_solves"] += 1
    m = len(matrix)
    k = len(matrix[0])
    one = Fraction(1)
    zero = Fraction(0)

    tab = [list(matrix[r]) + [zero] * m + [rhs[r]] for r in range(m)]
    for r in range(m):
        tab[r][k + r] = one
    obj = [one] * k + [zero] * m
    z = zero
    basis = list(range(k, k + m))

    def current_lambda() -> List[Fraction]:
        lam = [zero] * k
        for r, b in enumerate(basis):
            if b < k:
                lam[b] = tab[r][-1]
        return lam

    while True:
        if z >= 1:
            lam = current_lambda()
            if z > 1:
                lam = [v / z for v in lam]
            return lam, None

        enter = next((j for j in range(k + m) if obj[j] > 0), None)
        if enter is None:
            dual = [-obj[k + r] for r in range(m)]
            return None, (dual, z)

        best_ratio = None
        pivot_row = None
        for r in range(m):
            coeff = tab[r][enter]
            if coeff > 0:
                ratio = tab[r][-1] / coeff
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[r] < basis[pivot_row]
                ):
                    best_ratio = ratio
                    pivot_row = r

        if pivot_row is None:
            # Unbounded: follow the ray until the weight sum reaches 1.
            lam = current_lambda()
            direction = [zero] * k
            if enter < k:
                direction[enter] = one
            for r, b in enumerate(basis):
                if b < k:
                    direction[b] -= tab[r][enter]
            t = (one - z) / obj[enter]
            lam = [v + t * d for v, d in zip(lam, direction)]
            return lam, None

        _pivot(tab, obj, basis, pivot_row, enter)
        z = sum((tab[r][-1] for r, b in enumerate(basis) if b < k), zero)


def _pivot(tab, obj, basis, r, c):
    piv = tab[r][c]
    tab[r] = [v / piv for v in tab[r]]
    for r2 in range(len(tab)):
        if r2 != r and tab[r2][c]:
            factor = tab[r2][c]
            tab[r2] = [v - factor * w for v, w in zip(tab[r2], tab[r])]
    if obj[c]:
        factor = obj[c]
        for j in range(len(obj)):
            obj[j] -= factor * tab[r][j]
    basis[r] = c
