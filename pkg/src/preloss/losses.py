"""Loss functions: finitely generated upper-convex sets of predicates.

A loss function is represented by a nonempty list of generator predicates;
it denotes the upward convex closure of that list.  Equality and the
refinement order are semantic (decided by exact LP membership), never list
equality.  Refinement is reverse inclusion of denotations: E1 refines into
E2 when every generator of E2 lies in E1's closure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from . import lp
from .contexts import ContextError, VarContext
from .kernels import Transformer
from .predicates import Predicate
from .scalars import Scalar, scalar


@dataclass(frozen=True, eq=False)
class LossFunction:
    ctx: VarContext
    gens: Tuple[Predicate, ...]
    canonical: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.gens:
            raise ValueError("loss function needs at least one generator")
        for g in self.gens:
            if g.ctx != self.ctx:
                raise ContextError("generator context mismatch")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LossFunction):
            return NotImplemented
        return loss_equal(self, other)

    __hash__ = None  # semantic equality is incompatible with structural hashing

    def __repr__(self) -> str:
        return f"LossFunction({len(self.gens)} gens over {self.ctx.pretty() or 'empty'})"


def embed(e: Predicate) -> LossFunction:
    """The principal filter of a single predicate."""
    return LossFunction(e.ctx, (e,), canonical=True)


def zero_loss(ctx: VarContext) -> LossFunction:
    return embed(Predicate.zero(ctx))


def one_loss(ctx: VarContext) -> LossFunction:
    return embed(Predicate.ones(ctx))


def _require_same_ctx(a: LossFunction, b: LossFunction):
    if a.ctx != b.ctx:
        raise ContextError("loss function context mismatch")


def loss_member(e: Predicate, E: LossFunction) -> bool:
    return loss_member_certified(e, E).member


def loss_member_certified(e: Predicate, E: LossFunction) -> lp.CoverResult:
    """Exact membership of e in E's upper convex closure, with certificate."""
    if e.ctx != E.ctx:
        raise ContextError("membership query context mismatch")
    return lp.convex_cover([g.entries for g in E.gens], e.entries)


def loss_refines(E1: LossFunction, E2: LossFunction) -> bool:
    """E1 refines into E2 (reverse inclusion of closures)."""
    _require_same_ctx(E1, E2)
    return all(loss_member(g, E1) for g in E2.gens)


def loss_equal(E1: LossFunction, E2: LossFunction) -> bool:
    return loss_refines(E1, E2) and loss_refines(E2, E1)


def is_zero_loss(E: LossFunction) -> bool:
    """True iff E denotes the whole cone, i.e. contains the zero predicate."""
    if any(g.is_zero for g in E.gens):
        return True
    return loss_member(Predicate.zero(E.ctx), E)


def _prune(gens: Sequence[Predicate]) -> List[Predicate]:
    """Cheap reductions: exact duplicates and pointwise-dominated generators.

    A generator above another pointwise sits in the other's upward closure.
    """
    ordered = sorted(set(gens), key=Predicate.sort_token)
    kept: List[Predicate] = []
    for g in ordered:
        if any(h.le(g) for h in kept):
            continue
        kept = [h for h in kept if not g.le(h)]
        kept.append(g)
    return kept


def loss_canonicalize(E: LossFunction) -> LossFunction:
    """Irredundant generator list denoting the same set; idempotent."""
    if E.canonical:
        return E
    gens = _prune(E.gens)
    if len(gens) > 1:
        kept: List[Predicate] = []
        remaining = list(gens)
        for i, g in enumerate(remaining):
            others = kept + remaining[i + 1:]
            cover = lp.convex_cover([h.entries for h in others], g.entries)
            if not cover.member:
                kept.append(g)
        gens = kept
    return LossFunction(E.ctx, tuple(gens), canonical=True)


def loss_min(E1: LossFunction, E2: LossFunction) -> LossFunction:
    """Formal meet: closure of the union of generator lists."""
    _require_same_ctx(E1, E2)
    return loss_canonicalize(LossFunction(E1.ctx, E1.gens + E2.gens))


def loss_add(E1: LossFunction, E2: LossFunction) -> LossFunction:
    """Minkowski sum of the denoted sets, generator-wise."""
    _require_same_ctx(E1, E2)
    gens = tuple(g1 + g2 for g1 in E1.gens for g2 in E2.gens)
    return loss_canonicalize(LossFunction(E1.ctx, gens))


def loss_scale(r, E: LossFunction) -> LossFunction:
    r = scalar(r)
    return loss_canonicalize(LossFunction(E.ctx, tuple(g.scale(r) for g in E.gens)))


def loss_conj(e: Predicate, E: LossFunction) -> LossFunction:
    """Pointwise-product action of a predicate on a loss function."""
    if e.ctx != E.ctx:
        raise ContextError("conjunction context mismatch")
    return loss_canonicalize(LossFunction(E.ctx, tuple(e.conj(g) for g in E.gens)))


def loss_map(f: Transformer, E: LossFunction) -> LossFunction:
    """Apply a linear predicate transformer to every generator."""
    if f.dst != E.ctx:
        raise ContextError("transformer/loss context mismatch")
    images = {}
    gens = []
    for g in E.gens:
        if g not in images:
            images[g] = f.apply(g)
        gens.append(images[g])
    return loss_canonicalize(LossFunction(f.src, tuple(gens)))


def loss_extend(E: LossFunction, extra: VarContext) -> LossFunction:
    return LossFunction(
        E.ctx.merge(extra), tuple(g.extend(extra) for g in E.gens), canonical=E.canonical
    )


def eval_loss(E: LossFunction, dist: Sequence[Fraction]) -> Scalar:
    """Minimum expected value over the generators at a sub-distribution."""
    _check_subdist(E.ctx, dist)
    best: Optional[Scalar] = None
    for g in E.gens:
        v = g.expectation(dist)
        if best is None or v < best:
            best = v
    return best


def _check_subdist(ctx: VarContext, dist: Sequence[Fraction]):
    if len(dist) != ctx.n_states:
        raise ContextError("distribution length mismatch")
    total = Fraction(0)
    for w in dist:
        if w < 0:
            raise ValueError("distribution weights must be nonnegative")
        total += w
    if total > 1:
        raise ValueError(f"distribution mass {total} exceeds 1")


def uniform_dist(ctx: VarContext) -> Tuple[Fraction, ...]:
    n = ctx.n_states
    return tuple(Fraction(1, n) for _ in range(n))


def point_dist(ctx: VarContext, state) -> Tuple[Fraction, ...]:
    dist = [Fraction(0)] * ctx.n_states
    dist[ctx.index_of(tuple(state))] = Fraction(1)
    return tuple(dist)


def normalize_witness(witness: Iterable[Fraction]) -> Tuple[Fraction, ...]:
    """Scale LP separation weights into a probability distribution."""
    w = list(witness)
    total = sum(w, Fraction(0))
    if total <= 0:
        raise ValueError("cannot normalize a zero witness")
    return tuple(v / total for v in w)
