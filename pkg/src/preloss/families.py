"""Finite test families standing in for "all post losses" in refinement checks.

A family is a deterministic battery (singleton indicators, the all-ones
predicate, complements, small subset indicators), registered witness losses
known to separate the bundled examples, and seeded random losses.  A Fails
verdict against any member is final; Holds is always relative to the family.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, List, Tuple

from .contexts import VarContext
from .losses import LossFunction, embed, loss_canonicalize
from .predicates import Predicate


@dataclass(frozen=True)
class FamilyOptions:
    max_subset: int = 2
    random: int = 20
    seed: int = 0
    witnesses: bool = True
    extra: Tuple[LossFunction, ...] = ()
    subset_cap: int = 4096
    random_cap: int = 10000

    @staticmethod
    def parse(spec: str) -> "FamilyOptions":
        """Parse 'k=2,random=50,seed=7,witnesses=off'."""
        opts = FamilyOptions()
        if not spec.strip():
            return opts
        for part in spec.split(","):
            key, _, value = part.partition("=")
            key = key.strip()
            value = value.strip()
            if key in ("k", "max_subset"):
                opts = replace(opts, max_subset=int(value))
            elif key == "random":
                opts = replace(opts, random=int(value))
            elif key == "seed":
                opts = replace(opts, seed=int(value))
            elif key == "witnesses":
                opts = replace(opts, witnesses=value not in ("off", "0", "false"))
            else:
                raise ValueError(f"unknown family option {key!r}")
        return opts


@dataclass(frozen=True)
class TestFamily:
    ctx: VarContext
    entries: Tuple[Tuple[LossFunction, str], ...]  # (loss, provenance)

    __test__ = False  # not a pytest suite, despite the name

    def __post_init__(self):
        if not self.entries:
            raise ValueError("test family may not be empty")
        for loss, _ in self.entries:
            if loss.ctx != self.ctx:
                raise ValueError("family entries must share one context")

    @property
    def losses(self) -> Tuple[LossFunction, ...]:
        return tuple(l for l, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


# Witness losses registered for the bundled example inputs, keyed by the
# exact context they apply to.
_WITNESS_REGISTRY: List[Tuple[Callable[[VarContext], bool], Callable[[VarContext], LossFunction]]] = []


def register_witness(matches: Callable[[VarContext], bool],
                     build: Callable[[VarContext], LossFunction]):
    _WITNESS_REGISTRY.append((matches, build))


def _guess_state_loss(ctx: VarContext) -> LossFunction:
    gens = tuple(Predicate.unit(ctx, s) for s in ctx.states())
    return loss_canonicalize(LossFunction(ctx, gens))


def standard_family(ctx: VarContext, opts: FamilyOptions = FamilyOptions()) -> TestFamily:
    n = ctx.n_states
    entries: List[Tuple[LossFunction, str]] = []
    seen = set()

    def push(loss: LossFunction, provenance: str):
        loss = loss_canonicalize(loss)
        key = tuple(sorted(g.sort_token() for g in loss.gens))
        if key in seen:
            return
        seen.add(key)
        entries.append((loss, provenance))

    units = [Predicate.unit(ctx, s) for s in ctx.states()]
    for u in units:
        push(embed(u), "builtin")
    push(embed(Predicate.ones(ctx)), "builtin")
    for u in units:
        push(embed(u.complement()), "builtin")

    subset_total = sum(
        _n_choose(n, size) for size in range(2, min(opts.max_subset, n) + 1)
    )
    if subset_total > opts.subset_cap:
        raise ValueError(
            f"{subset_total} subset indicators exceed the cap {opts.subset_cap}; "
            f"lower max_subset")
    for size in range(2, min(opts.max_subset, n) + 1):
        for combo in itertools.combinations(range(n), size):
            pred = units[combo[0]]
            for i in combo[1:]:
                pred = pred + units[i]
            push(embed(pred), "builtin")

    if opts.witnesses:
        if n <= 16:
            push(_guess_state_loss(ctx), "witness")
        for matches, build in _WITNESS_REGISTRY:
            if matches(ctx):
                push(build(ctx), "witness")

    # Extra witnesses carry their own context; only matching ones apply
    # (datatype checks build families over several post contexts).
    for loss in opts.extra:
        if loss.ctx == ctx:
            push(loss, "user")

    if opts.random > opts.random_cap:
        raise ValueError(f"{opts.random} random losses exceed the cap {opts.random_cap}")
    rng = random.Random(opts.seed)
    for _ in range(opts.random):
        k = rng.randint(1, 4)
        gens = []
        for _ in range(k):
            gens.append(Predicate(ctx, tuple(Fraction(rng.randint(0, 8), 4) for _ in range(n))))
        push(LossFunction(ctx, tuple(gens)), f"random({opts.seed})")

    return TestFamily(ctx, tuple(entries))


def _n_choose(n: int, k: int) -> int:
    result = 1
    for i in range(k):
        result = result * (n - i) // (i + 1)
    return result


def resolve_family(
    ctx: VarContext, family: "TestFamily | FamilyOptions | None"
) -> TestFamily:
    """Accept a concrete family (context-checked) or materialize options."""
    if family is None:
        family = FamilyOptions()
    if isinstance(family, FamilyOptions):
        return standard_family(ctx, family)
    if family.ctx != ctx:
        raise ValueError(
            f"family context [{family.ctx.pretty()}] does not match the "
            f"required post context [{ctx.pretty()}]")
    return family


# --------------------------------------------------- bundled example witnesses

def _parity_ctx() -> VarContext:
    return VarContext.of(("n", range(4)), ("b", range(2)))


register_witness(
    lambda ctx: ctx == _parity_ctx(),
    lambda ctx: embed(Predicate.from_function(ctx, lambda s: 1 if (s[0] + s[1]) % 2 == 0 else 0)),
)


def _encdb_ctx() -> VarContext:
    arrays = (("a", "b", "c", "a"), ("a", "b", "a", "c"))
    return VarContext.of(("x", ("a", "b", "c")), ("U", arrays), ("r", range(2)), ("v", (2, 3)))


register_witness(
    lambda ctx: ctx == _encdb_ctx(),
    lambda ctx: embed(Predicate.from_function(ctx, lambda s: 1 if s[1][s[3]] != "c" else 0)),
)
