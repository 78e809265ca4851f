"""Independent forward semantics for loop-free programs.

Executes a program over observation-history branches: kernels push the
posterior forward without splitting, prints split per observed value, and
conditionals split per branch (control flow is visible).  The resolver's
strategy picks a side at each nondeterminism site per history; the optimal
(Bayes) risk minimizes the final expected loss over all strategies.

Distinct live branches always carry distinct histories, so the global
minimum decomposes into independent per-history choices; the exhaustive
mode re-derives the same value by enumerating whole strategy maps, as an
audit of that decomposition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .contexts import VarContext
from .losses import LossFunction
from .scalars import ZERO, Scalar
from .syntax import (
    Abort, Assert, Assign, HidVar, If, NonDet, Print, Program, Skip, Stmt,
    Unvar, While,
)


class StrategyError(ValueError):
    pass


class LoopFreeError(ValueError):
    pass


@dataclass(frozen=True)
class Branch:
    history: tuple
    mass: Fraction
    ctx: VarContext
    posterior: Tuple[Fraction, ...]  # normalized over ctx states


def label_sites(prog: Program, counter=None) -> Program:
    """Assign stable preorder labels to print/if/nondet sites."""
    if counter is None:
        counter = itertools.count()
    for s in prog.stmts:
        if isinstance(s, Print):
            s.meta.label = f"pr#{next(counter)}"
        elif isinstance(s, If):
            s.meta.label = f"if#{next(counter)}"
            label_sites(s.then, counter)
            label_sites(s.orelse, counter)
        elif isinstance(s, NonDet):
            s.meta.label = f"nd#{next(counter)}"
            label_sites(s.left, counter)
            label_sites(s.right, counter)
        elif isinstance(s, While):
            raise LoopFreeError("the forward oracle handles loop-free programs only")
    return prog


def _require_ready(prog: Program, prior: Sequence[Fraction]):
    if prog.meta.pre is None:
        raise ValueError("program must be typechecked first")
    if len(prior) != prog.meta.pre.n_states:
        raise ValueError("prior length mismatch")
    if any(w < 0 for w in prior) or sum(prior) != 1:
        raise ValueError("prior must be a total distribution")
    label_sites(prog)


def _push(s: Stmt, mu: List[Fraction]) -> List[Fraction]:
    """Forward image of a sub-distribution under a non-splitting statement."""
    if isinstance(s, (Skip,)):
        return mu
    if isinstance(s, Assign):
        k = s.meta.kernel
        out = [Fraction(0)] * k.dst.n_states
        for i, w in enumerate(mu):
            if w:
                for j, p in k.rows[i]:
                    out[j] += w * p
        return out
    if isinstance(s, HidVar):
        k = s.meta.kernel
        d = k.dst.n_states
        out = [Fraction(0)] * (len(mu) * d)
        for y, w in enumerate(mu):
            if w:
                for x, p in k.rows[y]:
                    out[y * d + x] += w * p
        return out
    if isinstance(s, Unvar):
        pre, post = s.meta.pre, s.meta.post
        positions = [pre.position_of(n) for n in post.names]
        out = [Fraction(0)] * post.n_states
        for i, w in enumerate(mu):
            if w:
                state = pre.state(i)
                out[post.index_of(tuple(state[p] for p in positions))] += w
        return out
    if isinstance(s, Assert):
        g = s.meta.guard
        return [w * Fraction(g.entries[i]) if w else w for i, w in enumerate(mu)]
    raise ValueError(f"not a kernel statement: {s!r}")


Cont = Tuple[Stmt, ...]


def min_bayes_risk(prog: Program, prior: Sequence[Fraction], loss: LossFunction) -> Scalar:
    """Optimal resolver's expected loss, by per-history greedy choice."""
    _require_ready(prog, prior)
    if loss.ctx != prog.meta.post:
        raise ValueError("loss context must match the program's post context")
    return _risk(prog.stmts, list(prior), loss)


def _final_risk(mu: List[Fraction], loss: LossFunction) -> Scalar:
    best: Optional[Scalar] = None
    for g in loss.gens:
        total: Scalar = ZERO
        for e, w in zip(g.entries, mu):
            if w:
                total = total + e * w
        if best is None or total < best:
            best = total
    return best


def _risk(cont: Cont, mu: List[Fraction], loss: LossFunction) -> Scalar:
    if not any(mu):
        return ZERO
    if not cont:
        return _final_risk(mu, loss)
    s, rest = cont[0], cont[1:]
    if isinstance(s, Abort):
        return ZERO
    if isinstance(s, (Skip, Assign, HidVar, Unvar, Assert)):
        return _risk(rest, _push(s, mu), loss)
    if isinstance(s, Print):
        obs = s.meta.obs
        total: Scalar = ZERO
        for w_idx in range(len(obs.values)):
            split = [Fraction(0)] * len(mu)
            for i, w in enumerate(mu):
                if w:
                    for idx, p in obs.rows[i]:
                        if idx == w_idx:
                            split[i] += w * p
            total = total + _risk(rest, split, loss)
        return total
    if isinstance(s, If):
        g = s.meta.guard
        mu_t = [w * Fraction(g.entries[i]) for i, w in enumerate(mu)]
        mu_f = [w - t for w, t in zip(mu, mu_t)]
        return (
            _risk(s.then.stmts + rest, mu_t, loss)
            + _risk(s.orelse.stmts + rest, mu_f, loss)
        )
    if isinstance(s, NonDet):
        left = _risk(s.left.stmts + rest, mu, loss)
        right = _risk(s.right.stmts + rest, mu, loss)
        return left if left <= right else right
    raise LoopFreeError(f"unsupported statement in the oracle: {s!r}")


# ------------------------------------------------------------ run_strategy

def run_strategy(prog: Program, prior: Sequence[Fraction], strategy: Dict) -> List[Branch]:
    """Execute under an explicit (history, site) -> 'left'|'right' strategy."""
    _require_ready(prog, prior)
    done: List[Branch] = []
    _run(prog.stmts, prog.meta.pre, list(prior), (), strategy, done, prog.meta.post)
    return done


def _run(cont, ctx, mu, history, strategy, done, final_ctx):
    total = sum(mu)
    if total == 0:
        return
    if not cont:
        done.append(Branch(history, total, final_ctx, tuple(w / total for w in mu)))
        return
    s, rest = cont[0], cont[1:]
    if isinstance(s, Abort):
        return
    if isinstance(s, (Skip, Assign, HidVar, Unvar, Assert)):
        _run(rest, s.meta.post, _push(s, mu), history, strategy, done, final_ctx)
        return
    if isinstance(s, Print):
        obs = s.meta.obs
        for w_idx, value in enumerate(obs.values):
            split = [Fraction(0)] * len(mu)
            for i, w in enumerate(mu):
                if w:
                    for idx, p in obs.rows[i]:
                        if idx == w_idx:
                            split[i] += w * p
            _run(rest, ctx, split, history + (("print", s.meta.label, value),),
                 strategy, done, final_ctx)
        return
    if isinstance(s, If):
        g = s.meta.guard
        mu_t = [w * Fraction(g.entries[i]) for i, w in enumerate(mu)]
        mu_f = [w - t for w, t in zip(mu, mu_t)]
        _run(s.then.stmts + rest, ctx, mu_t, history + (("branch", s.meta.label, True),),
             strategy, done, final_ctx)
        _run(s.orelse.stmts + rest, ctx, mu_f, history + (("branch", s.meta.label, False),),
             strategy, done, final_ctx)
        return
    if isinstance(s, NonDet):
        key = (history, s.meta.label)
        if key not in strategy:
            raise StrategyError(f"strategy undefined at {key}")
        side = strategy[key]
        if side not in ("left", "right"):
            raise StrategyError(f"strategy value {side!r} at {key}")
        chosen = s.left if side == "left" else s.right
        _run(chosen.stmts + rest, ctx, mu, history, strategy, done, final_ctx)
        return
    raise LoopFreeError(f"unsupported statement in the oracle: {s!r}")


# --------------------------------------------------------------- exhaustive

def choice_points(prog: Program, prior: Sequence[Fraction]) -> List[Tuple[tuple, str]]:
    """All (history, site) pairs reachable under any strategy."""
    _require_ready(prog, prior)
    found: Dict[Tuple[tuple, str], None] = {}

    def walk(cont, mu, history):
        if not any(mu) or not cont:
            return
        s, rest = cont[0], cont[1:]
        if isinstance(s, Abort):
            return
        if isinstance(s, (Skip, Assign, HidVar, Unvar, Assert)):
            walk(rest, _push(s, mu), history)
        elif isinstance(s, Print):
            obs = s.meta.obs
            for w_idx, value in enumerate(obs.values):
                split = [Fraction(0)] * len(mu)
                for i, w in enumerate(mu):
                    if w:
                        for idx, p in obs.rows[i]:
                            if idx == w_idx:
                                split[i] += w * p
                walk(rest, split, history + (("print", s.meta.label, value),))
        elif isinstance(s, If):
            g = s.meta.guard
            mu_t = [w * Fraction(g.entries[i]) for i, w in enumerate(mu)]
            mu_f = [w - t for w, t in zip(mu, mu_t)]
            walk(s.then.stmts + rest, mu_t, history + (("branch", s.meta.label, True),))
            walk(s.orelse.stmts + rest, mu_f, history + (("branch", s.meta.label, False),))
        elif isinstance(s, NonDet):
            found.setdefault((history, s.meta.label))
            walk(s.left.stmts + rest, mu, history)
            walk(s.right.stmts + rest, mu, history)
        else:
            raise LoopFreeError(f"unsupported statement in the oracle: {s!r}")

    walk(prog.stmts, list(prior), ())
    return list(found)


def min_bayes_risk_exhaustive(
    prog: Program, prior: Sequence[Fraction], loss: LossFunction, cap: int = 14
) -> Scalar:
    """Minimum risk over explicitly enumerated whole strategies."""
    points = choice_points(prog, prior)
    if len(points) > cap:
        raise ValueError(f"{len(points)} choice points exceed the exhaustive cap {cap}")
    best: Optional[Scalar] = None
    for sides in itertools.product(("left", "right"), repeat=len(points)):
        strategy = dict(zip(points, sides))
        total: Scalar = ZERO
        for b in run_strategy(prog, prior, strategy):
            contribution = _final_risk([w * b.mass for w in b.posterior], loss)
            total = total + contribution
        if best is None or total < best:
            best = total
    return best
