"""Brute-force deciders used as ground truth on small instances.

These share the LP layer with the verifier but none of its search logic.
"""
from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .lp import EPS_STRICT, max_min_slack_arrays
from .model import AffineFn, Polytope, TLLSpec, eval_scalar_batch
from .verifier import Side, Status, Verdict, check_witness


class GuardExceeded(ValueError):
    """Instance too large for the brute-force method."""


def sup_over(spec: TLLSpec, P_X: Polytope) -> tuple[float, np.ndarray]:
    """Exact supremum of the network over ``P_X`` via one LP per selector set."""
    best, arg = -math.inf, None
    for s in spec.selectors:
        idx = list(s)
        t, x = max_min_slack_arrays(spec.W[idx], spec.b[idx], P_X.A, P_X.b)
        if t > best:
            best, arg = t, x
    return best, arg


def oracle_ub(spec: TLLSpec, P_X: Polytope, b: float) -> Verdict:
    t0 = time.perf_counter()
    sup, x = sup_over(spec, P_X)
    stats = {"lp_calls": spec.M, "sup": sup, "time_ms": (time.perf_counter() - t0) * 1e3}
    if sup > b + EPS_STRICT:
        check_witness(spec, P_X, Side.UPPER, b, x)
        return Verdict(Status.UNSAT, x, (0, Side.UPPER), stats)
    return Verdict(Status.SAT, stats=stats)


def _strict_below(spec: TLLSpec, P_X: Polytope, idx, a: float):
    """max t s.t. a - L_i(x) >= t for i in idx, x in P_X."""
    idx = list(idx)
    return max_min_slack_arrays(-spec.W[idx], a - spec.b[idx], P_X.A, P_X.b)


def tuple_index_sets(spec: TLLSpec, guard: int = 10**6) -> set[frozenset[int]]:
    """Distinct index sets ``{i_1, ..., i_M}`` over ``s_1 x ... x s_M``.

    Tuples with the same set of distinct indices describe the same intersection,
    so the product is folded one selector set at a time.
    """
    size = math.prod(len(s) for s in spec.selectors)
    if size > guard:
        raise GuardExceeded(f"{size} selector tuples exceed the guard of {guard}")
    partial = {frozenset()}
    for s in spec.selectors:
        partial = {p | {i} for p in partial for i in s}
    return partial


def oracle_lb_tuple(spec: TLLSpec, P_X: Polytope, a: float, guard: int = 10**6) -> Verdict:
    t0 = time.perf_counter()
    sets = tuple_index_sets(spec, guard)
    # a superset's intersection is contained in its subsets', so minimal sets suffice
    minimal = [s for s in sets if not any(o < s for o in sets)]
    minimal.sort(key=lambda s: (len(s), sorted(s)))
    calls = 0
    for s in minimal:
        calls += 1
        t, x = _strict_below(spec, P_X, s, a)
        if t > EPS_STRICT:
            check_witness(spec, P_X, Side.LOWER, a, x)
            return Verdict(Status.UNSAT, x, (0, Side.LOWER),
                           {"lp_calls": calls, "terms": len(minimal), "time_ms": (time.perf_counter() - t0) * 1e3})
    return Verdict(Status.SAT, stats={"lp_calls": calls, "terms": len(minimal),
                                      "time_ms": (time.perf_counter() - t0) * 1e3})


def _signed_slack(fns_G, fns_h, signs, P_X: Polytope):
    s = np.asarray(signs, dtype=float)
    G = np.vstack([fns_G * s[:, None], -P_X.A])
    h = np.concatenate([fns_h * s, P_X.b])
    return max_min_slack_arrays(G, h)


def oracle_lb_signs(spec: TLLSpec, P_X: Polytope, a: float, guard: int = 20) -> Verdict:
    """Try every +-1 sign vector over ``L_i - a``; UNSAT iff a witnessing one is nonempty."""
    t0 = time.perf_counter()
    if spec.N > guard:
        raise GuardExceeded(f"N={spec.N} exceeds the sign-vector guard of {guard}")
    G, h = spec.W, spec.b - a
    calls = 0
    for signs in itertools.product((-1, 1), repeat=spec.N):
        if not all(any(signs[i] < 0 for i in s) for s in spec.selectors):
            continue
        calls += 1
        t, x = _signed_slack(G, h, signs, P_X)
        if t > EPS_STRICT:
            check_witness(spec, P_X, Side.LOWER, a, x)
            return Verdict(Status.UNSAT, x, (0, Side.LOWER),
                           {"lp_calls": calls, "time_ms": (time.perf_counter() - t0) * 1e3})
    return Verdict(Status.SAT, stats={"lp_calls": calls, "time_ms": (time.perf_counter() - t0) * 1e3})


def exhaustive_regions(fns: list[AffineFn], restrict: Polytope, prune: bool = True,
                       guard: int = 16) -> set[tuple[int, ...]]:
    """Sign vectors of all full-dimensional regions meeting ``restrict``'s interior.

    Every one of the ``2^N`` sign vectors is decided.  With ``prune`` a sign
    vector is rejected without an LP when one of its prefixes is already empty.
    """
    N = len(fns)
    if N > guard:
        raise GuardExceeded(f"{N} functions exceed the guard of {guard}")
    G = np.array([f.w for f in fns]).reshape(N, restrict.n)
    h = np.array([f.c for f in fns])
    found: set[tuple[int, ...]] = set()
    if not prune:
        for signs in itertools.product((-1, 1), repeat=N):
            if N == 0:
                t, _ = max_min_slack_arrays(-restrict.A, restrict.b)
            else:
                t, _ = _signed_slack(G, h, signs, restrict)
            if t > EPS_STRICT:
                found.add(tuple(signs))
        return found

    def nonempty(prefix):
        k = len(prefix)
        if k == 0:
            t, _ = max_min_slack_arrays(-restrict.A, restrict.b)
        else:
            t, _ = _signed_slack(G[:k], h[:k], prefix, restrict)
        return t > EPS_STRICT

    def extend(prefix):
        if len(prefix) == N:
            found.add(tuple(prefix))
            return
        for s in (-1, 1):
            nxt = prefix + (s,)
            if nonempty(nxt):
                extend(nxt)

    if nonempty(()):
        extend(())
    return found


def sample_falsify(spec: TLLSpec, box: Polytope | tuple, side: Side | str, bound: float, K: int,
                   seed: int = 0) -> np.ndarray | None:
    """Uniformly sample ``K`` points of an axis-aligned box looking for a violation."""
    side = Side(side)
    if K <= 0:
        return None
    if isinstance(box, Polytope):
        bounds = box.box_bounds()
        if bounds is None:
            raise ValueError("sampling requires an axis-aligned box")
    else:
        bounds = box
    lo, hi = (np.asarray(v, dtype=float) for v in bounds)
    rng = np.random.default_rng(seed)
    X = rng.uniform(lo, hi, size=(K, len(lo)))
    y = eval_scalar_batch(spec, X)
    bad = np.flatnonzero(y > bound) if side is Side.UPPER else np.flatnonzero(y < bound)
    if not len(bad):
        return None
    return X[bad[0]]
