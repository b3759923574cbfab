"""Box-property verification for TLL networks.

Verdicts follow one convention everywhere: SAT means the output stays within
the bound for every input in the polytope, UNSAT means a violating input was
found (and is returned as the witness).

Upper bounds: ``max_j min_{i in s_j} L_i(x) > b`` holds somewhere in ``P_X`` iff
for some ``j`` all of ``{L_i(x) > b : i in s_j}`` hold together on ``P_X``; each
``j`` is one max-min-slack LP.

Lower bounds: ``f(x) < a`` holds somewhere iff some full-dimensional region of
the arrangement ``{L_i - a}`` inside ``P_X`` has, for every selector set, at
least one member that is negative on the region.  Regions are searched level
by level and the search stops at the first such region.
"""
from __future__ import annotations

import enum
import json
import logging
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .arrangement import (
    Arrangement,
    Cancelled,
    Control,
    EmptyInputError,
    Region,
    VerificationTimeout,
    enumerate_levelwise,
)
from .lp import EPS_STRICT, TAU_FEAS, chebyshev_center, max_min_slack_arrays
from .model import (
    DimensionError,
    MultiTLLSpec,
    OutputBox,
    Polytope,
    TLLSpec,
    as_multi,
    eval_scalar,
)

log = logging.getLogger(__name__)

__all__ = [
    "Side",
    "Status",
    "Verdict",
    "UnsoundWitnessError",
    "verify_scalar_ub",
    "verify_scalar_lb",
    "verify_box",
    "VerificationTimeout",
    "EmptyInputError",
]


class Status(str, enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


class Side(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


class UnsoundWitnessError(AssertionError):
    """A reported counterexample failed direct re-evaluation."""


@dataclass
class Verdict:
    status: Status
    witness: np.ndarray | None = None
    violated: tuple[int, Side] | None = None
    stats: dict[str, Any] = field(default_factory=dict)
    sub_verdicts: dict[tuple[int, Side], "Verdict"] = field(default_factory=dict, repr=False)

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"status": self.status.value}
        if self.witness is not None:
            out["witness"] = [float(v) for v in self.witness]
        if self.violated is not None:
            out["violated"] = {"output": self.violated[0], "side": self.violated[1].value}
        out["stats"] = dict(self.stats)
        if self.sub_verdicts:
            out["sub_verdicts"] = [
                {"output": k, "side": side.value, "status": v.status.value, "stats": dict(v.stats)}
                for (k, side), v in sorted(self.sub_verdicts.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
            ]
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _check_inputs(spec: TLLSpec, P_X: Polytope, bound: float):
    spec.check()
    if spec.n != P_X.n:
        raise DimensionError(f"network has n={spec.n} inputs but polytope has dimension {P_X.n}")
    if not np.isfinite(bound):
        raise ValueError("scalar bound must be finite")


def check_witness(spec: TLLSpec, P_X: Polytope, side: Side, bound: float, x) -> float:
    """Re-evaluate a counterexample directly; returns the bound violation."""
    if P_X.violation(x) > TAU_FEAS:
        raise UnsoundWitnessError(f"witness leaves the input polytope by {P_X.violation(x):.3g}")
    y = eval_scalar(spec, x)
    gap = y - bound if side is Side.UPPER else bound - y
    if not gap > EPS_STRICT / 2:
        raise UnsoundWitnessError(f"witness output {y!r} does not violate {side.value} bound {bound!r}")
    return gap


def _stats(t0: float, lp_calls: int, regions: int, **extra) -> dict:
    out = {"lp_calls": lp_calls, "regions": regions, "time_ms": round((time.perf_counter() - t0) * 1e3, 3)}
    out.update(extra)
    return out


def _ensure_nonempty(P_X: Polytope):
    _, radius = chebyshev_center(P_X)
    if radius < 0:
        raise EmptyInputError("input polytope is empty")
    return radius


def verify_scalar_ub(spec: TLLSpec, P_X: Polytope, b: float, workers: int = 1,
                     control: Control | None = None) -> Verdict:
    """Decide ``f(x) <= b`` on ``P_X``; UNSAT carries an input with ``f(x) > b``."""
    t0 = time.perf_counter()
    _check_inputs(spec, P_X, b)
    control = control or Control()
    _ensure_nonempty(P_X)
    A, rhs = P_X.A, P_X.b
    lp_calls = [1]
    lock = threading.Lock()

    def term(j: int):
        control.check()
        idx = list(spec.selectors[j])
        with lock:
            lp_calls[0] += 1
        return max_min_slack_arrays(spec.W[idx], spec.b[idx] - b, A, rhs)

    hit = None
    if workers > 1 and spec.M > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = {pool.submit(term, j) for j in range(spec.M)}
            while pending and hit is None:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    t, x = fut.result()
                    if t > EPS_STRICT and hit is None:
                        hit = x
            for fut in pending:
                fut.cancel()
    else:
        for j in range(spec.M):
            t, x = term(j)
            if t > EPS_STRICT:
                hit = x
                break
    if hit is None:
        return Verdict(Status.SAT, stats=_stats(t0, lp_calls[0], 0))
    check_witness(spec, P_X, Side.UPPER, b, hit)
    return Verdict(Status.UNSAT, np.asarray(hit), (0, Side.UPPER), _stats(t0, lp_calls[0], 0))


def lb_arrangement(spec: TLLSpec, a: float) -> Arrangement:
    """The arrangement of ``L_i - a`` over all local linear functions."""
    return Arrangement([fn.shifted(-a) for fn in spec.local_fns()], spec.n)


def witnesses_violation(spec: TLLSpec, region: Region) -> bool:
    """True iff every selector set has a member that is negative on ``region``."""
    signs = region.signs
    return all(any(signs[i] < 0 for i in s) for s in spec.selectors)


def verify_scalar_lb(spec: TLLSpec, P_X: Polytope, a: float, workers: int = 1,
                     control: Control | None = None, seed: int = 0) -> Verdict:
    """Decide ``f(x) >= a`` on ``P_X``; UNSAT carries an input with ``f(x) < a``."""
    t0 = time.perf_counter()
    _check_inputs(spec, P_X, a)
    arr = lb_arrangement(spec, a)
    res = enumerate_levelwise(arr, P_X, lambda reg: witnesses_violation(spec, reg),
                              workers=workers, control=control, seed=seed)
    stats = _stats(t0, res.lp_calls, res.count, levels=res.levels)
    if res.stopped is None:
        return Verdict(Status.SAT, stats=stats)
    x = np.asarray(res.stopped.witness)
    check_witness(spec, P_X, Side.LOWER, a, x)
    return Verdict(Status.UNSAT, x, (0, Side.LOWER), stats)


def _subproblems(spec: MultiTLLSpec, box: OutputBox):
    for k in range(spec.m):
        if np.isfinite(box.lower[k]):
            yield k, Side.LOWER, float(box.lower[k])
        if np.isfinite(box.upper[k]):
            yield k, Side.UPPER, float(box.upper[k])


def verify_box(spec: TLLSpec | MultiTLLSpec, P_X: Polytope, box: OutputBox, workers: int = 1,
               timeout_s: float | None = None, seed: int = 0) -> Verdict:
    """Decide whether every output stays in its interval for all inputs in ``P_X``.

    Each finite bound is an independent scalar sub-problem.  Sub-problems run
    concurrently when ``workers > 1``; the first UNSAT cancels the rest.
    """
    t0 = time.perf_counter()
    spec = as_multi(spec).check()
    if box.m != spec.m:
        raise DimensionError(f"output box has {box.m} entries but network has {spec.m} outputs")
    if spec.n != P_X.n:
        raise DimensionError(f"network has n={spec.n} inputs but polytope has dimension {P_X.n}")
    jobs = list(_subproblems(spec, box))
    control = Control.with_timeout(timeout_s)
    inner_workers = workers if len(jobs) <= 1 else 1

    def run(job):
        k, side, bound = job
        comp = spec.outputs[k]
        if side is Side.UPPER:
            v = verify_scalar_ub(comp, P_X, bound, workers=inner_workers, control=control)
        else:
            v = verify_scalar_lb(comp, P_X, bound, workers=inner_workers, control=control, seed=seed)
        if not v.sat:
            v.violated = (k, side)
        return job, v

    subs: dict[tuple[int, Side], Verdict] = {}
    first_unsat: Verdict | None = None
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = {pool.submit(run, job) for job in jobs}
            try:
                while pending:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        try:
                            (k, side, _), v = fut.result()
                        except Cancelled:
                            continue
                        subs[(k, side)] = v
                        if not v.sat and first_unsat is None:
                            first_unsat = v
                            control.cancel.set()
            finally:
                control.cancel.set()
                for fut in pending:
                    fut.cancel()
    else:
        for job in jobs:
            (k, side, _), v = run(job)
            subs[(k, side)] = v
            if not v.sat:
                first_unsat = v
                break

    lp_calls = sum(v.stats.get("lp_calls", 0) for v in subs.values())
    regions = sum(v.stats.get("regions", 0) for v in subs.values())
    stats = _stats(t0, lp_calls, regions)
    if first_unsat is None:
        return Verdict(Status.SAT, stats=stats, sub_verdicts=subs)
    return Verdict(Status.UNSAT, first_unsat.witness, first_unsat.violated, stats, subs)


def verify_scalar(spec: TLLSpec, P_X: Polytope, side: Side | str, bound: float, workers: int = 1,
                  timeout_s: float | None = None, seed: int = 0) -> Verdict:
    side = Side(side)
    control = Control.with_timeout(timeout_s)
    if side is Side.UPPER:
        return verify_scalar_ub(spec, P_X, bound, workers=workers, control=control)
    return verify_scalar_lb(spec, P_X, bound, workers=workers, control=control, seed=seed)
