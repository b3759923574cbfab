"""Full-dimensional regions of hyperplane arrangements restricted to a polytope.

Regions are enumerated breadth-first over the leveled adjacency poset: the
level of a region is the number of hyperplanes separating it from a base
region, and a region at level ``k`` only ever produces neighbours at level
``k + 1``.  Only the current and the next level are held in memory.

The hyperplanes of the restricting polytope act as extra members of the
arrangement whose sign is pinned to ``-1``; they are never crossed.
"""
from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .lp import EPS_STRICT, chebyshev_center, max_min_slack_arrays
from .model import AffineFn, DimensionError, Polytope

log = logging.getLogger(__name__)


class EmptyInputError(ValueError):
    """The restricting polytope has no interior."""


class VerificationTimeout(RuntimeError):
    pass


class Cancelled(RuntimeError):
    pass


class Control:
    """Deadline and cancellation flag shared by cooperating workers."""

    def __init__(self, deadline: float | None = None, cancel: threading.Event | None = None):
        self.deadline = deadline
        self.cancel = cancel or threading.Event()

    @classmethod
    def with_timeout(cls, timeout_s: float | None) -> Control:
        if timeout_s is None:
            return cls()
        return cls(deadline=time.monotonic() + timeout_s)

    def check(self):
        if self.cancel.is_set():
            raise Cancelled()
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise VerificationTimeout("time budget exhausted")


class OnHyperplane(NamedTuple):
    index: int


class Arrangement:
    """An ordered family of affine functions on ``R^n``.

    Functions that define the same hyperplane (equal up to a nonzero scale) are
    collapsed onto one representative; ``orientation[i]`` records whether
    function ``i`` agrees (+1) or disagrees (-1) in sign with it.  Functions with
    zero gradient define no hyperplane and carry the fixed sign of their
    constant, with a zero constant counted as +1.
    """

    def __init__(self, fns: Sequence[AffineFn], n: int | None = None):
        fns = tuple(fns)
        if n is None:
            if not fns:
                raise ValueError("dimension required for an empty arrangement")
            n = fns[0].n
        if any(f.n != n for f in fns):
            raise DimensionError("arrangement functions disagree on dimension")
        self.fns = fns
        self.n = n
        self.unique_of = np.full(len(fns), -1, dtype=int)
        self.orientation = np.ones(len(fns), dtype=int)
        reps: list[int] = []
        normalized: list[np.ndarray] = []
        for i, f in enumerate(fns):
            norm = float(np.linalg.norm(f.w))
            if norm == 0.0:
                self.orientation[i] = -1 if f.c < 0 else 1
                continue
            v = np.append(f.w, f.c) / norm
            for k, u in enumerate(normalized):
                if np.allclose(v, u, rtol=0, atol=1e-12):
                    self.unique_of[i] = k
                    break
                if np.allclose(v, -u, rtol=0, atol=1e-12):
                    self.unique_of[i] = k
                    self.orientation[i] = -1
                    break
            else:
                self.unique_of[i] = len(reps)
                reps.append(i)
                normalized.append(v)
        self.representatives = tuple(reps)
        if reps:
            self.G = np.array([fns[i].w for i in reps])
            self.h = np.array([fns[i].c for i in reps])
        else:
            self.G = np.zeros((0, n))
            self.h = np.zeros(0)

    def __len__(self):
        return len(self.fns)

    @property
    def n_unique(self) -> int:
        return len(self.representatives)

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([f.w @ x + f.c for f in self.fns])

    def expand(self, usigns: np.ndarray) -> tuple[int, ...]:
        """Map signs over unique hyperplanes back to the original function order."""
        out = []
        for i in range(len(self.fns)):
            k = self.unique_of[i]
            out.append(int(self.orientation[i]) if k < 0 else int(self.orientation[i] * usigns[k]))
        return tuple(out)

    def compress(self, signs: Sequence[int]) -> np.ndarray:
        us = np.zeros(self.n_unique, dtype=np.int8)
        for i, k in enumerate(self.unique_of):
            if k >= 0:
                us[k] = signs[i] * self.orientation[i]
        return us


@dataclass(frozen=True, eq=False)
class Region:
    """A full-dimensional region: signs over the arrangement plus an interior point."""

    signs: tuple[int, ...]
    level: int
    witness: np.ndarray
    usigns: np.ndarray = field(repr=False, default=None)

    def negatives(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.signs) if s < 0)


def sign_vector(arr: Arrangement, x, tol: float = EPS_STRICT):
    """Signs of every arrangement function at ``x``, or ``OnHyperplane(i)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (arr.n,):
        raise DimensionError(f"expected a point of length {arr.n}")
    out = []
    for i, f in enumerate(arr.fns):
        if arr.unique_of[i] < 0:
            out.append(int(arr.orientation[i]))
            continue
        v = float(f.w @ x + f.c)
        if abs(v) <= tol:
            return OnHyperplane(i)
        out.append(1 if v > 0 else -1)
    return tuple(out)


def _hamming(a: np.ndarray, b: np.ndarray) -> int:
    return int(np.count_nonzero(a != b))


class _Search:
    """Array form of an arrangement restricted to a polytope."""

    def __init__(self, arr: Arrangement, restrict: Polytope):
        if restrict.n != arr.n:
            raise DimensionError("restricting polytope and arrangement differ in dimension")
        self.arr = arr
        self.restrict = restrict
        self.G = arr.G
        self.h = arr.h
        # restrict rows in "signed >= t" form: -(a x + c) >= t
        self.R = -restrict.A
        self.r = restrict.b.copy()
        self.lp_calls = 0
        self.shortcuts = 0
        self.active = np.ones(arr.n_unique, dtype=bool)
        self._lock = threading.Lock()

    def signed(self, usigns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = usigns.astype(float)
        return (np.vstack([self.G * s[:, None], self.R]),
                np.concatenate([self.h * s, self.r]))

    def slack_lp(self, usigns: np.ndarray) -> tuple[float, np.ndarray | None]:
        S, o = self.signed(usigns)
        with self._lock:
            self.lp_calls += 1
        return max_min_slack_arrays(S, o)

    def margins(self, usigns: np.ndarray, x: np.ndarray) -> np.ndarray:
        S, o = self.signed(usigns)
        return S @ x + o

    def make_region(self, usigns, level, witness) -> Region:
        usigns = np.asarray(usigns, dtype=np.int8)
        usigns.setflags(write=False)
        witness = np.asarray(witness, dtype=float)
        witness.setflags(write=False)
        return Region(self.arr.expand(usigns), level, witness, usigns)

    def prune_inactive(self, base_usigns: np.ndarray):
        """Mark hyperplanes that never cut the polytope interior as uncrossable."""
        for k in range(self.arr.n_unique):
            sgn = -float(base_usigns[k])
            G = np.vstack([sgn * self.G[k][None, :], self.R])
            o = np.concatenate([[sgn * self.h[k]], self.r])
            with self._lock:
                self.lp_calls += 1
            t, _ = max_min_slack_arrays(G, o)
            self.active[k] = t > EPS_STRICT

    def shoot(self, usigns: np.ndarray, witness: np.ndarray, cands: np.ndarray) -> list[np.ndarray | None]:
        """Try to cross each candidate hyperplane along its normal from ``witness``.

        Returns, per candidate, a strictly interior point of the neighbouring
        region or None when the straight move does not certify one.
        """
        S, o = self.signed(usigns)
        v = S @ witness + o
        D = -S[cands]  # move directions, one per candidate
        rates = S @ D.T  # d/dtau of each signed row along each direction
        out: list[np.ndarray | None] = []
        for col, k in enumerate(cands):
            rate = rates[:, col]
            tau_self = v[k] / -rate[k]
            with np.errstate(divide="ignore", invalid="ignore"):
                taus = np.where(rate < 0, v / -rate, np.inf)
            taus[k] = np.inf
            tau_next = float(np.min(taus))
            if not tau_self < tau_next * (1 - 1e-9):
                out.append(None)
                continue
            tau = 0.5 * (tau_self + tau_next) if math.isfinite(tau_next) else 2.0 * tau_self
            p = witness + tau * D[col]
            flipped = usigns.copy()
            flipped[k] = -flipped[k]
            if np.min(self.margins(flipped, p)) >= EPS_STRICT:
                out.append(p)
            else:
                out.append(None)
        return out

    def neighbours(self, reg: Region, base_usigns: np.ndarray, known: Callable[[bytes], bool] | None = None):
        """Yield ``(usigns, witness)`` for next-level neighbours of ``reg``."""
        us = reg.usigns
        cands = np.flatnonzero((us == base_usigns) & self.active)
        if not len(cands):
            return
        todo = []
        for k in cands:
            flipped = us.copy()
            flipped[k] = -flipped[k]
            if known is not None and known(flipped.tobytes()):
                continue
            todo.append((k, flipped))
        if not todo:
            return
        shots = self.shoot(us, np.asarray(reg.witness), np.array([k for k, _ in todo]))
        for (k, flipped), p in zip(todo, shots):
            if known is not None and known(flipped.tobytes()):
                continue
            if p is not None:
                with self._lock:
                    self.shortcuts += 1
                yield flipped, p
                continue
            t, x = self.slack_lp(flipped)
            if t > EPS_STRICT:
                yield flipped, x


def _base_usigns(search: _Search, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    arr, restrict = search.arr, search.restrict
    center, radius = chebyshev_center(restrict)
    search.lp_calls += 1
    if not radius > EPS_STRICT:
        raise EmptyInputError(f"restricting polytope has no interior (Chebyshev radius {radius:.3g})")

    def ok(x):
        v = search.G @ x + search.h
        if np.any(np.abs(v) < EPS_STRICT):
            return None
        us = np.where(v > 0, 1, -1).astype(np.int8)
        if np.min(search.margins(us, x)) >= EPS_STRICT:
            return us
        return None

    us = ok(center)
    if us is not None:
        return us, center
    rng = np.random.default_rng(seed)
    step = min(radius / 2, 1e-3)
    for _ in range(16):
        d = rng.normal(size=arr.n)
        d /= np.linalg.norm(d)
        p = center + step * d
        us = ok(p)
        if us is not None:
            return us, p
    v = search.G @ center + search.h
    guess = np.where(v < 0, -1, 1).astype(np.int8)
    ambiguous = np.flatnonzero(np.abs(v) < EPS_STRICT)
    for flip in (None, *ambiguous):
        trial = guess.copy()
        if flip is not None:
            trial[flip] = -trial[flip]
        t, x = search.slack_lp(trial)
        if t > EPS_STRICT:
            return trial, x
    raise EmptyInputError("could not place a base point off the arrangement inside the polytope")


def base_region(arr: Arrangement, restrict: Polytope, seed: int = 0) -> Region:
    search = _Search(arr, restrict)
    us, w = _base_usigns(search, seed)
    return search.make_region(us, 0, w)


def adjacent_regions(arr: Arrangement, reg: Region, restrict: Polytope, base_signs) -> list[Region]:
    """Neighbours of ``reg`` one level further from the base sign vector."""
    search = _Search(arr, restrict)
    if reg.usigns is None:
        reg = search.make_region(arr.compress(reg.signs), reg.level, reg.witness)
    base_us = arr.compress(base_signs)
    return [search.make_region(us, reg.level + 1, w) for us, w in search.neighbours(reg, base_us)]


@dataclass
class EnumerationResult:
    stopped: Region | None
    count: int
    lp_calls: int
    levels: int
    shortcuts: int = 0

    @property
    def status(self) -> str:
        return "STOPPED" if self.stopped is not None else "EXHAUSTED"


def enumerate_levelwise(
    arr: Arrangement,
    restrict: Polytope,
    predicate: Callable[[Region], bool],
    workers: int = 1,
    control: Control | None = None,
    seed: int = 0,
) -> EnumerationResult:
    """Visit every region of ``arr`` meeting the interior of ``restrict``.

    ``predicate`` returns True to stop the search at that region.  With
    ``workers > 1`` the regions of each level are expanded by a thread pool;
    the next level is a shared table where the first insertion of a sign
    vector wins.
    """
    control = control or Control()
    search = _Search(arr, restrict)
    base_us, base_w = _base_usigns(search, seed)
    base = search.make_region(base_us, 0, base_w)
    count = 1
    if predicate(base):
        return EnumerationResult(base, count, search.lp_calls, 0, search.shortcuts)
    search.prune_inactive(base_us)

    lock = threading.Lock()
    stop = threading.Event()
    state = {"stopped": None, "count": count}
    level_no = 0
    current = [base]

    def expand(reg: Region, nxt: dict):
        if stop.is_set():
            return
        control.check()
        for us, w in search.neighbours(reg, base_us, known=nxt.__contains__):
            key = us.tobytes()
            with lock:
                if key in nxt or stop.is_set():
                    continue
                new = search.make_region(us, reg.level + 1, w)
                nxt[key] = new
                state["count"] += 1
            if predicate(new):
                with lock:
                    if state["stopped"] is None:
                        state["stopped"] = new
                stop.set()
                return

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while current and not stop.is_set():
            nxt: dict[bytes, Region] = {}
            if pool is None:
                for reg in current:
                    expand(reg, nxt)
                    if stop.is_set():
                        break
            else:
                futures = [pool.submit(expand, reg, nxt) for reg in current]
                for fut in futures:
                    try:
                        fut.result()
                    except BaseException:
                        stop.set()
                        raise
            current = list(nxt.values())
            if current:
                level_no += 1
            log.debug("level %d: %d regions", level_no, len(current))
    finally:
        if pool is not None:
            pool.shutdown(wait=True, cancel_futures=True)
    return EnumerationResult(state["stopped"], state["count"], search.lp_calls, level_no, search.shortcuts)


def all_regions(arr: Arrangement, restrict: Polytope, **kwargs) -> list[Region]:
    """Every region of ``arr`` meeting the interior of ``restrict``."""
    found: list[Region] = []
    lock = threading.Lock()

    def collect(reg):
        with lock:
            found.append(reg)
        return False

    enumerate_levelwise(arr, restrict, collect, **kwargs)
    return found


def region_bound(n_hyperplanes: int, dim: int) -> int:
    """Maximum number of regions of ``n_hyperplanes`` hyperplanes in ``R^dim``."""
    return sum(math.comb(n_hyperplanes, k) for k in range(min(dim, n_hyperplanes) + 1))
