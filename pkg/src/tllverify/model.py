"""Domain types for two-level lattice (TLL) networks and output properties.

A scalar TLL computes ``max_j min_{i in s_j} (W[i] @ x + b[i])``; a multi-output
TLL stacks ``m`` such scalar networks that share the input.  Indices are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class InvalidSpecError(ValueError):
    """Raised when a network or property violates a structural invariant."""


class DimensionError(ValueError):
    pass


def _as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class AffineFn:
    """The affine map ``x -> w @ x + c``."""

    w: np.ndarray
    c: float

    def __post_init__(self):
        w = _as_vector(self.w, "w").copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c", float(self.c))
        if not (np.all(np.isfinite(w)) and math.isfinite(self.c)):
            raise InvalidSpecError("affine function has non-finite entries")

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def __call__(self, x) -> float:
        x = _as_vector(x)
        if x.shape[0] != self.n:
            raise DimensionError(f"expected length {self.n}, got {x.shape[0]}")
        return float(self.w @ x + self.c)

    def __neg__(self) -> AffineFn:
        return AffineFn(-self.w, -self.c)

    def shifted(self, delta: float) -> AffineFn:
        return AffineFn(self.w, self.c + delta)

    def __eq__(self, other):
        if not isinstance(other, AffineFn):
            return NotImplemented
        return self.c == other.c and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash((self.c, self.w.tobytes()))

    def __repr__(self):
        return f"AffineFn(w={self.w.tolist()}, c={self.c})"


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_invalid(self, what: str = "spec"):
        if self.errors:
            raise InvalidSpecError(f"invalid {what}: " + "; ".join(self.errors))


@dataclass(frozen=True, eq=False)
class TLLSpec:
    """Scalar TLL network: local linear functions plus selector sets.

    ``W`` is ``N x n``, ``b`` has length ``N`` and ``selectors`` holds ``M`` index
    sets into ``range(N)``.  Selector multiplicity is dropped; each set is stored
    sorted.  Construction normalizes shapes but does not enforce the remaining
    invariants; call :func:`validate` (or :meth:`check`) for that.
    """

    W: np.ndarray
    b: np.ndarray
    selectors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim == 1:
            W = W.reshape(-1, 1)
        if W.ndim != 2:
            raise DimensionError(f"W must be a matrix, got shape {W.shape}")
        b = _as_vector(self.b, "b").copy()
        if b.shape[0] != W.shape[0]:
            raise DimensionError(f"W has {W.shape[0]} rows but b has length {b.shape[0]}")
        W.setflags(write=False)
        b.setflags(write=False)
        sels = tuple(tuple(sorted({int(i) for i in s})) for s in self.selectors)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "selectors", sels)

    @property
    def n(self) -> int:
        return self.W.shape[1]

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> int:
        return len(self.selectors)

    def local_fn(self, i: int) -> AffineFn:
        return AffineFn(self.W[i], self.b[i])

    def local_fns(self) -> list[AffineFn]:
        return [self.local_fn(i) for i in range(self.N)]

    def check(self) -> TLLSpec:
        validate(self).raise_if_invalid("TLL spec")
        return self

    def scaled(self, factor: float) -> TLLSpec:
        return TLLSpec(self.W * factor, self.b * factor, self.selectors)

    def __eq__(self, other):
        if not isinstance(other, TLLSpec):
            return NotImplemented
        return (
            self.W.shape == other.W.shape
            and np.array_equal(self.W, other.W)
            and np.array_equal(self.b, other.b)
            and self.selectors == other.selectors
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MultiTLLSpec:
    outputs: tuple[TLLSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))

    @property
    def m(self) -> int:
        return len(self.outputs)

    @property
    def n(self) -> int:
        return self.outputs[0].n

    @property
    def N(self) -> int:
        return self.outputs[0].N

    @property
    def M(self) -> int:
        return self.outputs[0].M

    def check(self) -> MultiTLLSpec:
        validate_multi(self).raise_if_invalid("multi-output TLL spec")
        return self

    def __eq__(self, other):
        if not isinstance(other, MultiTLLSpec):
            return NotImplemented
        return self.outputs == other.outputs

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Polytope:
    """Conjunction of constraints ``l(x) <= 0``."""

    constraints: tuple[AffineFn, ...]

    def __post_init__(self):
        cons = tuple(self.constraints)
        if not cons:
            raise InvalidSpecError("polytope needs at least one constraint")
        n = cons[0].n
        if any(c.n != n for c in cons):
            raise DimensionError("polytope constraints disagree on dimension")
        object.__setattr__(self, "constraints", cons)

    @classmethod
    def from_matrix(cls, A, b) -> Polytope:
        """Build ``{x : A x <= b}``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = _as_vector(b, "b")
        if A.shape[0] != b.shape[0]:
            raise DimensionError("A and b have different row counts")
        return cls(tuple(AffineFn(A[k], -b[k]) for k in range(A.shape[0])))

    @classmethod
    def box(cls, lower, upper) -> Polytope:
        lower = _as_vector(lower, "lower")
        upper = _as_vector(upper, "upper")
        n = lower.shape[0]
        eye = np.eye(n)
        A = np.vstack([eye, -eye])
        return cls.from_matrix(A, np.concatenate([upper, -lower]))

    @classmethod
    def cube(cls, n: int, half_width: float = 2.0) -> Polytope:
        return cls.box(np.full(n, -half_width), np.full(n, half_width))

    @property
    def n(self) -> int:
        return self.constraints[0].n

    @property
    def A(self) -> np.ndarray:
        return np.array([c.w for c in self.constraints])

    @property
    def b(self) -> np.ndarray:
        return np.array([-c.c for c in self.constraints])

    def violation(self, x) -> float:
        """Largest constraint value at ``x`` (<= 0 means inside)."""
        x = _as_vector(x)
        return float(np.max(self.A @ x - self.b))

    def contains(self, x, tol: float = 1e-7) -> bool:
        return self.violation(x) <= tol

    def box_bounds(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Return ``(lower, upper)`` if this is an axis-aligned box, else None."""
        n = self.n
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        for con in self.constraints:
            nz = np.flatnonzero(con.w)
            if len(nz) != 1:
                return None
            k = nz[0]
            coef = con.w[k]
            if coef > 0:
                hi[k] = min(hi[k], -con.c / coef)
            else:
                lo[k] = max(lo[k], -con.c / coef)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            return None
        return lo, hi

    def intersect(self, more: Polytope | Sequence[AffineFn]) -> Polytope:
        extra = more.constraints if isinstance(more, Polytope) else tuple(more)
        return Polytope(self.constraints + extra)

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return self.constraints == other.constraints

    __hash__ = None


@dataclass(frozen=True, eq=False)
class OutputBox:
    """Per-output interval ``[lower[k], upper[k]]``; infinite ends are unconstrained."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lower, "lower").copy()
        hi = _as_vector(self.upper, "upper").copy()
        if lo.shape != hi.shape:
            raise DimensionError("lower and upper have different lengths")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvalidSpecError("output box bounds may not be NaN")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise InvalidSpecError("lower bounds cannot be +inf nor upper bounds -inf")
        bad = np.flatnonzero(lo > hi)
        if len(bad):
            raise InvalidSpecError(f"lower > upper at output {int(bad[0])}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def m(self) -> int:
        return self.lower.shape[0]

    def __eq__(self, other):
        if not isinstance(other, OutputBox):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    __hash__ = None


def validate(spec: TLLSpec) -> ValidationReport:
    report = ValidationReport()
    if spec.N < 1:
        report.errors.append("N must be at least 1")
    if spec.n < 1:
        report.errors.append("input dimension n must be at least 1")
    if spec.M < 1:
        report.errors.append("M must be at least 1 (no selector sets)")
    if not (np.all(np.isfinite(spec.W)) and np.all(np.isfinite(spec.b))):
        report.errors.append("non-finite entries in W or b")
    for j, s in enumerate(spec.selectors):
        if not s:
            report.errors.append(f"empty selector set at j={j}")
        for i in s:
            if i < 0 or i >= spec.N:
                report.errors.append(f"selector set j={j}: index {i} out of range [0, {spec.N})")
    if spec.N > 1 and spec.n >= 1:
        rows = np.column_stack([spec.W, spec.b])
        _, first, counts = np.unique(rows, axis=0, return_index=True, return_counts=True)
        for idx in first[counts > 1]:
            report.warnings.append(f"local linear function {int(idx)} is duplicated")
    return report


def validate_multi(spec: MultiTLLSpec) -> ValidationReport:
    report = ValidationReport()
    if spec.m < 1:
        report.errors.append("multi-output spec needs at least one output")
        return report
    n, N, M = spec.outputs[0].n, spec.outputs[0].N, spec.outputs[0].M
    for k, comp in enumerate(spec.outputs):
        sub = validate(comp)
        report.errors.extend(f"output {k}: {e}" for e in sub.errors)
        report.warnings.extend(f"output {k}: {w}" for w in sub.warnings)
        if (comp.n, comp.N, comp.M) != (n, N, M):
            report.errors.append(
                f"output {k}: size (n={comp.n}, N={comp.N}, M={comp.M}) differs from "
                f"output 0 (n={n}, N={N}, M={M})"
            )
    return report


def local_values(spec: TLLSpec, x) -> np.ndarray:
    x = _as_vector(x)
    if x.shape[0] != spec.n:
        raise DimensionError(f"expected input of length {spec.n}, got {x.shape[0]}")
    return spec.W @ x + spec.b


def eval_scalar(spec: TLLSpec, x) -> float:
    vals = local_values(spec, x)
    return float(max(min(vals[i] for i in s) for s in spec.selectors))


def eval_scalar_batch(spec: TLLSpec, X) -> np.ndarray:
    """Vectorized evaluation over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.n:
        raise DimensionError(f"expected inputs of width {spec.n}, got {X.shape[1]}")
    vals = X @ spec.W.T + spec.b
    mins = np.column_stack([vals[:, list(s)].min(axis=1) for s in spec.selectors])
    return mins.max(axis=1)


def eval_multi(spec: MultiTLLSpec, x) -> np.ndarray:
    return np.array([eval_scalar(comp, x) for comp in spec.outputs])


def as_multi(spec: TLLSpec | MultiTLLSpec) -> MultiTLLSpec:
    return spec if isinstance(spec, MultiTLLSpec) else MultiTLLSpec((spec,))
