"""Linear-programming substrate backed by HiGHS (through scipy).

Three programs are exposed: plain feasibility of an affine system, the
maximum-minimum-slack program that decides whether a set of strict
inequalities can hold together with a set of hard ones, and the Chebyshev
center of a polytope.  Numerical trouble in the solver raises
:class:`LPError`; it is never reported as infeasibility.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .model import AffineFn, DimensionError, Polytope

EPS_STRICT = 1e-7
TAU_FEAS = 1e-7
T_CAP = 1e9


class LPError(RuntimeError):
    """The LP engine failed to return a trustworthy answer."""


class Sense(enum.Enum):
    LEQ0 = "<=0"
    GEQ0 = ">=0"


class LPStatus(enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"


@dataclass(frozen=True)
class ConstraintSystem:
    rows: tuple[tuple[AffineFn, Sense], ...]
    n: int

    def __post_init__(self):
        rows = tuple(self.rows)
        for fn, sense in rows:
            if fn.n != self.n:
                raise DimensionError(f"row of dimension {fn.n} in a system of dimension {self.n}")
            if not isinstance(sense, Sense):
                raise TypeError(f"bad sense {sense!r}")
        object.__setattr__(self, "rows", rows)

    def as_leq(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(A, b)`` with every row rewritten as ``A x <= b``."""
        if not self.rows:
            return np.zeros((0, self.n)), np.zeros(0)
        A = np.empty((len(self.rows), self.n))
        b = np.empty(len(self.rows))
        for k, (fn, sense) in enumerate(self.rows):
            sign = 1.0 if sense is Sense.LEQ0 else -1.0
            A[k] = sign * fn.w
            b[k] = -sign * fn.c
        return A, b

    def max_violation(self, x) -> float:
        A, b = self.as_leq()
        if not len(b):
            return 0.0
        return float(np.max(A @ np.asarray(x, dtype=float) - b))


@dataclass(frozen=True)
class LPOutcome:
    status: LPStatus
    point: np.ndarray | None = None
    objective: float | None = None


def _fn_arrays(fns: Sequence[AffineFn], n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    if not fns:
        return np.zeros((0, n or 0)), np.zeros(0)
    return np.array([f.w for f in fns]), np.array([f.c for f in fns])


def _solve(c, A_ub, b_ub, bounds):
    res = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  bounds=bounds, method="highs")
    if res.status == 0:
        return res
    if res.status == 2:
        return None
    raise LPError(f"HiGHS returned status {res.status}: {res.message}")


def feasible(sys: ConstraintSystem) -> LPOutcome:
    A, b = sys.as_leq()
    n = sys.n
    if not len(b):
        return LPOutcome(LPStatus.FEASIBLE, np.zeros(n), 0.0)
    res = _solve(np.zeros(n), A, b, [(None, None)] * n)
    if res is None:
        return LPOutcome(LPStatus.INFEASIBLE)
    x = np.asarray(res.x, dtype=float)
    viol = float(np.max(A @ x - b))
    if viol > TAU_FEAS:
        raise LPError(f"solver point violates a row by {viol:.3g}")
    return LPOutcome(LPStatus.FEASIBLE, x, 0.0)


def max_min_slack_arrays(G, h, A=None, b=None, cap: float = T_CAP) -> tuple[float, np.ndarray | None]:
    """Maximize ``t`` s.t. ``G x + h >= t`` (row-wise) and ``A x <= b``.

    Returns ``(t_star, x)``.  ``t_star`` is ``-inf`` (with ``x=None``) when the
    hard rows are infeasible and ``+inf`` when the cap is reached.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    m, n = G.shape
    if m == 0:
        raise ValueError("max_min_slack needs at least one strict row")
    # variables z = (x, t); rows: -G x + t <= h ; A x <= b
    rows = [np.column_stack([-G, np.ones(m)])]
    rhs = [h]
    if A is not None and len(A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        rows.append(np.column_stack([A, np.zeros(A.shape[0])]))
        rhs.append(np.asarray(b, dtype=float))
    A_ub = np.vstack(rows)
    b_ub = np.concatenate(rhs)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = _solve(c, A_ub, b_ub, [(None, None)] * n + [(None, cap)])
    if res is None:
        return -math.inf, None
    x = np.asarray(res.x[:n], dtype=float)
    t = float(res.x[-1])
    if A is not None and len(A):
        viol = float(np.max(A @ x - b))
        if viol > TAU_FEAS:
            raise LPError(f"solver point violates a hard row by {viol:.3g}")
    if t >= cap * (1 - 1e-9):
        return math.inf, x
    # report the slack actually achieved at x, not the solver's t
    t_real = float(np.min(G @ x + h))
    return min(t, t_real), x


def max_min_slack(strict: Sequence[AffineFn], hard: Sequence[AffineFn] = ()) -> tuple[float, np.ndarray | None]:
    """Largest achievable ``min_k strict[k](x)`` over ``{x : hard(x) <= 0}``.

    The strict system ``{strict > 0} ∩ {hard <= 0}`` is nonempty iff the returned
    value is positive.
    """
    if not strict:
        raise ValueError("max_min_slack needs at least one strict row")
    n = strict[0].n
    G, h = _fn_arrays(strict, n)
    A, c = _fn_arrays(hard, n)
    return max_min_slack_arrays(G, h, A, -c)


def chebyshev_center(p: Polytope, cap: float = T_CAP) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside ``p``.

    A negative radius means the polytope is empty.  Constant rows (zero normal)
    either hold everywhere and are dropped, or make the polytope empty.
    """
    A, b = p.A, p.b
    norms = np.linalg.norm(A, axis=1)
    const = norms == 0
    if np.any(b[const] < 0):
        return np.zeros(p.n), -math.inf
    A, b, norms = A[~const], b[~const], norms[~const]
    n = p.n
    if not len(b):
        return np.zeros(n), math.inf
    A_ub = np.column_stack([A, norms])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = _solve(c, A_ub, b, [(None, None)] * n + [(None, cap)])
    if res is None:
        # cannot happen for a free radius, kept for safety
        raise LPError("Chebyshev LP unexpectedly infeasible")
    r = float(res.x[-1])
    x = np.asarray(res.x[:n], dtype=float)
    if r >= cap * (1 - 1e-9):
        r = math.inf
    return x, r
