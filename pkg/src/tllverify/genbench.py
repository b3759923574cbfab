"""Random TLL/property generation and the benchmark harness.

Networks are drawn so that the local linear functions intersect near the
origin, and properties are drawn from a doubled empirical output range so
that a mix of SAT and UNSAT instances results.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .arrangement import VerificationTimeout
from .model import Polytope, TLLSpec, eval_scalar_batch
from .verifier import Side, verify_scalar

log = logging.getLogger(__name__)

CSV_FIELDS = ["instance_id", "n", "N", "M", "seed", "side", "bound", "status",
              "time_ms", "lp_calls", "regions", "timed_out"]

SCALE_FLOOR = 1e-3
MAX_SELECTOR_DRAWS = 10**5


class GenerationError(ValueError):
    pass


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _random_antichain(N: int, M: int, rng: np.random.Generator) -> list[frozenset[int]]:
    """``M`` nonempty subsets of ``range(N)``, none contained in another.

    Greedy rejection sampling can paint itself into a corner (a large early
    set blocks everything else), so the family is restarted after a run of
    consecutive rejections.  All draws count against one budget.
    """
    if M > math.comb(N, N // 2):
        raise GenerationError(f"no antichain of {M} subsets of a {N}-element set exists")
    stall_limit = max(64, 4 * 2**min(N, 16))
    chosen: list[frozenset[int]] = []
    stalled = 0
    for _ in range(MAX_SELECTOR_DRAWS):
        bits = rng.random(N) < 0.5
        s = frozenset(np.flatnonzero(bits).tolist())
        if not s or any(s <= t or t <= s for t in chosen):
            stalled += 1
            if stalled > stall_limit:
                chosen, stalled = [], 0
            continue
        stalled = 0
        chosen.append(s)
        if len(chosen) == M:
            return chosen
    raise GenerationError(f"selector sampling exceeded {MAX_SELECTOR_DRAWS} draws (N={N}, M={M})")


def gen_tll(n: int, N: int, M: int, seed) -> TLLSpec:
    rng = _rng(seed)
    W = rng.normal(0.0, 0.1, size=(N, n))
    b = rng.normal(0.0, 1.0, size=N)
    sels = _random_antichain(N, M, rng)
    xs = []
    for s in sels:
        idx = sorted(s)
        x, *_ = np.linalg.lstsq(W[idx], b[idx], rcond=None)
        xs.append(x)
    scale = np.maximum(SCALE_FLOOR, np.max(np.abs(np.array(xs)), axis=0))
    return TLLSpec(W * scale[None, :], b, [sorted(s) for s in sels])


def gen_property(spec: TLLSpec, P_X: Polytope | tuple, seed, K: int = 10_000) -> tuple[Side, float]:
    """Random side (fair coin) and a bound uniform on the doubled sample range."""
    if K < 1:
        raise ValueError("need at least one sample")
    if isinstance(P_X, Polytope):
        bounds = P_X.box_bounds()
        if bounds is None:
            raise ValueError("property generation requires an axis-aligned box")
    else:
        bounds = P_X
    lo, hi = (np.asarray(v, dtype=float) for v in bounds)
    rng = _rng(seed)
    side = Side.LOWER if rng.random() < 0.5 else Side.UPPER
    X = rng.uniform(lo, hi, size=(K, len(lo)))
    y = eval_scalar_batch(spec, X)
    mn, mx = float(y.min()), float(y.max())
    center, width = 0.5 * (mn + mx), mx - mn
    bound = float(rng.uniform(center - width, center + width)) if width > 0 else center
    return side, bound


def instance_seed(seed: int, n: int, N: int, M: int, idx: int) -> int:
    return int(np.random.SeedSequence([seed, n, N, M, idx]).generate_state(1)[0])


@dataclass
class Group:
    n: int
    N: int
    M: int
    count: int
    name: str = ""


@dataclass
class SuiteConfig:
    groups: list[Group]
    seed: int = 0
    timeout_s: float = 300.0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    half_width: float = 2.0
    samples: int = 10_000

    @classmethod
    def from_dict(cls, obj: dict) -> SuiteConfig:
        if not isinstance(obj, dict) or "groups" not in obj:
            raise ValueError("suite config needs a 'groups' list")
        groups = []
        for k, g in enumerate(obj["groups"]):
            try:
                n_vals = g["n"] if isinstance(g["n"], list) else [g["n"]]
                N_vals = g["N"] if isinstance(g["N"], list) else [g["N"]]
                for n in n_vals:
                    for N in N_vals:
                        M = N if g.get("M", "N") == "N" else g["M"]
                        groups.append(Group(int(n), int(N), int(M), int(g["count"]), g.get("name", "")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"groups[{k}]: bad group entry ({exc})") from exc
        known = {"groups", "seed", "timeout_s", "workers", "half_width", "samples"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(groups)
        for key in known - {"groups"}:
            if key in obj and obj[key] is not None:
                setattr(cfg, key, type(getattr(cfg, key))(obj[key]))
        return cfg

    @classmethod
    def load(cls, path) -> SuiteConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


PRESETS = {
    # input-dimension sweep at fixed N = M = 64
    "exp1": {"groups": [{"name": "exp1", "n": list(range(1, 31)), "N": 64, "count": 20}]},
    # size sweep at n = 15
    "exp2": {"groups": [{"name": "exp2", "n": 15, "N": [16, 32, 64, 128, 256, 512], "count": 20}]},
    "exp3": {"groups": [{"name": "exp3", "n": 2, "N": [8, 16, 24, 32, 40, 48, 56, 64], "count": 30}]},
    "desk": {"groups": [{"name": "desk", "n": 2, "N": [8, 16, 24], "count": 30}]},
    "desk-exp2": {"groups": [{"name": "desk-exp2", "n": 15, "N": [16, 32], "count": 10}]},
}


def preset(name: str, **overrides) -> SuiteConfig:
    obj = dict(PRESETS[name])
    obj.update({k: v for k, v in overrides.items() if v is not None})
    return SuiteConfig.from_dict(obj)


def iter_instances(cfg: SuiteConfig):
    for g in cfg.groups:
        for idx in range(g.count):
            yield f"n{g.n}_N{g.N}_M{g.M}_{idx:03d}", g, instance_seed(cfg.seed, g.n, g.N, g.M, idx)


def make_instance(n: int, N: int, M: int, seed: int, half_width: float = 2.0, samples: int = 10_000):
    spec = gen_tll(n, N, M, seed)
    P_X = Polytope.cube(n, half_width)
    side, bound = gen_property(spec, P_X, seed + 1, samples)
    return spec, P_X, side, bound


def run_instance(instance_id: str, g: Group, seed: int, cfg: SuiteConfig) -> dict:
    spec, P_X, side, bound = make_instance(g.n, g.N, g.M, seed, cfg.half_width, cfg.samples)
    row = {"instance_id": instance_id, "n": g.n, "N": g.N, "M": g.M, "seed": seed,
           "side": side.value, "bound": repr(bound)}
    t0 = time.perf_counter()
    try:
        v = verify_scalar(spec, P_X, side, bound, workers=cfg.workers, timeout_s=cfg.timeout_s)
    except VerificationTimeout:
        row.update(status="TIMEOUT", time_ms=f"{(time.perf_counter() - t0) * 1e3:.3f}",
                   lp_calls="", regions="", timed_out=1)
        return row
    except Exception as exc:  # recorded, never silently dropped
        log.exception("instance %s failed", instance_id)
        row.update(status=f"ERROR:{type(exc).__name__}", time_ms=f"{(time.perf_counter() - t0) * 1e3:.3f}",
                   lp_calls="", regions="", timed_out=0)
        return row
    row.update(status=v.status.value, time_ms=f"{v.stats['time_ms']:.3f}",
               lp_calls=v.stats["lp_calls"], regions=v.stats["regions"], timed_out=0)
    return row


def _finished_ids(path: Path) -> set[str]:
    if not path.exists():
        return set()
    with path.open(newline="") as fh:
        return {r["instance_id"] for r in csv.DictReader(fh)}


def run_suite(cfg: SuiteConfig, out_csv, resume: bool = False) -> list[dict]:
    """Verify every configured instance, appending one CSV row per instance."""
    out_csv = Path(out_csv)
    done = _finished_ids(out_csv) if resume else set()
    fresh = not (resume and out_csv.exists())
    rows = []
    with out_csv.open("w" if fresh else "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if fresh:
            writer.writeheader()
            fh.flush()
        for instance_id, g, seed in iter_instances(cfg):
            if instance_id in done:
                continue
            row = run_instance(instance_id, g, seed, cfg)
            writer.writerow(row)
            fh.flush()
            rows.append(row)
            log.info("%s %s %s ms", instance_id, row["status"], row["time_ms"])
    return rows


def read_results(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _quantiles(values: list[float]) -> dict:
    if not values:
        return {"min": None, "q1": None, "median": None, "q3": None, "max": None}
    q = np.quantile(np.array(values), [0.0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(["min", "q1", "median", "q3", "max"], (float(v) for v in q)))


def summarize(rows: Iterable[dict]) -> dict:
    """Per-size time quantiles (timeouts excluded), timeout counts and a cactus ordering."""
    groups: dict[tuple[int, int, int], list[dict]] = {}
    for r in rows:
        groups.setdefault((int(r["n"]), int(r["N"]), int(r["M"])), []).append(r)
    report = {"groups": [], "cactus_ms": []}
    solved = []
    for (n, N, M), rs in sorted(groups.items()):
        timeouts = sum(int(r["timed_out"]) for r in rs)
        errors = sum(1 for r in rs if r["status"].startswith("ERROR"))
        times = [float(r["time_ms"]) for r in rs if int(r["timed_out"]) == 0 and not r["status"].startswith("ERROR")]
        solved.extend(times)
        entry = {"n": n, "N": N, "M": M, "count": len(rs), "timeouts": timeouts, "errors": errors,
                 "sat": sum(1 for r in rs if r["status"] == "SAT"),
                 "unsat": sum(1 for r in rs if r["status"] == "UNSAT")}
        entry.update(_quantiles(times))
        report["groups"].append(entry)
    report["cactus_ms"] = sorted(solved)
    return report


def gnuplot_table(report: dict) -> str:
    lines = ["# n N M count timeouts min q1 median q3 max (ms)"]
    for g in report["groups"]:
        vals = [g[k] for k in ("min", "q1", "median", "q3", "max")]
        cells = ["nan" if v is None else f"{v:.3f}" for v in vals]
        lines.append(" ".join(str(g[k]) for k in ("n", "N", "M", "count", "timeouts")) + " " + " ".join(cells))
    return "\n".join(lines) + "\n"
