import math

import numpy as np
import pytest

from tllverify.model import AffineFn, Polytope, TLLSpec, eval_scalar_batch
from tllverify.oracle import (
    GuardExceeded,
    exhaustive_regions,
    oracle_lb_signs,
    oracle_lb_tuple,
    oracle_ub,
    sample_falsify,
    sup_over,
    tuple_index_sets,
)
from tllverify.verifier import Side, Status

from conftest import random_spec


def test_sup_examples(abs_spec, negabs_spec, interval):
    assert math.isclose(sup_over(abs_spec, interval)[0], 2.0, abs_tol=1e-9)
    assert math.isclose(sup_over(negabs_spec, interval)[0], 0.0, abs_tol=1e-9)
    affine = TLLSpec([[2.0]], [1.0], [[0]])
    assert math.isclose(sup_over(affine, interval)[0], 5.0, abs_tol=1e-9)


def test_oracle_ub_verdicts(abs_spec, interval):
    assert oracle_ub(abs_spec, interval, 2.5).status is Status.SAT
    assert oracle_ub(abs_spec, interval, 1.0).status is Status.UNSAT


def test_lb_tuple_examples(abs_spec, interval):
    assert oracle_lb_tuple(abs_spec, interval, 0.5).status is Status.UNSAT
    assert oracle_lb_tuple(abs_spec, interval, -0.1).status is Status.SAT
    single = TLLSpec([[1.0]], [0.0], [[0]])
    v = oracle_lb_tuple(single, interval, 0.0)
    assert v.status is Status.UNSAT and v.witness[0] < 0


def test_lb_signs_examples(abs_spec, interval):
    assert oracle_lb_signs(abs_spec, interval, 0.5).status is Status.UNSAT
    assert oracle_lb_signs(abs_spec, interval, -0.1).status is Status.SAT
    single = TLLSpec([[1.0]], [0.0], [[0]])
    assert oracle_lb_signs(single, interval, -2.5).status is Status.SAT


def test_tuple_sets_fold_duplicates():
    spec = TLLSpec(np.eye(3)[:, :1], np.zeros(3), [[0, 1], [1, 2]])
    assert tuple_index_sets(spec) == {frozenset({0, 1}), frozenset({1}), frozenset({0, 2}), frozenset({1, 2})}


def test_guards():
    rng = np.random.default_rng(0)
    big = random_spec(rng, 1, 21, 2)
    with pytest.raises(GuardExceeded):
        oracle_lb_signs(big, Polytope.cube(1), 0.0)
    wide = TLLSpec(rng.normal(size=(10, 1)), rng.normal(size=10), [list(range(10))] * 7)
    with pytest.raises(GuardExceeded):
        oracle_lb_tuple(wide, Polytope.cube(1), 0.0)
    with pytest.raises(GuardExceeded):
        exhaustive_regions([AffineFn([1.0], float(k)) for k in range(17)], Polytope.cube(1))


def test_lb_oracles_agree():
    rng = np.random.default_rng(9)
    for _ in range(40):
        n = int(rng.integers(1, 4))
        spec = random_spec(rng, n, int(rng.integers(2, 7)), int(rng.integers(1, 5)), max_sel=4)
        P = Polytope.cube(n, 2.0)
        a = float(rng.uniform(-2, 2))
        assert oracle_lb_tuple(spec, P, a).status is oracle_lb_signs(spec, P, a).status


def test_sup_dominates_samples():
    rng = np.random.default_rng(10)
    for _ in range(10):
        spec = random_spec(rng, 2, 6, 4)
        P = Polytope.cube(2, 2.0)
        sup, _ = sup_over(spec, P)
        y = eval_scalar_batch(spec, rng.uniform(-2, 2, size=(100_000, 2)))
        assert sup >= y.max() - 1e-9
        assert sup - y.max() < 0.05
        assert oracle_ub(spec, P, sup - 1e-3).status is Status.UNSAT
        assert oracle_ub(spec, P, sup + 1e-3).status is Status.SAT


def test_exhaustive_prune_matches_plain():
    rng = np.random.default_rng(12)
    for _ in range(10):
        fns = [AffineFn(rng.normal(size=2), rng.normal()) for _ in range(6)]
        P = Polytope.cube(2, 2.0)
        assert exhaustive_regions(fns, P) == exhaustive_regions(fns, P, prune=False)


def test_sample_falsify(abs_spec, interval):
    x = sample_falsify(abs_spec, interval, Side.UPPER, 1.0, K=1000, seed=0)
    assert x is not None and abs(x[0]) > 1
    assert sample_falsify(abs_spec, interval, Side.UPPER, 3.0, K=1000) is None
    assert sample_falsify(abs_spec, interval, Side.UPPER, 1.0, K=0) is None
