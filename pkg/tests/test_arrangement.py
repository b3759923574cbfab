import numpy as np
import pytest

from tllverify.arrangement import (
    Arrangement,
    EmptyInputError,
    OnHyperplane,
    Region,
    adjacent_regions,
    all_regions,
    base_region,
    enumerate_levelwise,
    region_bound,
    sign_vector,
)
from tllverify.lp import EPS_STRICT
from tllverify.model import AffineFn, Polytope
from tllverify.oracle import exhaustive_regions

XY = [AffineFn([1.0, 0.0], 0.0), AffineFn([0.0, 1.0], 0.0)]
BOX2 = Polytope.cube(2, 2.0)


def test_sign_vector_examples():
    arr = Arrangement(XY)
    assert sign_vector(arr, [-1, -1]) == (-1, -1)
    assert sign_vector(arr, [0.5, -3]) == (1, -1)
    assert sign_vector(Arrangement([AffineFn([1.0], 0.0)]), [0.0]) == OnHyperplane(0)


def test_base_region_perturbs_off_hyperplanes():
    reg = base_region(Arrangement(XY), BOX2)
    assert reg.level == 0
    assert sign_vector(Arrangement(XY), reg.witness) == reg.signs
    assert BOX2.contains(reg.witness)


def test_base_region_missed_hyperplane():
    reg = base_region(Arrangement([AffineFn([1.0], -10.0)]), Polytope.cube(1, 2.0))
    assert reg.signs == (-1,)
    assert abs(reg.witness[0]) < 1e-9


def test_base_region_empty_input():
    empty = Polytope.from_matrix([[1.0], [-1.0]], [-1.0, -1.0])
    with pytest.raises(EmptyInputError):
        base_region(Arrangement([AffineFn([1.0], 0.0)]), empty)
    flat = Polytope.from_matrix([[1.0], [-1.0]], [0.0, 0.0])
    with pytest.raises(EmptyInputError):
        base_region(Arrangement([AffineFn([1.0], 0.0)]), flat)


def test_adjacency_quadrants():
    arr = Arrangement(XY)
    base = base_region(arr, BOX2)
    nbrs = {r.signs for r in adjacent_regions(arr, base, BOX2, base.signs)}
    expected = {tuple(-s if k == i else s for k, s in enumerate(base.signs)) for i in range(2)}
    assert nbrs == expected
    assert all(r.level == 1 for r in adjacent_regions(arr, base, BOX2, base.signs))


def test_adjacency_respects_restriction():
    arr = Arrangement([AffineFn([1.0], 0.0), AffineFn([1.0], -10.0)])
    start = Region((-1, -1), 0, np.array([-1.0]))
    nbrs = adjacent_regions(arr, start, Polytope.cube(1, 2.0), (-1, -1))
    assert [r.signs for r in nbrs] == [(1, -1)]
    assert 0 < nbrs[0].witness[0] <= 2


def test_single_hyperplane_no_level_two():
    arr = Arrangement([AffineFn([1.0], 0.0)])
    box = Polytope.cube(1, 2.0)
    base = base_region(arr, box)
    (lvl1,) = adjacent_regions(arr, base, box, base.signs)
    assert adjacent_regions(arr, lvl1, box, base.signs) == []


def test_two_lines_four_regions():
    res = enumerate_levelwise(Arrangement(XY), BOX2, lambda r: False)
    assert res.status == "EXHAUSTED" and res.count == 4


def test_three_generic_lines_seven_regions():
    fns = [AffineFn([1.0, 0.0], 0.0), AffineFn([0.0, 1.0], 0.0), AffineFn([1.0, 1.0], -1.0)]
    big = Polytope.cube(2, 100.0)
    res = enumerate_levelwise(Arrangement(fns), big, lambda r: False)
    assert res.count == 7 == region_bound(3, 2)
    assert {r.signs for r in all_regions(Arrangement(fns), big)} == exhaustive_regions(fns, big)


def test_stop_on_first_region():
    arr = Arrangement(XY)
    res = enumerate_levelwise(arr, BOX2, lambda r: True)
    assert res.status == "STOPPED" and res.stopped.level == 0 and res.count == 1


def test_duplicate_and_antiparallel_collapse():
    fns = [AffineFn([1.0], 0.0), AffineFn([2.0], 0.0), AffineFn([-1.0], 0.0), AffineFn([0.0], -1.0)]
    arr = Arrangement(fns)
    assert arr.n_unique == 1
    regs = all_regions(arr, Polytope.cube(1, 2.0))
    assert {r.signs for r in regs} == {(1, 1, -1, -1), (-1, -1, 1, -1)}


def _random_arrangement(rng, n, N):
    return [AffineFn(rng.normal(size=n), rng.normal()) for _ in range(N)]


@pytest.mark.parametrize("workers", [1, 3])
def test_random_arrangements_match_oracle(workers):
    rng = np.random.default_rng(11)
    for _ in range(15):
        n = int(rng.integers(1, 4))
        N = int(rng.integers(1, 9))
        fns = _random_arrangement(rng, n, N)
        arr = Arrangement(fns)
        box = Polytope.cube(n, 2.0)
        regs = all_regions(arr, box, workers=workers)
        signs = [r.signs for r in regs]
        assert len(signs) == len(set(signs))
        assert set(signs) == exhaustive_regions(fns, box)
        assert len(signs) <= region_bound(N, n)
        base = next(r for r in regs if r.level == 0)
        for r in regs:
            assert r.level == sum(a != b for a, b in zip(r.signs, base.signs))
            assert sign_vector(arr, r.witness, EPS_STRICT / 2) == r.signs
            assert box.violation(r.witness) <= 0


def test_lp_calls_per_region_bounded():
    rng = np.random.default_rng(5)
    for _ in range(10):
        fns = _random_arrangement(rng, 2, 8)
        res = enumerate_levelwise(Arrangement(fns), BOX2, lambda r: False)
        # one up-front LP per hyperplane, then at most one per candidate flip
        assert res.lp_calls <= 2 + len(fns) + res.count * len(fns)


def test_region_bound_values():
    assert region_bound(3, 2) == 7
    assert region_bound(2, 5) == 4
    assert region_bound(0, 3) == 1
