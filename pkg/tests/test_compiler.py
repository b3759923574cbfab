import itertools

import numpy as np
import pytest

from tllverify.compiler import (
    Kind,
    Layer,
    LayerNet,
    compile_multi,
    compile_tll,
    eval_layers,
    identity_net,
    linear_net,
    max_net,
    min_net,
    pad_to_depth,
    parallel_compose,
    seq_compose,
)
from tllverify.model import DimensionError, MultiTLLSpec, TLLSpec, eval_multi, eval_scalar, eval_scalar_batch

from conftest import random_spec


def test_eval_layers_examples():
    assert eval_layers(identity_net(3), [1.0, -2.0, 3.0]).tolist() == [1.0, -2.0, 3.0]
    relu = LayerNet([Layer([[1.0]], [0.0], Kind.RELU), Layer([[1.0]], [0.0], Kind.LINEAR)])
    assert eval_layers(relu, [-3.0]).tolist() == [0.0]
    split = LayerNet([Layer([[1.0], [-1.0]], [0, 0], Kind.RELU), Layer([[1.0, -1.0]], [0.0], Kind.LINEAR)])
    assert eval_layers(split, [5.0])[0] == 5.0 and eval_layers(split, [-5.0])[0] == -5.0


def test_layer_invariants():
    with pytest.raises(DimensionError):
        LayerNet([Layer(np.eye(2), np.zeros(2), Kind.RELU), Layer(np.eye(3), np.zeros(3), Kind.LINEAR)])
    with pytest.raises(ValueError):
        LayerNet([Layer(np.eye(2), np.zeros(2), Kind.RELU)])
    with pytest.raises(DimensionError):
        eval_layers(identity_net(2), [1.0])


def test_seq_compose():
    assert eval_layers(seq_compose(identity_net(2), identity_net(2)), [3.0, 4.0]).tolist() == [3.0, 4.0]
    pair = linear_net([[1.0, 2.0], [-1.0, 0.5]], [0.5, -1.0])
    net = seq_compose(min_net(2), pair)
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(20, 2)):
        assert np.isclose(eval_layers(net, x)[0], min(x[0] + 2 * x[1] + 0.5, -x[0] + 0.5 * x[1] - 1.0))
    with pytest.raises(DimensionError):
        seq_compose(identity_net(3), identity_net(2))


def test_seq_compose_unfused_concatenates():
    a, b = min_net(2), linear_net(np.ones((2, 1)))
    assert seq_compose(a, b, fuse=False).depth == a.depth + b.depth


def test_parallel_compose():
    dup = parallel_compose(identity_net(1), identity_net(1))
    assert eval_layers(dup, [2.5]).tolist() == [2.5, 2.5]
    pre = parallel_compose(linear_net([[1.0]]), linear_net([[-1.0]]))
    assert eval_layers(pre, [3.0]).tolist() == [3.0, -3.0]
    deep = seq_compose(min_net(2), linear_net([[1.0], [-1.0]]))
    mixed = parallel_compose(identity_net(1), deep)
    for x in (-2.0, 0.0, 1.5):
        assert eval_layers(mixed, [x]).tolist() == [x, -abs(x)]


def test_pad_to_depth_preserves_values():
    net = pad_to_depth(linear_net([[2.0, -1.0]], [0.5]), 4)
    assert net.depth == 4
    assert np.isclose(eval_layers(net, [1.0, 3.0])[0], -0.5)


def test_min_max_examples():
    assert eval_layers(min_net(2), [3.0, 5.0])[0] == 3.0
    assert eval_layers(max_net(3), [-1.0, 0.0, 7.0])[0] == 7.0
    assert eval_layers(min_net(1), [4.2])[0] == 4.2


@pytest.mark.parametrize("k", range(1, 7))
def test_min_max_exact_over_sign_patterns(k):
    rng = np.random.default_rng(k)
    for signs in itertools.product((-1.0, 1.0), repeat=k):
        x = np.array(signs) * rng.uniform(0.1, 10, size=k)
        assert eval_layers(min_net(k), x)[0] == pytest.approx(x.min(), abs=1e-12)
        assert eval_layers(max_net(k), x)[0] == pytest.approx(x.max(), abs=1e-12)
    X = rng.normal(size=(500, k)) * 100
    assert np.allclose(eval_layers(min_net(k), X)[:, 0], X.min(axis=1), atol=1e-9)


@pytest.mark.parametrize("flatten", [False, True])
def test_compile_abs(abs_spec, flatten):
    net = compile_tll(abs_spec, flatten)
    X = np.random.default_rng(0).uniform(-3, 3, size=(100, 1))
    assert np.max(np.abs(eval_layers(net, X)[:, 0] - eval_scalar_batch(abs_spec, X))) <= 1e-9


def test_compile_affine():
    spec = TLLSpec([[2.0]], [1.0], [[0]])
    for flatten in (False, True):
        assert eval_layers(compile_tll(spec, flatten), [3.0])[0] == pytest.approx(7.0)


@pytest.mark.parametrize("flatten", [False, True])
def test_compile_random_8x8(flatten):
    rng = np.random.default_rng(1)
    spec = random_spec(rng, 2, 8, 8)
    X = rng.uniform(-3, 3, size=(1000, 2))
    net = compile_tll(spec, flatten)
    assert np.max(np.abs(eval_layers(net, X)[:, 0] - eval_scalar_batch(spec, X))) <= 1e-6


def test_standard_form_selector_layer_is_zero_one():
    spec = random_spec(np.random.default_rng(2), 2, 6, 4)
    net = compile_tll(spec)
    sel = net.layers[1]
    assert sel.kind is Kind.LINEAR
    assert set(np.unique(sel.W)) <= {0.0, 1.0}
    assert np.all(sel.W.sum(axis=1) == 1.0)
    assert np.all(sel.b == 0)


def test_flattened_form_reads_all_outputs():
    spec = TLLSpec(np.arange(4.0)[:, None], np.zeros(4), [[0, 1], [2, 3]])
    flat = compile_tll(spec, flatten=True)
    assert flat.layers[1].n_in == spec.N
    assert flat.depth == compile_tll(spec).depth - 1


def test_compile_multi_and_export_roundtrip(tmp_path, abs_spec, negabs_pair_spec):
    multi = MultiTLLSpec([abs_spec, negabs_pair_spec])
    net = compile_multi(multi)
    net.save(tmp_path / "net.json")
    back = LayerNet.load(tmp_path / "net.json")
    for x in (-1.5, 0.0, 2.0):
        assert np.allclose(eval_layers(back, [x]), eval_multi(multi, [x]))
