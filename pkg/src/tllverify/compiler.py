"""Compile TLL specs into explicit layered ReLU networks.

A :class:`LayerNet` is a list of dense layers ``z -> W z + b``; ``relu`` layers
clamp at zero, ``linear`` layers do not, and the last layer is always linear.

Two compiled forms are produced.  The standard form keeps the local linear
layer, a 0/1 selector layer and one min network per selector set, mirroring
the max-of-mins structure.  The flattened form drops the separate selector
layer: the first layer of every min network reads all ``N`` local linear
outputs, with zero weights on the ones its selector set does not use.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import block_diag

from .model import DimensionError, MultiTLLSpec, TLLSpec


class Kind(str, enum.Enum):
    RELU = "relu"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class Layer:
    W: np.ndarray
    b: np.ndarray
    kind: Kind

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if W.shape[0] != b.shape[0]:
            raise DimensionError(f"layer has {W.shape[0]} rows but bias of length {b.shape[0]}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


class LayerNet:
    def __init__(self, layers):
        layers = [l if isinstance(l, Layer) else Layer(*l) for l in layers]
        if not layers:
            raise ValueError("a network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].n_in != layers[k - 1].n_out:
                raise DimensionError(
                    f"layer {k} expects {layers[k].n_in} inputs but layer {k - 1} produces {layers[k - 1].n_out}"
                )
        if layers[-1].kind is not Kind.LINEAR:
            raise ValueError("the final layer must be linear")
        self.layers = tuple(layers)

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    @property
    def depth(self) -> int:
        return len(self.layers)

    def neurons(self) -> int:
        return sum(l.n_out for l in self.layers[:-1] if l.kind is Kind.RELU)

    def to_dict(self) -> dict:
        return {"layers": [{"W": l.W.tolist(), "b": l.b.tolist(), "kind": l.kind.value} for l in self.layers]}

    @classmethod
    def from_dict(cls, obj) -> LayerNet:
        return cls([Layer(np.array(l["W"], dtype=float), np.array(l["b"], dtype=float), l["kind"])
                    for l in obj["layers"]])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> LayerNet:
        return cls.from_dict(json.loads(Path(path).read_text()))


def eval_layers(net: LayerNet, x) -> np.ndarray:
    z = np.asarray(x, dtype=float)
    if z.shape[-1] != net.n_in:
        raise DimensionError(f"expected input of length {net.n_in}, got {z.shape[-1]}")
    for layer in net.layers:
        z = z @ layer.W.T + layer.b
        if layer.kind is Kind.RELU:
            z = np.maximum(z, 0.0)
    return z


def linear_net(W, b=None) -> LayerNet:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    b = np.zeros(W.shape[0]) if b is None else b
    return LayerNet([Layer(W, b, Kind.LINEAR)])


def identity_net(k: int) -> LayerNet:
    return linear_net(np.eye(k))


def seq_compose(a: LayerNet, b: LayerNet, fuse: bool = True) -> LayerNet:
    """Network computing ``a(b(x))``.

    The layer lists are concatenated.  With ``fuse`` the linear output layer of
    ``b`` is folded into the first layer of ``a``.
    """
    if a.n_in != b.n_out:
        raise DimensionError(f"cannot feed {b.n_out} outputs into a network with {a.n_in} inputs")
    if not fuse:
        return LayerNet(list(b.layers) + list(a.layers))
    last, first = b.layers[-1], a.layers[0]
    merged = Layer(first.W @ last.W, first.W @ last.b + first.b, first.kind)
    return LayerNet(list(b.layers[:-1]) + [merged] + list(a.layers[1:]))


def _deepen(net: LayerNet) -> LayerNet:
    """Add one layer without changing the function: the output ``y`` is carried
    through ReLU as ``(relu(y), relu(-y))`` and recombined."""
    last = net.layers[-1]
    split = Layer(np.vstack([last.W, -last.W]), np.concatenate([last.b, -last.b]), Kind.RELU)
    k = last.n_out
    join = Layer(np.hstack([np.eye(k), -np.eye(k)]), np.zeros(k), Kind.LINEAR)
    return LayerNet(list(net.layers[:-1]) + [split, join])


def pad_to_depth(net: LayerNet, depth: int) -> LayerNet:
    while net.depth < depth:
        net = _deepen(net)
    return net


def parallel_compose(a: LayerNet, b: LayerNet) -> LayerNet:
    """Network mapping ``x`` to the concatenation ``(a(x), b(x))``."""
    if a.n_in != b.n_in:
        raise DimensionError("parallel composition needs equal input dimensions")
    depth = max(a.depth, b.depth)
    a, b = pad_to_depth(a, depth), pad_to_depth(b, depth)
    layers = []
    for k, (la, lb) in enumerate(zip(a.layers, b.layers)):
        if la.kind is not lb.kind:
            raise ValueError(f"layer {k}: cannot stack a {la.kind.value} layer with a {lb.kind.value} layer")
        W = np.vstack([la.W, lb.W]) if k == 0 else block_diag(la.W, lb.W)
        layers.append(Layer(W, np.concatenate([la.b, lb.b]), la.kind))
    return LayerNet(layers)


def parallel_all(nets) -> LayerNet:
    nets = list(nets)
    out = nets[0]
    for net in nets[1:]:
        out = parallel_compose(out, net)
    return out


# min(u, v) = relu(v) - relu(-v) - relu(v - u)
_MIN2_HIDDEN = np.array([[0.0, 1.0], [0.0, -1.0], [-1.0, 1.0]])
_MIN2_OUT = np.array([[1.0, -1.0, -1.0]])
_CARRY_HIDDEN = np.array([[1.0], [-1.0]])
_CARRY_OUT = np.array([[1.0, -1.0]])


def _min_stage(k: int) -> LayerNet:
    """Halve ``k`` inputs by pairwise minima; an odd last input is carried."""
    pairs, odd = divmod(k, 2)
    hidden_blocks = [_MIN2_HIDDEN] * pairs + [_CARRY_HIDDEN] * odd
    out_blocks = [_MIN2_OUT] * pairs + [_CARRY_OUT] * odd
    H = block_diag(*hidden_blocks)
    O = block_diag(*out_blocks)
    return LayerNet([Layer(H, np.zeros(H.shape[0]), Kind.RELU), Layer(O, np.zeros(O.shape[0]), Kind.LINEAR)])


def min_net(k: int) -> LayerNet:
    """Exact minimum of ``k`` inputs as a balanced tree of two-input min nets."""
    if k < 1:
        raise ValueError("min_net needs at least one input")
    net = identity_net(k)
    width = k
    while width > 1:
        net = seq_compose(_min_stage(width), net)
        width = (width + 1) // 2
    return net


def max_net(k: int) -> LayerNet:
    """``max(x) = -min(-x)``."""
    neg = linear_net(-np.eye(k))
    return seq_compose(linear_net(-np.eye(1)), seq_compose(min_net(k), neg))


def selector_matrix(s, N: int) -> np.ndarray:
    """``N x N`` matrix of standard basis rows covering ``s`` (indices repeated to fill)."""
    order = sorted(s)
    seq = order + [order[-1]] * (N - len(order))
    S = np.zeros((N, N))
    S[np.arange(N), seq] = 1.0
    return S


def compile_tll(spec: TLLSpec, flatten: bool = False) -> LayerNet:
    """Layered ReLU network equal to ``max_j min_{i in s_j} L_i`` everywhere."""
    spec.check()
    N, M = spec.N, spec.M
    local = LayerNet([Layer(spec.W, spec.b, Kind.LINEAR)])
    mins = min_net(N)
    branches = []
    for s in spec.selectors:
        S = selector_matrix(s, N)
        if flatten:
            first = mins.layers[0]
            branch = LayerNet([Layer(first.W @ S, first.b, first.kind)] + list(mins.layers[1:]))
        else:
            branch = seq_compose(mins, linear_net(S), fuse=False)
        branches.append(branch)
    lattice = parallel_all(branches)
    # the M branches all read the same N local outputs
    lattice = seq_compose(max_net(M), lattice, fuse=True)
    return seq_compose(lattice, local, fuse=False)


def compile_multi(spec: MultiTLLSpec, flatten: bool = False) -> LayerNet:
    return parallel_all(compile_tll(comp, flatten) for comp in spec.outputs)
