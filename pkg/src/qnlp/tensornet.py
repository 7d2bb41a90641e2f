"""Tensor-network ansätze: compile diagrams to real tensor networks.

Three lowerings share one network IR.  ``TENSOR`` gives every word box a
single dense parameter tensor shaped by its wire types.  ``MPS`` splits
every parameter tensor of order >= 3 into a bond-linked chain.  ``SPIDER``
splits tensors with more legs than ``max_legs`` into overlapping chunks
whose shared boundary legs meet at 3-ary copy spiders, so the chunks merge
elementwise along the boundary index.

Cups become unnormalized delta nodes (identity matrices); a copy spider is
the generalized Kronecker tensor, 1 exactly when all incident indices
agree.  Contraction fuses delta- and spider-connected legs into shared
einsum indices rather than materializing those tensors.  Gradients are
exact hole contractions: each network is multilinear in every parameter
node, so the derivative with respect to one node is the network contracted
with that node removed and its legs left open, chained with the upstream
cotangent.  A parameter tensor used by several nodes accumulates one hole
term per use.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from qnlp.circuit import Symbol, type_fingerprint
from qnlp.diagram import Diagram, InvalidDiagram, ShapeMismatch, validate
from qnlp.errors import Error
from qnlp.pregroup import Base

_MAX_EINSUM_LABELS = 52


class TensorAnsatz(enum.Enum):
    TENSOR = "tensor"
    SPIDER = "spider"
    MPS = "mps"


@dataclass(frozen=True)
class TensorAnsatzConfig:
    kind: TensorAnsatz
    d_n: int = 2
    d_s: int = 2
    bond_dim: int = 2
    max_legs: int = 2

    def __post_init__(self):
        if self.d_n < 2 or self.d_s < 2:
            raise Error("wire dimensions must be at least 2")
        if self.bond_dim < 1:
            raise Error("bond dimension must be at least 1")
        if self.max_legs < 2:
            raise Error("spider split threshold must be at least 2")

    def dim(self, base: Base) -> int:
        return self.d_n if base is Base.N else self.d_s


@dataclass(frozen=True)
class ParamNode:
    symbol: Symbol
    shape: tuple[int, ...]


@dataclass(frozen=True)
class CupDeltaNode:
    dim: int


@dataclass(frozen=True)
class SpiderCopyNode:
    arity: int
    dim: int


Node = ParamNode | CupDeltaNode | SpiderCopyNode

Leg = tuple[int, int]  # (node index, leg index)


def node_arity(node: Node) -> int:
    if isinstance(node, ParamNode):
        return len(node.shape)
    if isinstance(node, CupDeltaNode):
        return 2
    return node.arity


def node_leg_dims(node: Node) -> tuple[int, ...]:
    if isinstance(node, ParamNode):
        return node.shape
    if isinstance(node, CupDeltaNode):
        return (node.dim, node.dim)
    return (node.dim,) * node.arity


@dataclass(frozen=True)
class Network:
    """Nodes plus binary edges between legs and an ordered open boundary."""

    nodes: tuple[Node, ...]
    edges: tuple[tuple[Leg, Leg], ...]
    outputs: tuple[Leg, ...]

    def param_shapes(self) -> dict[Symbol, tuple[int, ...]]:
        shapes: dict[Symbol, tuple[int, ...]] = {}
        for node in self.nodes:
            if isinstance(node, ParamNode):
                prev = shapes.get(node.symbol)
                if prev is not None and prev != node.shape:
                    raise ShapeMismatch(
                        f"symbol {node.symbol.name} bound to shapes "
                        f"{prev} and {node.shape}"
                    )
                shapes[node.symbol] = node.shape
        return shapes

    def output_dims(self) -> tuple[int, ...]:
        return tuple(node_leg_dims(self.nodes[n])[leg] for n, leg in self.outputs)


def validate_network(net: Network) -> None:
    """Every leg bound exactly once (edge end or output); dims consistent."""
    seen: dict[Leg, str] = {}

    def bind(leg: Leg, where: str):
        n, l = leg
        if not (0 <= n < len(net.nodes)):
            raise Error(f"{where} references missing node {n}")
        if not (0 <= l < node_arity(net.nodes[n])):
            raise Error(f"leg {l} out of range for node {n}")
        if leg in seen:
            raise Error(f"leg {leg} bound twice ({seen[leg]} and {where})")
        seen[leg] = where

    for a, b in net.edges:
        bind(a, "edge")
        bind(b, "edge")
        da = node_leg_dims(net.nodes[a[0]])[a[1]]
        db = node_leg_dims(net.nodes[b[0]])[b[1]]
        if da != db:
            raise Error(f"edge {a}-{b} joins dimensions {da} and {db}")
    for leg in net.outputs:
        bind(leg, "output")
    for n, node in enumerate(net.nodes):
        for l in range(node_arity(node)):
            if (n, l) not in seen:
                raise Error(f"leg ({n}, {l}) is neither bound nor open")


# -- splitting ------------------------------------------------------------


def mps_split(shape: tuple[int, ...], bond: int) -> list[tuple[int, ...]]:
    """Chain shapes for a tensor of order >= 3; order < 3 is unchanged."""
    if len(shape) < 3:
        return [tuple(shape)]
    k = len(shape)
    pieces = [(shape[0], bond)]
    for i in range(1, k - 1):
        pieces.append((bond, shape[i], bond))
    pieces.append((bond, shape[k - 1]))
    return pieces


@dataclass(frozen=True)
class SpiderSplit:
    """Overlapping chunks of a leg list, meeting at 3-ary copy spiders.

    ``chunk_shapes[i]`` covers a contiguous span of the original legs;
    consecutive chunks share exactly one boundary leg.  ``leg_map`` sends
    each original leg either to a chunk leg ("param", chunk, leg) or to
    the free leg of its boundary spider ("spider", ordinal).  Spider
    ordinal ``j`` sits on original leg ``boundaries[j]`` and joins the
    left chunk's last leg with the right chunk's first leg.
    """

    chunk_shapes: tuple[tuple[int, ...], ...]
    boundaries: tuple[int, ...]
    leg_map: tuple[tuple, ...]


def spider_split(shape: tuple[int, ...], max_legs: int) -> SpiderSplit:
    if max_legs < 2:
        raise Error("spider split threshold must be at least 2")
    k = len(shape)
    if k <= max_legs:
        return SpiderSplit(
            (tuple(shape),), (), tuple(("param", 0, i) for i in range(k))
        )
    spans: list[tuple[int, int]] = []
    start = 0
    while True:
        end = min(start + max_legs, k)
        spans.append((start, end))
        if end == k:
            break
        start = end - 1
    chunk_shapes = tuple(tuple(shape[s:e]) for s, e in spans)
    boundaries = tuple(s for s, _ in spans[1:])
    leg_map: list[tuple] = []
    for leg in range(k):
        if leg in boundaries:
            leg_map.append(("spider", boundaries.index(leg)))
        else:
            owner = next(i for i, (s, e) in enumerate(spans) if s <= leg < e)
            leg_map.append(("param", owner, leg - spans[owner][0]))
    return SpiderSplit(chunk_shapes, boundaries, tuple(leg_map))


# -- compilation ----------------------------------------------------------


def compile_network(d: Diagram, cfg: TensorAnsatzConfig) -> Network:
    violations = validate(d)
    if violations:
        raise InvalidDiagram(violations)
    if d.n_caps:
        raise Error("cap wires are not supported by the tensor backend; "
                    "run the normal-form pass first")

    nodes: list[Node] = []
    edges: list[tuple[Leg, Leg]] = []
    box_node: dict[int, int] = {}
    cup_node: dict[int, int] = {}

    for b, box in enumerate(d.boxes):
        shape = tuple(cfg.dim(t.base) for t in box.dom) + tuple(
            cfg.dim(t.base) for t in box.cod
        )
        box_node[b] = len(nodes)
        nodes.append(ParamNode(Symbol(box.name, type_fingerprint(box), 0), shape))
    for c, (wl, _) in enumerate(d.cup_pairs()):
        cup_node[c] = len(nodes)
        nodes.append(CupDeltaNode(cfg.dim(d.wires[wl].stype.base)))

    def leg_of(port, producer: bool) -> Leg:
        if port.owner == "box":
            # box legs are addressed dom-first, then cod
            base = len(d.boxes[port.index].dom) if producer else 0
            return (box_node[port.index], base + port.leg)
        if port.owner == "cup":
            return (cup_node[port.index], port.leg)
        raise Error(f"unsupported port owner: {port.owner}")

    outputs: list[Leg] = [(-1, -1)] * d.n_outputs
    for wire in d.wires:
        src = leg_of(wire.producer, producer=True)
        if wire.consumer.owner == "out":
            outputs[wire.consumer.index] = src
        else:
            edges.append((src, leg_of(wire.consumer, producer=False)))
    net = Network(tuple(nodes), tuple(edges), tuple(outputs))
    return _lower(net, cfg)


def _lower(net: Network, cfg: TensorAnsatzConfig) -> Network:
    if cfg.kind is TensorAnsatz.TENSOR:
        return net

    nodes: list[Node] = []
    leg_map: dict[Leg, Leg] = {}
    extra_edges: list[tuple[Leg, Leg]] = []

    for ni, node in enumerate(net.nodes):
        split_mps = (
            isinstance(node, ParamNode)
            and cfg.kind is TensorAnsatz.MPS
            and len(node.shape) >= 3
        )
        split_spider = (
            isinstance(node, ParamNode)
            and cfg.kind is TensorAnsatz.SPIDER
            and len(node.shape) > cfg.max_legs
        )
        if split_mps:
            pieces = mps_split(node.shape, cfg.bond_dim)
            base = len(nodes)
            for i, shape in enumerate(pieces):
                nodes.append(
                    ParamNode(
                        Symbol(node.symbol.word, node.symbol.type_fingerprint, i),
                        shape,
                    )
                )
            k = len(pieces)
            for i in range(k):
                leg_map[(ni, i)] = (base + i, 0 if i == 0 else 1)
            for i in range(k - 1):
                right = (base + i, 1 if i == 0 else 2)
                extra_edges.append((right, (base + i + 1, 0)))
        elif split_spider:
            split = spider_split(node.shape, cfg.max_legs)
            base = len(nodes)
            for i, shape in enumerate(split.chunk_shapes):
                nodes.append(
                    ParamNode(
                        Symbol(node.symbol.word, node.symbol.type_fingerprint, i),
                        shape,
                    )
                )
            spider_base = len(nodes)
            for j, leg in enumerate(split.boundaries):
                nodes.append(SpiderCopyNode(3, node.shape[leg]))
                left_leg = len(split.chunk_shapes[j]) - 1
                extra_edges.append(((base + j, left_leg), (spider_base + j, 0)))
                extra_edges.append(((base + j + 1, 0), (spider_base + j, 1)))
            for leg, entry in enumerate(split.leg_map):
                if entry[0] == "param":
                    _, chunk, chunk_leg = entry
                    leg_map[(ni, leg)] = (base + chunk, chunk_leg)
                else:
                    leg_map[(ni, leg)] = (spider_base + entry[1], 2)
        else:
            base = len(nodes)
            nodes.append(node)
            for leg in range(node_arity(node)):
                leg_map[(ni, leg)] = (base, leg)

    edges = [(leg_map[a], leg_map[b]) for a, b in net.edges]
    edges.extend(extra_edges)
    outputs = tuple(leg_map[l] for l in net.outputs)
    return Network(tuple(nodes), tuple(edges), outputs)


# -- contraction ----------------------------------------------------------


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


class _Indexer:
    """Fused einsum index classes over all legs of a network.

    Edge-connected legs share an index; a delta or spider node fuses all
    of its own legs into one.  Labels are handed out only to classes the
    contraction touches; classes of pure delta loops stay unlabeled and
    enter as a multiplicative dimension factor.
    """

    def __init__(self, net: Network):
        self.net = net
        self.offsets: list[int] = []
        total = 0
        for node in net.nodes:
            self.offsets.append(total)
            total += node_arity(node)
        self.uf = _UnionFind(total)
        for a, b in net.edges:
            self.uf.union(self._flat(a), self._flat(b))
        for ni, node in enumerate(net.nodes):
            if isinstance(node, (CupDeltaNode, SpiderCopyNode)):
                first = self._flat((ni, 0))
                for l in range(1, node_arity(node)):
                    self.uf.union(first, self._flat((ni, l)))
        self.label_of: dict[int, int] = {}

    def _flat(self, leg: Leg) -> int:
        return self.offsets[leg[0]] + leg[1]

    def label(self, leg: Leg) -> int:
        root = self.uf.find(self._flat(leg))
        if root not in self.label_of:
            self.label_of[root] = len(self.label_of)
        return self.label_of[root]

    def n_labels(self) -> int:
        return len(self.label_of)

    def loop_factor(self) -> float:
        """Dimension product of classes no labeled leg belongs to."""
        seen: set[int] = set()
        factor = 1.0
        for ni, node in enumerate(self.net.nodes):
            for l in range(node_arity(node)):
                root = self.uf.find(self._flat((ni, l)))
                if root in self.label_of or root in seen:
                    continue
                seen.add(root)
                factor *= node_leg_dims(node)[l]
        return factor


def _store_tensor(store: Mapping[Symbol, np.ndarray], node: ParamNode) -> np.ndarray:
    if node.symbol not in store:
        raise ShapeMismatch(f"no tensor bound for symbol {node.symbol.name}")
    t = np.asarray(store[node.symbol], dtype=float)
    if t.shape != node.shape:
        raise ShapeMismatch(
            f"symbol {node.symbol.name}: tensor shape {t.shape} != {node.shape}"
        )
    return t


def contract(net: Network, store: Mapping[Symbol, np.ndarray]) -> np.ndarray:
    """Fully contract; the result is shaped by the open boundary legs."""
    validate_network(net)
    idx = _Indexer(net)

    operands: list = []
    for ni, node in enumerate(net.nodes):
        if not isinstance(node, ParamNode):
            continue
        operands.append(_store_tensor(store, node))
        operands.append([idx.label((ni, l)) for l in range(len(node.shape))])

    out_labels: list[int] = []
    for leg in net.outputs:
        lab = idx.label(leg)
        if lab in out_labels:
            raise Error("two open legs share one fused index; cannot contract")
        out_labels.append(lab)

    if idx.n_labels() > _MAX_EINSUM_LABELS:
        raise Error(
            f"network needs {idx.n_labels()} indices; limit is {_MAX_EINSUM_LABELS}"
        )
    factor = idx.loop_factor()
    if not operands:
        if out_labels:
            raise Error("open legs with no tensor operands")
        return np.array(factor)
    return np.einsum(*operands, out_labels) * factor


def gradient_hole(
    net: Network, store: Mapping[Symbol, np.ndarray], upstream: np.ndarray
) -> dict[Symbol, np.ndarray]:
    """d(upstream . output)/d(tensor) for every parameter symbol.

    Each hole leg gets a fresh output index bridged to its fused class by
    an identity operand, which keeps repeated or open classes well formed.
    """
    validate_network(net)
    idx = _Indexer(net)

    param_indices = [
        ni for ni, node in enumerate(net.nodes) if isinstance(node, ParamNode)
    ]
    # assign labels up front so bridge ids are stable across holes
    for ni in param_indices:
        for l in range(len(net.nodes[ni].shape)):
            idx.label((ni, l))
    out_labels = [idx.label(leg) for leg in net.outputs]

    up = np.asarray(upstream, dtype=float)
    if up.shape != net.output_dims():
        raise ShapeMismatch(
            f"upstream shape {up.shape} does not match outputs {net.output_dims()}"
        )
    factor = idx.loop_factor()
    n_base = idx.n_labels()

    grads: dict[Symbol, np.ndarray] = {
        net.nodes[ni].symbol: np.zeros(net.nodes[ni].shape) for ni in param_indices
    }
    for hole in param_indices:
        hole_node = net.nodes[hole]
        operands: list = []
        for ni in param_indices:
            if ni == hole:
                continue
            node = net.nodes[ni]
            operands.append(_store_tensor(store, node))
            operands.append([idx.label((ni, l)) for l in range(len(node.shape))])
        operands.append(up)
        operands.append(list(out_labels))
        fresh: list[int] = []
        for l in range(len(hole_node.shape)):
            bridge = n_base + l
            operands.append(np.eye(hole_node.shape[l]))
            operands.append([bridge, idx.label((hole, l))])
            fresh.append(bridge)
        if n_base + len(hole_node.shape) > _MAX_EINSUM_LABELS:
            raise Error(
                f"network needs {n_base + len(hole_node.shape)} indices; "
                f"limit is {_MAX_EINSUM_LABELS}"
            )
        grads[hole_node.symbol] += np.einsum(*operands, fresh) * factor
    return grads


# -- serialization --------------------------------------------------------


def network_to_dict(net: Network) -> dict:
    def node_json(node: Node) -> dict:
        if isinstance(node, ParamNode):
            return {
                "kind": "param",
                "symbol": node.symbol.name,
                "shape": list(node.shape),
            }
        if isinstance(node, CupDeltaNode):
            return {"kind": "cup_delta", "dim": node.dim}
        return {"kind": "spider_copy", "arity": node.arity, "dim": node.dim}

    return {
        "nodes": [node_json(n) for n in net.nodes],
        "edges": [[list(a), list(b)] for a, b in net.edges],
        "outputs": [list(l) for l in net.outputs],
    }


def network_from_dict(obj: Mapping) -> Network:
    def node_from(nj: Mapping) -> Node:
        if nj["kind"] == "param":
            return ParamNode(Symbol.from_name(nj["symbol"]), tuple(nj["shape"]))
        if nj["kind"] == "cup_delta":
            return CupDeltaNode(int(nj["dim"]))
        if nj["kind"] == "spider_copy":
            return SpiderCopyNode(int(nj["arity"]), int(nj["dim"]))
        raise Error(f"unknown node kind: {nj['kind']!r}")

    return Network(
        nodes=tuple(node_from(nj) for nj in obj["nodes"]),
        edges=tuple(
            ((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))) for a, b in obj["edges"]
        ),
        outputs=tuple((int(l[0]), int(l[1])) for l in obj["outputs"]),
    )


def network_to_json(net: Network, indent: int | None = 2) -> str:
    return json.dumps(network_to_dict(net), indent=indent)


def network_from_json(text: str) -> Network:
    return network_from_dict(json.loads(text))
