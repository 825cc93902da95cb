"""Tensor networks from circuits, elimination orders, and contraction.

A circuit with fixed basis states on both boundaries becomes a closed
tensor network: every gate contributes a tensor over integer index labels
(one binary dimension per label), and the boundary states are rank-1
tensors absorbing the first and last label of each wire. The index line
graph (vertices = labels, a clique per tensor) drives a greedy elimination
order, and bucket elimination along that order produces the amplitude.

Diagonal gates (CZ, RZ) reuse wire labels instead of minting new ones, and
CNOT is stored rank-3 because it is diagonal in its control. Memory is
exponential in the contraction width, so a width cap refuses oversized
contractions up front instead of thrashing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (
    Circuit,
    KIND_CNOT,
    KIND_CZ,
    KIND_RZ,
    KIND_U4,
    gate_matrix,
)

DEFAULT_WIDTH_CAP = 27  # largest tensor ~2 GiB of complex doubles

_BASIS = (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex))
_CNOT3 = np.zeros((2, 2, 2), dtype=complex)
_CNOT3[0] = np.eye(2)  # control 0: identity on the target
_CNOT3[1] = np.array([[0, 1], [1, 0]])  # control 1: bit flip
_CZ2 = np.array([[1, 1], [1, -1]], dtype=complex)
_MAX_EINSUM_OPERANDS = 24


class MemoryBoundError(RuntimeError):
    """Contraction would allocate a tensor above the width cap."""


@dataclass(frozen=True)
class Tensor:
    """Dense complex tensor: one binary axis per integer index label.

    Data with one extra leading axis is a stack of tensors sharing the same
    labels; the batched contraction path uses this to evaluate many samples
    of a fixed-topology network at once.
    """

    labels: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels within one tensor must be distinct")
        if self.data.ndim not in (len(self.labels), len(self.labels) + 1):
            raise ValueError("data rank does not match label count")


@dataclass
class TensorNetwork:
    tensors: list[Tensor]
    adjacency: dict[int, set[int]]

    @property
    def labels(self) -> set[int]:
        return set(self.adjacency)


def _bit_list(bits, n: int) -> list[int]:
    if isinstance(bits, int):
        if bits < 0 or bits >= 2**n:
            raise ValueError("basis index out of range")
        return [(bits >> w) & 1 for w in range(n)]
    out = [int(b) for b in bits]
    if len(out) != n or any(b not in (0, 1) for b in out):
        raise ValueError(f"need {n} bits")
    return out


def gate_tensor_data(gate, dense_rotations: bool = False) -> np.ndarray:
    """The array a gate contributes to a network (labels handled separately)."""
    if gate.kind == KIND_CZ:
        return _CZ2
    if gate.kind == KIND_RZ and not dense_rotations:
        half = 0.5j * gate.angle
        return np.array([np.exp(-half), np.exp(half)])
    if gate.kind == KIND_CNOT:
        return _CNOT3
    if gate.kind == KIND_U4:
        return gate.matrix.reshape(2, 2, 2, 2)
    return gate_matrix(gate)


def build_network(
    c: Circuit,
    input_bits=0,
    output_bits=0,
    dense_rotations: bool = False,
) -> TensorNetwork:
    """Closed network for <out|C|in>.

    ``dense_rotations`` stores RZ as a full (out, in) tensor like RX/RY, so
    circuits differing only in rotation axes share one network structure;
    the default keeps RZ diagonal.
    """
    in_bits = _bit_list(input_bits, c.n)
    out_bits = _bit_list(output_bits, c.n)
    wire = list(range(c.n))  # current label per wire
    fresh = c.n
    tensors: list[Tensor] = []
    adjacency: dict[int, set[int]] = {w: set() for w in range(c.n)}

    def new_label() -> int:
        nonlocal fresh
        fresh += 1
        return fresh - 1

    def add(labels: tuple[int, ...], data: np.ndarray):
        tensors.append(Tensor(labels, data))
        for a in labels:
            adjacency.setdefault(a, set())
        for i, a in enumerate(labels):
            for b in labels[i + 1 :]:
                adjacency[a].add(b)
                adjacency[b].add(a)

    for w in range(c.n):
        add((wire[w],), _BASIS[in_bits[w]])

    for g in c.gates:
        data = gate_tensor_data(g, dense_rotations)
        if g.kind == KIND_CZ:
            add((wire[g.wires[0]], wire[g.wires[1]]), data)
        elif g.kind == KIND_RZ and not dense_rotations:
            add((wire[g.wires[0]],), data)
        elif g.kind == KIND_CNOT:
            ctrl, tgt = g.wires
            out = new_label()
            add((wire[ctrl], out, wire[tgt]), data)
            wire[tgt] = out
        elif g.kind == KIND_U4:
            a, b = g.wires
            oa, ob = new_label(), new_label()
            add((oa, ob, wire[a], wire[b]), data)
            wire[a], wire[b] = oa, ob
        else:  # H, X, RX, RY, or RZ in dense mode
            w = g.wires[0]
            out = new_label()
            add((out, wire[w]), data)
            wire[w] = out

    for w in range(c.n):
        add((wire[w],), _BASIS[out_bits[w]])

    return TensorNetwork(tensors, adjacency)


@dataclass(frozen=True)
class EliminationOrder:
    order: tuple[int, ...]
    width: int


def _fill_cost(adj: dict[int, set[int]], v: int) -> int:
    nbrs = list(adj[v])
    missing = 0
    for i, a in enumerate(nbrs):
        adj_a = adj[a]
        for b in nbrs[i + 1 :]:
            if b not in adj_a:
                missing += 1
    return missing


def order_indices(net: TensorNetwork, heuristic: str = "min-fill") -> EliminationOrder:
    """Greedy elimination order on the index line graph.

    At each step the cheapest vertex (fewest fill-in edges, or smallest
    degree for ``min-degree``) is eliminated and its neighborhood turned
    into a clique; ties break toward the smallest label. The width is the
    largest neighborhood seen at elimination time, i.e. the largest tensor
    rank bucket elimination will materialize along this order.
    """
    if heuristic not in ("min-fill", "min-degree"):
        raise ValueError(f"unknown heuristic {heuristic!r}")
    adj = {v: set(nb) for v, nb in net.adjacency.items()}
    if not adj:
        raise ValueError("cannot order an empty graph")
    min_fill = heuristic == "min-fill"
    cost = {v: _fill_cost(adj, v) if min_fill else len(adj[v]) for v in adj}
    order: list[int] = []
    width = 0
    while adj:
        v = min(adj, key=lambda u: (cost[u], u))
        nbrs = adj.pop(v)
        del cost[v]
        width = max(width, len(nbrs))
        order.append(v)
        touched = set()
        for a in nbrs:
            adj[a].discard(v)
            touched.add(a)
        nlist = list(nbrs)
        for i, a in enumerate(nlist):
            for b in nlist[i + 1 :]:
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
        if min_fill:
            # fill edges only change costs near the eliminated vertex
            for a in nbrs:
                touched.update(adj[a])
            for u in touched:
                if u in adj:
                    cost[u] = _fill_cost(adj, u)
        else:
            for u in touched:
                if u in adj:
                    cost[u] = len(adj[u])
    return EliminationOrder(tuple(order), width)


def estimate_cost(net: TensorNetwork, order: EliminationOrder) -> tuple[int, float]:
    """(width, flop estimate) of contracting along the order, graph-only."""
    label_sets = [set(t.labels) for t in net.tensors]
    flops = 0.0
    width = 0
    for v in order.order:
        bucket = [s for s in label_sets if v in s]
        if not bucket:
            continue
        union = set().union(*bucket)
        flops += len(bucket) * float(2 ** len(union))
        union.discard(v)
        width = max(width, len(union))
        label_sets = [s for s in label_sets if v not in s]
        if union:
            label_sets.append(union)
    return width, flops


def _einsum_bucket(bucket: list[Tensor], out_labels: tuple[int, ...]) -> Tensor:
    """Multiply every tensor in the bucket, summing labels absent from the output.

    Oversized buckets are reduced in chunks that keep every label open until
    the last call, so the sum happens only after the full product. Labels
    are remapped per call (einsum only accepts small ints); a stacked
    operand keeps its batch axis via one shared extra symbol.
    """
    while len(bucket) > _MAX_EINSUM_OPERANDS:
        head, bucket = bucket[:_MAX_EINSUM_OPERANDS], bucket[_MAX_EINSUM_OPERANDS:]
        partial_out = tuple(sorted(set().union(*(t.labels for t in head))))
        bucket.append(_einsum_once(head, partial_out))
    return _einsum_once(bucket, out_labels)


def _einsum_once(bucket: list[Tensor], out_labels: tuple[int, ...]) -> Tensor:
    local: dict[int, int] = {}
    for t in bucket:
        for a in t.labels:
            local.setdefault(a, len(local))
    batch_sym = len(local)
    batched = False
    args = []
    for t in bucket:
        subs = [local[a] for a in t.labels]
        if t.data.ndim == len(t.labels) + 1:
            subs = [batch_sym] + subs
            batched = True
        args += [t.data, subs]
    out = [local[a] for a in out_labels]
    if batched:
        out = [batch_sym] + out
    return Tensor(out_labels, np.einsum(*args, out))


def contract_amplitude(
    net: TensorNetwork,
    order: EliminationOrder,
    width_cap: int = DEFAULT_WIDTH_CAP,
    _stats: dict | None = None,
) -> complex:
    """Amplitude of a closed network by bucket elimination along the order."""
    result = _contract(net.tensors, net.labels, order, width_cap, _stats)
    return complex(result)


def contract_amplitudes_batch(
    tensors: list[Tensor],
    labels: set[int],
    order: EliminationOrder,
    width_cap: int = DEFAULT_WIDTH_CAP,
) -> np.ndarray:
    """(B,) amplitudes for a stack of same-structure networks.

    Tensors whose data carries a leading batch axis vary per sample; the
    rest are shared. All batched tensors must agree on the batch size.
    """
    return np.atleast_1d(_contract(tensors, labels, order, width_cap, None))


def _contract(tensors, labels, order: EliminationOrder, width_cap: int, _stats):
    if set(order.order) != set(labels):
        raise ValueError("elimination order does not cover the network's labels")
    if order.width > width_cap:
        raise MemoryBoundError(
            f"memory bound: order width {order.width} exceeds cap {width_cap}"
        )
    alive: dict[int, Tensor] = dict(enumerate(tensors))
    by_label: dict[int, set[int]] = {}
    for tid, t in alive.items():
        for a in t.labels:
            by_label.setdefault(a, set()).add(tid)
    next_id = len(alive)
    scalars: list[np.ndarray] = []
    max_rank = 0
    for v in order.order:
        tids = by_label.pop(v, set())
        if not tids:
            continue
        bucket = [alive.pop(tid) for tid in sorted(tids)]
        out_labels = set()
        for t in bucket:
            out_labels.update(t.labels)
        out_labels.discard(v)
        if len(out_labels) > width_cap:
            raise MemoryBoundError(
                f"memory bound: rank {len(out_labels)} exceeds cap {width_cap}"
            )
        for a in out_labels:
            by_label[a].difference_update(tids)
        merged = _einsum_bucket(bucket, tuple(sorted(out_labels)))
        max_rank = max(max_rank, len(merged.labels))
        if merged.labels:
            alive[next_id] = merged
            for a in merged.labels:
                by_label.setdefault(a, set()).add(next_id)
            next_id += 1
        else:
            scalars.append(merged.data)
    if alive:
        raise RuntimeError("contraction left non-scalar tensors behind")
    if _stats is not None:
        _stats["max_rank"] = max_rank
    result = np.asarray(1.0 + 0.0j)
    for s in scalars:
        result = result * s
    return result
