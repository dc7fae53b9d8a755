"""Network data model, flows, residual arcs and JSON (de)serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    DanglingEndpoint,
    DuplicateLabel,
    InfeasibleFlow,
    NegativeCapacity,
    SelfLoop,
    UnbalancedSupplies,
)
from .exactnum import (
    UNBOUNDED,
    Capacity,
    as_capacity,
    as_rational,
    format_capacity,
    format_rational,
    lcm,
    parse_capacity,
    parse_rational,
)

ZERO = Fraction(0)


class Direction(IntEnum):
    """Orientation of a residual arc. Forward sorts before Backward."""

    FORWARD = 0
    BACKWARD = 1

    @property
    def code(self) -> str:
        return "F" if self is Direction.FORWARD else "B"

    @classmethod
    def from_code(cls, code: str) -> "Direction":
        if code in ("F", "fwd", "forward", "+"):
            return cls.FORWARD
        if code in ("B", "bwd", "backward", "-"):
            return cls.BACKWARD
        raise ValueError(f"unknown direction code {code!r}")


FORWARD = Direction.FORWARD
BACKWARD = Direction.BACKWARD


@dataclass(frozen=True)
class Node:
    id: int
    balance: Fraction = ZERO
    label: str | None = None


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    cost: Fraction
    capacity: Capacity
    label: str | None = None


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    arcs: tuple[Arc, ...]
    source: int | None = None
    sink: int | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def node_by_label(self, label: str) -> int:
        for node in self.nodes:
            if node.label == label:
                return node.id
        raise KeyError(label)

    def arc_by_label(self, label: str) -> int:
        for arc in self.arcs:
            if arc.label == label:
                return arc.id
        raise KeyError(label)

    def node_name(self, v: int) -> str:
        label = self.nodes[v].label
        return label if label is not None else str(v)


class NetworkBuilder:
    """Incremental construction helper; ids are handed out densely in call order."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._arcs: list[Arc] = []
        self._by_label: dict[str, int] = {}

    def node(self, label=None, balance=0) -> int:
        nid = len(self._nodes)
        self._nodes.append(Node(nid, as_rational(balance), label))
        if label is not None:
            if label in self._by_label:
                raise DuplicateLabel(label)
            self._by_label[label] = nid
        return nid

    def set_balance(self, v: int, balance) -> None:
        old = self._nodes[v]
        self._nodes[v] = Node(old.id, as_rational(balance), old.label)

    def add_balance(self, v: int, delta) -> None:
        self.set_balance(v, self._nodes[v].balance + as_rational(delta))

    def arc(self, tail: int, head: int, cost, capacity, label=None) -> int:
        aid = len(self._arcs)
        self._arcs.append(Arc(aid, tail, head, as_rational(cost), as_capacity(capacity), label))
        return aid

    def __getitem__(self, label: str) -> int:
        return self._by_label[label]

    def build(self, source=None, sink=None) -> Network:
        return Network(tuple(self._nodes), tuple(self._arcs), source, sink)


@dataclass
class Flow:
    """Per-arc flow values, indexed by ArcId."""

    values: list[Fraction]

    @classmethod
    def zero(cls, net: Network) -> "Flow":
        return cls([ZERO] * net.n_arcs)

    @classmethod
    def from_mapping(cls, net: Network, mapping: dict[int, object]) -> "Flow":
        values = [ZERO] * net.n_arcs
        for aid, val in mapping.items():
            values[int(aid)] = as_rational(val)
        return cls(values)

    def __getitem__(self, aid: int) -> Fraction:
        return self.values[aid]

    def __setitem__(self, aid: int, value) -> None:
        self.values[aid] = as_rational(value)

    def __len__(self):
        return len(self.values)

    def copy(self) -> "Flow":
        return Flow(list(self.values))

    def nonzero(self) -> dict[int, Fraction]:
        return {i: v for i, v in enumerate(self.values) if v != 0}


@dataclass(frozen=True)
class ResidualArc:
    base: int
    direction: Direction
    tail: int
    head: int
    residual_capacity: Capacity
    residual_cost: Fraction

    @property
    def key(self) -> tuple[int, int]:
        return (self.base, int(self.direction))


def validate_network(net: Network) -> None:
    """Raise a NetworkError subclass unless ``net`` is well formed."""
    total = sum((node.balance for node in net.nodes), ZERO)
    if total != 0:
        raise UnbalancedSupplies(total)
    n = net.n_nodes
    for i, node in enumerate(net.nodes):
        if node.id != i:
            raise DanglingEndpoint(f"node {node.id} stored at position {i}")
    for i, arc in enumerate(net.arcs):
        if arc.id != i:
            raise DanglingEndpoint(arc.id)
        if not (0 <= arc.tail < n and 0 <= arc.head < n):
            raise DanglingEndpoint(arc.id)
        if arc.tail == arc.head:
            raise SelfLoop(arc.id)
        if arc.capacity is not UNBOUNDED and arc.capacity < 0:
            raise NegativeCapacity(arc.id)
    for v in (net.source, net.sink):
        if v is not None and not 0 <= v < n:
            raise DanglingEndpoint(f"terminal {v}")
    seen: set[str] = set()
    for label in [nd.label for nd in net.nodes] + [a.label for a in net.arcs]:
        if label is None:
            continue
        if label in seen:
            raise DuplicateLabel(label)
        seen.add(label)


def check_capacities(net: Network, flow: Flow) -> None:
    if len(flow) != net.n_arcs:
        raise InfeasibleFlow(detail=f"flow has {len(flow)} entries for {net.n_arcs} arcs", node=-1)
    for arc in net.arcs:
        x = flow[arc.id]
        if x < 0 or (arc.capacity is not UNBOUNDED and x > arc.capacity):
            raise InfeasibleFlow(arc=arc.id, detail=f"value {x} outside [0, {arc.capacity}]")


def excess(net: Network, flow: Flow) -> list[Fraction]:
    """outflow(v) - inflow(v) for every node."""
    out = [ZERO] * net.n_nodes
    for arc in net.arcs:
        x = flow[arc.id]
        if x:
            out[arc.tail] += x
            out[arc.head] -= x
    return out


def validate_flow(net: Network, flow: Flow, routed=ZERO) -> None:
    """Check bounds and conservation; ``routed`` units have left source for sink."""
    check_capacities(net, flow)
    routed = as_rational(routed)
    ex = excess(net, flow)
    for node in net.nodes:
        expected = node.balance
        if routed:
            if node.id == net.source:
                expected += routed
            if node.id == net.sink:
                expected -= routed
        if ex[node.id] != expected:
            raise InfeasibleFlow(node=node.id, detail=f"excess {ex[node.id]} != {expected}")


def residual_network(net: Network, flow: Flow) -> list[ResidualArc]:
    check_capacities(net, flow)
    out = []
    for arc in net.arcs:
        x = flow[arc.id]
        fwd = UNBOUNDED if arc.capacity is UNBOUNDED else arc.capacity - x
        if fwd is UNBOUNDED or fwd > 0:
            out.append(ResidualArc(arc.id, FORWARD, arc.tail, arc.head, fwd, arc.cost))
        if x > 0:
            out.append(ResidualArc(arc.id, BACKWARD, arc.head, arc.tail, x, -arc.cost))
    return out


def flow_cost(net: Network, flow: Flow) -> Fraction:
    return sum((arc.cost * flow[arc.id] for arc in net.arcs if flow[arc.id]), ZERO)


def path_nodes(net: Network, start: int, steps: Sequence[tuple[int, Direction]]) -> list[int]:
    nodes = [start]
    for aid, d in steps:
        arc = net.arcs[aid]
        nodes.append(arc.head if d == FORWARD else arc.tail)
    return nodes


# ---------------------------------------------------------------- scaling


@dataclass
class ScaledNetwork:
    """Integer image of a network: costs times ``cost_scale``, amounts times ``unit_scale``.

    Both algorithms run on this image so their inner loops use Python ints
    only; every value handed back to callers is divided out again.
    """

    n: int
    tail: list[int]
    head: list[int]
    cost: list[int]
    cap: list[int | None]  # None means unbounded
    balance: list[int]
    cost_scale: int
    unit_scale: int

    @classmethod
    def from_network(cls, net: Network, extra_amounts: Iterable[Fraction] = ()) -> "ScaledNetwork":
        cost_scale = lcm(a.cost.denominator for a in net.arcs)
        amounts = [a.capacity for a in net.arcs if a.capacity is not UNBOUNDED]
        amounts += [nd.balance for nd in net.nodes]
        amounts += list(extra_amounts)
        unit_scale = lcm(as_rational(x).denominator for x in amounts)
        return cls(
            n=net.n_nodes,
            tail=[a.tail for a in net.arcs],
            head=[a.head for a in net.arcs],
            cost=[int(a.cost * cost_scale) for a in net.arcs],
            cap=[None if a.capacity is UNBOUNDED else int(a.capacity * unit_scale) for a in net.arcs],
            balance=[int(nd.balance * unit_scale) for nd in net.nodes],
            cost_scale=cost_scale,
            unit_scale=unit_scale,
        )

    def amount(self, x: int) -> Fraction:
        return Fraction(x, self.unit_scale)

    def price(self, c: int) -> Fraction:
        return Fraction(c, self.cost_scale)

    def scale_flow(self, flow: Flow) -> list[int]:
        out = []
        for x in flow.values:
            y = x * self.unit_scale
            if y.denominator != 1:
                raise InfeasibleFlow(detail=f"flow value {x} finer than the unit grid", node=-1)
            out.append(int(y))
        return out

    def unscale_flow(self, xs: Sequence[int]) -> Flow:
        return Flow([Fraction(x, self.unit_scale) for x in xs])


# ---------------------------------------------------------------- JSON


def network_to_dict(net: Network) -> dict:
    return {
        "nodes": [
            {"id": nd.id, "balance": format_rational(nd.balance), "label": nd.label}
            for nd in net.nodes
        ],
        "arcs": [
            {
                "id": a.id,
                "tail": a.tail,
                "head": a.head,
                "cost": format_rational(a.cost),
                "capacity": format_capacity(a.capacity),
                "label": a.label,
            }
            for a in net.arcs
        ],
        "source": net.source,
        "sink": net.sink,
    }


def network_from_dict(data: dict) -> Network:
    nodes = tuple(
        Node(int(nd["id"]), parse_rational(str(nd.get("balance", "0"))), nd.get("label"))
        for nd in data["nodes"]
    )
    arcs = tuple(
        Arc(
            int(a["id"]),
            int(a["tail"]),
            int(a["head"]),
            parse_rational(str(a["cost"])),
            parse_capacity(str(a["capacity"])),
            a.get("label"),
        )
        for a in data["arcs"]
    )
    net = Network(nodes, arcs, data.get("source"), data.get("sink"))
    validate_network(net)
    return net


def dumps_canonical(obj) -> str:
    """Deterministic JSON text used for every file flowlab writes."""
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"
