"""Successive Shortest Path algorithm with deterministic path selection and tracing.

Path selection rule: distances are computed exactly (label-correcting on the
first iteration, Dijkstra on potential-reduced costs afterwards); among all
minimum-cost residual paths the one whose sequence of ``(ArcId, direction)``
keys is lexicographically smallest is augmented. Because the choice is made on
the subgraph of tight residual arcs, it does not depend on which shortest-path
routine produced the distances.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import (
    IterationBudgetExceeded,
    NegativeCycleDetected,
    UnboundedPath,
    InfeasibleFlow,
)
from .exactnum import format_rational, is_canonical
from .flownet import (
    BACKWARD,
    FORWARD,
    Direction,
    Flow,
    Network,
    ScaledNetwork,
    flow_cost,
    validate_network,
)

DEFAULT_MAX_ITERATIONS = 10**6


@dataclass
class SspIteration:
    index: int
    path_nodes: list[int]
    path_arcs: list[tuple[int, Direction]]
    path_cost: Fraction
    amount: Fraction
    watched_flow: Fraction | None = None

    def __post_init__(self):
        assert is_canonical(self.path_cost) and is_canonical(self.amount)

    def to_json(self) -> dict:
        return {
            "j": self.index,
            "path": self.path_nodes,
            "arcs": [[aid, d.code] for aid, d in self.path_arcs],
            "cost": format_rational(self.path_cost),
            "amount": format_rational(self.amount),
            "watchedFlow": None if self.watched_flow is None else format_rational(self.watched_flow),
        }


@dataclass
class SspTrace:
    iterations: list[SspIteration]
    final_flow: Flow | None = None
    total_cost: Fraction = Fraction(0)
    watched: tuple[int, ...] = ()

    @property
    def costs(self) -> list[Fraction]:
        return [it.path_cost for it in self.iterations]

    def to_json(self) -> dict:
        return {
            "iterations": [it.to_json() for it in self.iterations],
            "totalCost": format_rational(self.total_cost),
        }


# ---------------------------------------------------------------- helpers
# Residual entries are tuples (key, head, cost, arc, direction) with
# key = 2*arc + direction, so per-node lists come out sorted by key.


def residual_out(sn: ScaledNetwork, x: list[int]):
    out: list[list[tuple[int, int, int, int, int]]] = [[] for _ in range(sn.n)]
    for a in range(len(sn.tail)):
        cap = sn.cap[a]
        if cap is None or x[a] < cap:
            out[sn.tail[a]].append((2 * a, sn.head[a], sn.cost[a], a, 0))
        if x[a] > 0:
            out[sn.head[a]].append((2 * a + 1, sn.tail[a], -sn.cost[a], a, 1))
    return out


def label_correcting(out, n: int, s: int) -> list[int | None]:
    """Queue-based Bellman-Ford distances from ``s``; None marks unreachable."""
    dist: list[int | None] = [None] * n
    dist[s] = 0
    queue = deque([s])
    queued = [False] * n
    queued[s] = True
    passes = [0] * n
    while queue:
        u = queue.popleft()
        queued[u] = False
        du = dist[u]
        for _key, v, c, _a, _d in out[u]:
            nd = du + c
            if dist[v] is None or nd < dist[v]:
                dist[v] = nd
                if not queued[v]:
                    passes[v] += 1
                    if passes[v] > n:
                        raise NegativeCycleDetected("negative-cost cycle in the residual network")
                    queued[v] = True
                    queue.append(v)
    return dist


def dijkstra_with_potentials(out, n: int, s: int, pi) -> list[int | None] | None:
    """Exact distances via reduced costs; None if ``pi`` does not cover a reached node."""
    red: list[int | None] = [None] * n
    red[s] = 0
    done = [False] * n
    heap = [(0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        pu = pi[u]
        for _key, v, c, _a, _d in out[u]:
            pv = pi[v]
            if pv is None:
                return None
            rc = c + pu - pv
            if rc < 0:
                raise NegativeCycleDetected("negative reduced cost: optimality invariant violated")
            nd = d + rc
            if red[v] is None or nd < red[v]:
                red[v] = nd
                heapq.heappush(heap, (nd, v))
    ps = pi[s]
    return [None if red[v] is None else red[v] + pi[v] - ps for v in range(n)]


def select_path(sn: ScaledNetwork, out, dist, s: int, t: int):
    """Lexicographically smallest simple s-t path made of tight residual arcs."""
    n = sn.n
    tight: list[list[tuple]] = [[] for _ in range(n)]
    rev: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        du = dist[u]
        if du is None:
            continue
        for entry in out[u]:
            v = entry[1]
            if dist[v] is not None and du + entry[2] == dist[v]:
                tight[u].append(entry)
                rev[v].append(u)
    reach = [False] * n
    reach[t] = True
    queue = deque([t])
    while queue:
        v = queue.popleft()
        for u in rev[v]:
            if not reach[u]:
                reach[u] = True
                queue.append(u)
    on_path = [False] * n
    on_path[s] = True
    path: list[tuple] = []
    cursor = [0]
    node = s
    while node != t:
        arcs = tight[node]
        i = cursor[-1]
        while i < len(arcs) and (on_path[arcs[i][1]] or not reach[arcs[i][1]]):
            i += 1
        if i == len(arcs):
            # dead end, only reachable through zero-cost residual cycles
            cursor.pop()
            on_path[node] = False
            entry = path.pop()
            node = sn.tail[entry[3]] if entry[4] == 0 else sn.head[entry[3]]
            cursor[-1] += 1
            continue
        cursor[-1] = i
        entry = arcs[i]
        path.append(entry)
        node = entry[1]
        on_path[node] = True
        cursor.append(0)
    return path


def _watched_tuple(watched) -> tuple[int, ...]:
    if watched is None:
        return ()
    if isinstance(watched, int):
        return (watched,)
    return tuple(watched)


class SuccessiveShortestPaths:
    """Stateful SSP run; iterate :meth:`run` to stream iterations.

    ``method`` selects how exact distances are obtained: ``"dijkstra"``
    (potentials, default) or ``"bellman-ford"`` (label correcting every
    iteration). Both yield identical traces.
    """

    def __init__(
        self,
        net: Network,
        watched=None,
        max_iterations: int = DEFAULT_MAX_ITERATIONS,
        method: str = "dijkstra",
        source: int | None = None,
        sink: int | None = None,
    ):
        validate_network(net)
        self.net = net
        self.source = net.source if source is None else source
        self.sink = net.sink if sink is None else sink
        if self.source is None or self.sink is None:
            raise ValueError("SSP needs a designated source and sink")
        if any(nd.balance != 0 for nd in net.nodes):
            raise InfeasibleFlow(node=-1, detail="SSP starts from the zero flow; balances must be 0")
        if method not in ("dijkstra", "bellman-ford"):
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        self.watched = _watched_tuple(watched)
        self.max_iterations = max_iterations
        self.sn = ScaledNetwork.from_network(net)
        self.x = [0] * net.n_arcs
        self.routed = 0
        self._pi: list[int | None] | None = None
        self.finished = False

    # ------------------------------------------------------------ main loop

    def _distances(self, out):
        dist = None
        if self.method == "dijkstra" and self._pi is not None:
            dist = dijkstra_with_potentials(out, self.sn.n, self.source, self._pi)
        if dist is None:
            dist = label_correcting(out, self.sn.n, self.source)
        self._pi = dist
        return dist

    def run(self) -> Iterator[SspIteration]:
        sn = self.sn
        j = 0
        while True:
            out = residual_out(sn, self.x)
            dist = self._distances(out)
            if dist[self.sink] is None:
                break
            if j >= self.max_iterations:
                raise IterationBudgetExceeded(self.max_iterations)
            path = select_path(sn, out, dist, self.source, self.sink)
            amount = None
            for _key, _v, _c, a, d in path:
                cap = sn.cap[a]
                res = (None if cap is None else cap - self.x[a]) if d == 0 else self.x[a]
                if res is not None and (amount is None or res < amount):
                    amount = res
            if amount is None:
                raise UnboundedPath("augmenting path of unbounded capacity")
            for _key, _v, _c, a, d in path:
                self.x[a] += amount if d == 0 else -amount
            self.routed += amount
            nodes = [self.source] + [entry[1] for entry in path]
            watched_flow = None
            if self.watched:
                watched_flow = sn.amount(sum(self.x[a] for a in self.watched))
            yield SspIteration(
                index=j,
                path_nodes=nodes,
                path_arcs=[(e[3], FORWARD if e[4] == 0 else BACKWARD) for e in path],
                path_cost=sn.price(dist[self.sink]),
                amount=sn.amount(amount),
                watched_flow=watched_flow,
            )
            j += 1
        self.finished = True

    @property
    def flow(self) -> Flow:
        return self.sn.unscale_flow(self.x)

    @property
    def routed_amount(self) -> Fraction:
        return self.sn.amount(self.routed)


def shortest_residual_path(net: Network, flow: Flow, source: int, sink: int):
    """Selected minimum-cost residual path as ``(pathArcs, pathCost)``, or None."""
    sn = ScaledNetwork.from_network(net, flow.values)
    out = residual_out(sn, sn.scale_flow(flow))
    dist = label_correcting(out, sn.n, source)
    if dist[sink] is None:
        return None
    path = select_path(sn, out, dist, source, sink)
    arcs = [(e[3], FORWARD if e[4] == 0 else BACKWARD) for e in path]
    return arcs, sn.price(dist[sink])


def ssp_run(
    net: Network,
    watched=None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    method: str = "dijkstra",
) -> SspTrace:
    solver = SuccessiveShortestPaths(net, watched, max_iterations, method)
    iterations = list(solver.run())
    final = solver.flow
    total = sum((it.path_cost * it.amount for it in iterations), Fraction(0))
    assert total == flow_cost(net, final)
    return SspTrace(iterations, final, total, solver.watched)
