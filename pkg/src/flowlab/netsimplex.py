"""Primal Network Simplex with Dantzig's rule over an explicit spanning-tree basis.

The basis is a spanning tree; every non-tree arc sits at its lower bound (0) or
at its (finite) capacity. A pivot adds the residual non-tree arc of most
negative reduced cost, pushes the bottleneck amount around the cycle it closes
in the tree, and drops the first arc of that cycle (walking from the entering
arc in push direction) that reaches a bound.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import (
    DegeneratePivot,
    InfeasibleStart,
    NotATree,
    PivotBudgetExceeded,
    UnboundedCycle,
    FlowLabError,
)
from .exactnum import UNBOUNDED, format_rational, is_canonical
from .flownet import (
    BACKWARD,
    FORWARD,
    Direction,
    Flow,
    Network,
    ScaledNetwork,
    validate_flow,
    validate_network,
)

DEFAULT_MAX_PIVOTS = 10**6

TREE, LOWER, UPPER = 0, 1, 2


@dataclass(frozen=True)
class TreeBasis:
    tree_arcs: frozenset[int]
    at_lower: frozenset[int]
    at_upper: frozenset[int]
    root: int = 0

    @classmethod
    def from_tree(cls, net: Network, tree_arcs, flow: Flow, root: int | None = None) -> "TreeBasis":
        """Complete a tree with lower/upper sets read off ``flow``."""
        tree = frozenset(tree_arcs)
        lower, upper = set(), set()
        for arc in net.arcs:
            if arc.id in tree:
                continue
            if flow[arc.id] == 0:
                lower.add(arc.id)
            elif arc.capacity is not UNBOUNDED and flow[arc.id] == arc.capacity:
                upper.add(arc.id)
            else:
                raise InfeasibleStart(f"non-tree arc {arc.id} carries {flow[arc.id]} strictly inside its bounds")
        return cls(tree, frozenset(lower), frozenset(upper), default_root(net) if root is None else root)

    def to_json(self) -> dict:
        return {
            "tree": sorted(self.tree_arcs),
            "atLower": sorted(self.at_lower),
            "atUpper": sorted(self.at_upper),
            "root": self.root,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TreeBasis":
        return cls(
            frozenset(data["tree"]),
            frozenset(data["atLower"]),
            frozenset(data["atUpper"]),
            int(data["root"]),
        )

    def summary_hash(self) -> str:
        return basis_hash(self.tree_arcs)


def basis_hash(tree_arcs) -> str:
    text = ",".join(map(str, sorted(tree_arcs)))
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


def default_root(net: Network) -> int:
    for node in net.nodes:
        if node.label == "s":
            return node.id
    return 0


@dataclass
class PivotRecord:
    index: int
    entering: tuple[int, Direction]
    reduced_cost: Fraction
    cycle_arcs: list[tuple[int, Direction]]
    theta: Fraction
    leaving: tuple[int, str]
    basis_after: str
    watched_in_basis: bool = False
    watched_entered: bool = False
    entering_tie: bool = False
    leaving_tie: bool = False
    objective: Fraction = Fraction(0)

    def __post_init__(self):
        assert is_canonical(self.reduced_cost) and is_canonical(self.theta)

    @property
    def degenerate(self) -> bool:
        return self.theta == 0

    def to_json(self) -> dict:
        return {
            "j": self.index,
            "entering": [self.entering[0], self.entering[1].code],
            "reducedCost": format_rational(self.reduced_cost),
            "cycle": [[a, d.code] for a, d in self.cycle_arcs],
            "theta": format_rational(self.theta),
            "leaving": [self.leaving[0], self.leaving[1]],
            "basis": self.basis_after,
            "watchedEntered": self.watched_entered,
            "watchedInBasis": self.watched_in_basis,
            "enteringTie": self.entering_tie,
            "leavingTie": self.leaving_tie,
            "objective": format_rational(self.objective),
        }


@dataclass
class NsTrace:
    pivots: list[PivotRecord]
    final_flow: Flow
    final_basis: TreeBasis
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pivots": [p.to_json() for p in self.pivots],
            "finalBasis": self.final_basis.to_json(),
            "warnings": self.warnings,
        }


# ---------------------------------------------------------------- validation


def validate_basis(net: Network, basis: TreeBasis, flow: Flow) -> None:
    """Raise unless (basis, flow) is a basic feasible solution of ``net``."""
    arcs = set(range(net.n_arcs))
    parts = (basis.tree_arcs, basis.at_lower, basis.at_upper)
    if set().union(*parts) != arcs or sum(len(p) for p in parts) != net.n_arcs:
        raise InfeasibleStart("tree/atLower/atUpper must partition the arc set")
    _tree_structure(net, basis.tree_arcs, basis.root)
    try:
        validate_flow(net, flow)
    except FlowLabError as exc:
        raise InfeasibleStart(str(exc)) from exc
    for a in basis.at_lower:
        if flow[a] != 0:
            raise InfeasibleStart(f"arc {a} is at_lower but carries {flow[a]}")
    for a in basis.at_upper:
        cap = net.arcs[a].capacity
        if cap is UNBOUNDED or flow[a] != cap:
            raise InfeasibleStart(f"arc {a} is at_upper but not saturated")


def _tree_structure(net: Network, tree_arcs, root: int):
    n = net.n_nodes
    if len(tree_arcs) != n - 1:
        raise NotATree(f"{len(tree_arcs)} tree arcs for {n} nodes")
    adj: list[list[int]] = [[] for _ in range(n)]
    for a in tree_arcs:
        arc = net.arcs[a]
        adj[arc.tail].append(a)
        adj[arc.head].append(a)
    parent_arc: list[int | None] = [None] * n
    order = [root]
    seen = [False] * n
    seen[root] = True
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for a in sorted(adj[u]):
            arc = net.arcs[a]
            w = arc.head if arc.tail == u else arc.tail
            if seen[w]:
                if a != parent_arc[u]:
                    raise NotATree("tree arcs contain a cycle")
                continue
            seen[w] = True
            parent_arc[w] = a
            order.append(w)
            queue.append(w)
    if len(order) != n:
        raise NotATree("tree arcs do not span all nodes")
    return parent_arc, order


def compute_potentials(net: Network, basis: TreeBasis) -> list[Fraction]:
    """Node potentials with pi(root) = 0 and pi(head) - pi(tail) = cost on tree arcs."""
    parent_arc, order = _tree_structure(net, basis.tree_arcs, basis.root)
    pi: list[Fraction] = [Fraction(0)] * net.n_nodes
    for v in order[1:]:
        arc = net.arcs[parent_arc[v]]
        if arc.head == v:
            pi[v] = pi[arc.tail] + arc.cost
        else:
            pi[v] = pi[arc.head] - arc.cost
    return pi


def reduced_cost(net: Network, pi, aid: int) -> Fraction:
    arc = net.arcs[aid]
    return arc.cost + pi[arc.tail] - pi[arc.head]


def dantzig_entering(net: Network, flow: Flow, basis: TreeBasis, potentials):
    """Residual non-tree direction of most negative reduced cost, or None if optimal.

    Ties go to the smaller ArcId, then Forward before Backward.
    """
    best = None
    for a in sorted(basis.at_lower | basis.at_upper):
        rc = reduced_cost(net, potentials, a)
        cap = net.arcs[a].capacity
        if a in basis.at_lower:
            if cap is not UNBOUNDED and cap == 0:
                continue
            cand = (rc, a, FORWARD)
        else:
            cand = (-rc, a, BACKWARD)
        if cand[0] < 0 and (best is None or cand[0] < best[0]):
            best = cand
    if best is None:
        return None
    return best[1], best[2], best[0]


# ---------------------------------------------------------------- engine


class NetworkSimplex:
    """Stateful Network Simplex run on the integer image of ``net``."""

    def __init__(
        self,
        net: Network,
        basis: TreeBasis,
        flow: Flow,
        watched=None,
        max_pivots: int = DEFAULT_MAX_PIVOTS,
        check: bool = False,
        degenerate: str = "raise",
    ):
        validate_network(net)
        validate_basis(net, basis, flow)
        if degenerate not in ("raise", "record"):
            raise ValueError("degenerate must be 'raise' or 'record'")
        self.net = net
        self.watched = () if watched is None else ((watched,) if isinstance(watched, int) else tuple(watched))
        self.max_pivots = max_pivots
        self.check = check
        self.degenerate = degenerate
        self.warnings: list[str] = []
        sn = ScaledNetwork.from_network(net, flow.values)
        self.sn = sn
        self.x = sn.scale_flow(flow)
        self.root = basis.root
        self.state = [LOWER] * net.n_arcs
        for a in basis.tree_arcs:
            self.state[a] = TREE
        for a in basis.at_upper:
            self.state[a] = UPPER
        self.tree_adj: list[set[int]] = [set() for _ in range(sn.n)]
        for a in basis.tree_arcs:
            self.tree_adj[sn.tail[a]].add(a)
            self.tree_adj[sn.head[a]].add(a)
        self.parent = [-1] * sn.n
        self.parent_arc = [-1] * sn.n
        self.depth = [0] * sn.n
        self.pi = [0] * sn.n
        self._hang(self.root, -1, -1, 0, 0)
        self.objective = sum(c * x for c, x in zip(sn.cost, self.x))
        self.count = 0

    # tree bookkeeping -------------------------------------------------

    def _hang(self, start: int, par: int, par_arc: int, depth: int, pi: int) -> None:
        """(Re)compute parent/depth/potential for the subtree reachable from ``start``."""
        sn = self.sn
        self.parent[start] = par
        self.parent_arc[start] = par_arc
        self.depth[start] = depth
        self.pi[start] = pi
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for a in self.tree_adj[u]:
                if a == self.parent_arc[u]:
                    continue
                if sn.tail[a] == u:
                    w, pw = sn.head[a], self.pi[u] + sn.cost[a]
                else:
                    w, pw = sn.tail[a], self.pi[u] - sn.cost[a]
                self.parent[w] = u
                self.parent_arc[w] = a
                self.depth[w] = self.depth[u] + 1
                self.pi[w] = pw
                queue.append(w)

    def basis(self) -> TreeBasis:
        tree = frozenset(a for a, s in enumerate(self.state) if s == TREE)
        lower = frozenset(a for a, s in enumerate(self.state) if s == LOWER)
        upper = frozenset(a for a, s in enumerate(self.state) if s == UPPER)
        return TreeBasis(tree, lower, upper, self.root)

    @property
    def flow(self) -> Flow:
        return self.sn.unscale_flow(self.x)

    def potentials(self) -> list[Fraction]:
        return [self.sn.price(p) for p in self.pi]

    # pivot rule ---------------------------------------------------------

    def entering(self):
        """(arc, direction, scaled reduced cost, tie) or None at optimality."""
        sn = self.sn
        pi = self.pi
        best = None
        best_key = None
        ties = 0
        for a, st in enumerate(self.state):
            if st == TREE:
                continue
            rc = sn.cost[a] + pi[sn.tail[a]] - pi[sn.head[a]]
            if st == LOWER:
                if rc >= 0 or sn.cap[a] == 0:
                    continue
                val, d = rc, 0
            else:
                if rc <= 0:
                    continue
                val, d = -rc, 1
            if best is None or val < best:
                best, best_key, ties = val, (a, d), 0
            elif val == best:
                ties += 1
        if best is None:
            return None
        return best_key[0], best_key[1], best, ties > 0

    def _cycle(self, a: int, d: int):
        """Cycle arcs as (arc, dir, in_subtree_side) starting with the entering arc.

        ``in_subtree_side`` is 'q' for arcs on the tree path climbing from the
        push-head q, 'p' for arcs descending to the push-tail p.
        """
        sn = self.sn
        p, q = (sn.tail[a], sn.head[a]) if d == 0 else (sn.head[a], sn.tail[a])
        up_q, up_p = [], []
        u, w = q, p
        while self.depth[u] > self.depth[w]:
            up_q.append(u)
            u = self.parent[u]
        while self.depth[w] > self.depth[u]:
            up_p.append(w)
            w = self.parent[w]
        while u != w:
            up_q.append(u)
            up_p.append(w)
            u = self.parent[u]
            w = self.parent[w]
        cycle = [(a, d, None)]
        for v in up_q:  # v -> parent(v)
            b = self.parent_arc[v]
            cycle.append((b, 0 if sn.tail[b] == v else 1, "q"))
        for v in reversed(up_p):  # parent(v) -> v
            b = self.parent_arc[v]
            cycle.append((b, 0 if sn.head[b] == v else 1, "p"))
        return cycle, p, q

    def _residual(self, a: int, d: int):
        if d == 0:
            cap = self.sn.cap[a]
            return None if cap is None else cap - self.x[a]
        return self.x[a]

    def pivot(self, a: int, d: int, scaled_rc: int, entering_tie: bool = False) -> PivotRecord:
        sn = self.sn
        cycle, p, q = self._cycle(a, d)
        residuals = [self._residual(b, bd) for b, bd, _ in cycle]
        finite = [r for r in residuals if r is not None]
        if not finite:
            raise UnboundedCycle(f"entering arc {a} closes a cycle of unbounded capacity")
        theta = min(finite)
        if theta == 0 and self.degenerate == "raise":
            raise DegeneratePivot(self.count)
        blocking = [i for i, r in enumerate(residuals) if r == theta]
        lpos = blocking[0]
        leaving_arc, leaving_dir, side = cycle[lpos]
        for b, bd, _ in cycle:
            self.x[b] += theta if bd == 0 else -theta
        self.objective += scaled_rc * theta
        bound = "upper" if leaving_dir == 0 else "lower"
        if lpos == 0:
            self.state[a] = UPPER if d == 0 else LOWER
        else:
            self.state[leaving_arc] = UPPER if leaving_dir == 0 else LOWER
            self.state[a] = TREE
            self.tree_adj[sn.tail[leaving_arc]].discard(leaving_arc)
            self.tree_adj[sn.head[leaving_arc]].discard(leaving_arc)
            self.tree_adj[sn.tail[a]].add(a)
            self.tree_adj[sn.head[a]].add(a)
            # the endpoint of the entering arc on the cut-off side is re-hung
            w, z = (q, p) if side == "q" else (p, q)
            pw = self.pi[z] + sn.cost[a] if sn.head[a] == w else self.pi[z] - sn.cost[a]
            self._hang(w, z, a, self.depth[z] + 1, pw)
        tree_arcs = [b for b, s in enumerate(self.state) if s == TREE]
        record = PivotRecord(
            index=self.count,
            entering=(a, Direction(d)),
            reduced_cost=sn.price(scaled_rc),
            cycle_arcs=[(b, Direction(bd)) for b, bd, _ in cycle],
            theta=sn.amount(theta),
            leaving=(leaving_arc, bound),
            basis_after=basis_hash(tree_arcs),
            watched_in_basis=any(self.state[w] == TREE for w in self.watched),
            watched_entered=a in self.watched,
            entering_tie=entering_tie,
            leaving_tie=len(blocking) > 1,
            objective=Fraction(self.objective, sn.cost_scale * sn.unit_scale),
        )
        if theta == 0:
            self.warnings.append(f"pivot {self.count}: degenerate (theta = 0)")
        if record.entering_tie:
            self.warnings.append(f"pivot {self.count}: entering arc not unique, took arc {a}")
        if record.leaving_tie:
            tied = [cycle[i][0] for i in blocking]
            self.warnings.append(f"pivot {self.count}: leaving arc tie among {tied}, took arc {leaving_arc}")
        self.count += 1
        if self.check:
            self.assert_invariants()
        return record

    def assert_invariants(self) -> None:
        basis = self.basis()
        flow = self.flow
        validate_basis(self.net, basis, flow)
        full = compute_potentials(self.net, basis)
        if full != self.potentials():
            raise AssertionError("incremental potentials disagree with full recomputation")

    def run(self) -> Iterator[PivotRecord]:
        while True:
            choice = self.entering()
            if choice is None:
                return
            if self.count >= self.max_pivots:
                raise PivotBudgetExceeded(self.max_pivots)
            a, d, rc, tie = choice
            yield self.pivot(a, d, rc, tie)


def pivot(net: Network, flow: Flow, basis: TreeBasis, entering, check: bool = True):
    """Single pivot on ``entering = (arc, direction)``; returns (record, flow, basis)."""
    engine = NetworkSimplex(net, basis, flow, check=check, degenerate="record")
    a, d = entering[0], int(entering[1])
    sn = engine.sn
    rc = sn.cost[a] + engine.pi[sn.tail[a]] - engine.pi[sn.head[a]]
    if d == 1:
        rc = -rc
    if rc >= 0:
        raise ValueError(f"arc {a} does not have negative reduced cost in that direction")
    record = engine.pivot(a, d, rc)
    return record, engine.flow, engine.basis()


def ns_run(
    net: Network,
    initial_basis: TreeBasis,
    initial_flow: Flow,
    watched=None,
    max_pivots: int = DEFAULT_MAX_PIVOTS,
    check: bool = False,
    degenerate: str = "raise",
) -> NsTrace:
    engine = NetworkSimplex(net, initial_basis, initial_flow, watched, max_pivots, check, degenerate)
    pivots = list(engine.run())
    return NsTrace(pivots, engine.flow, engine.basis(), engine.warnings)
