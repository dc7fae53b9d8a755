"""PARTITION instances, bit helpers, and generators for every gadget network family.

Node labels: ``s_i``/``t_i`` inside a single gadget; the two-gadget networks
suffix them with ``+`` / ``-`` (``s_0+``, ``t_3-``) and add ``s``, ``t``.
Arc labels read ``(tail,head)``; the watched arc is labelled ``e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import gcd
from functools import reduce
from typing import Sequence

from .errors import (
    EmptyInstance,
    IndexOrder,
    InvalidR,
    LevelOutOfRange,
    NonPositiveEntry,
    WrongFamily,
)
from .exactnum import UNBOUNDED, as_rational, lcm
from .flownet import Arc, Flow, Network, NetworkBuilder, validate_network
from .netsimplex import TreeBasis

THIRD = Fraction(1, 3)


# ---------------------------------------------------------------- arithmetic helpers


def bit_of(k: int, j: int) -> int:
    return (k >> j) & 1


def signed_sum(v: Sequence[Fraction], i1: int, i2: int, k: int) -> Fraction:
    """Sum over j = i1+1..i2 of (-1)^bit(k, j-1) * v_j (1-based ``v_j``)."""
    if not 0 <= i1 <= i2 <= len(v):
        raise IndexOrder(f"need 0 <= i1 <= i2 <= {len(v)}, got ({i1}, {i2})")
    total = Fraction(0)
    for j in range(i1 + 1, i2 + 1):
        total += -v[j - 1] if bit_of(k, j - 1) else v[j - 1]
    return total


def x_param(i: int) -> int:
    """Capacity parameter of the simplex counting gadget: 3 * 2^(i-1) - 1."""
    if i < 1:
        raise LevelOutOfRange(f"x_i is defined for i >= 1, got {i}")
    return 3 * 2 ** (i - 1) - 1


# ---------------------------------------------------------------- instances


@dataclass(frozen=True)
class PartitionInstance:
    raw: tuple[Fraction, ...]
    weights: tuple[int, ...]  # raw scaled to coprime-free integers
    normalized: tuple[Fraction, ...]
    epsilon: Fraction
    total: Fraction

    @property
    def n(self) -> int:
        return len(self.normalized)


def normalize_instance(raw) -> PartitionInstance:
    """Scale ``raw`` so the entries sum to 1/13; epsilon is their common granularity."""
    vals = tuple(as_rational(x) for x in raw)
    if not vals:
        raise EmptyInstance("PARTITION instance needs at least one number")
    for x in vals:
        if x <= 0:
            raise NonPositiveEntry(f"{x} is not positive")
    den = lcm(x.denominator for x in vals)
    weights = tuple(int(x * den) for x in vals)
    total_w = sum(weights)
    scale = Fraction(1, 13 * total_w)
    normalized = tuple(w * scale for w in weights)
    epsilon = reduce(gcd, weights) * scale
    return PartitionInstance(vals, weights, normalized, epsilon, sum(normalized, Fraction(0)))


# ---------------------------------------------------------------- gadget container


@dataclass(frozen=True)
class GadgetMeta:
    family: str  # N | Gssp | S | Harness | Gns
    n: int
    sign: int = 1
    r: Fraction | None = None
    epsilon: Fraction | None = None
    split: bool = False
    perturbed: bool = False

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "sign": self.sign,
            "r": None if self.r is None else str(self.r),
            "epsilon": None if self.epsilon is None else str(self.epsilon),
            "split": self.split,
            "perturbed": self.perturbed,
        }


@dataclass(frozen=True)
class GadgetNetwork:
    net: Network
    roles: dict[str, int]
    watched: tuple[int, ...]
    initial_flow: Flow
    initial_basis: TreeBasis | None
    meta: GadgetMeta
    groups: dict[str, frozenset[int]] = field(default_factory=dict)
    partial_basis: frozenset[int] = frozenset()

    @property
    def watched_arc(self) -> int | None:
        return self.watched[0] if self.watched else None

    def arc(self, label: str) -> int:
        return self.net.arc_by_label(label)

    def node(self, label: str) -> int:
        return self.roles[label]


# ---------------------------------------------------------------- N gadget (SSP)


def _ssp_gadget(b: NetworkBuilder, v: Sequence[Fraction], i: int, sfx: str, s0t0_cost=0):
    """Append N_i^v to ``b``; returns (top source, top sink, arc ids)."""
    arcs = []
    s = [b.node(f"s_0{sfx}")]
    t = [b.node(f"t_0{sfx}")]
    arcs.append(b.arc(s[0], t[0], s0t0_cost, 1, f"(s_0{sfx},t_0{sfx})"))
    for lvl in range(1, i + 1):
        s.append(b.node(f"s_{lvl}{sfx}"))
        t.append(b.node(f"t_{lvl}{sfx}"))
        cap = 2 ** (lvl - 1)
        cheap = v[lvl - 1] / 2
        dear = (2**lvl - 1 - v[lvl - 1]) / 2
        arcs.append(b.arc(s[lvl], s[lvl - 1], cheap, cap, f"(s_{lvl}{sfx},s_{lvl - 1}{sfx})"))
        arcs.append(b.arc(s[lvl], t[lvl - 1], dear, cap, f"(s_{lvl}{sfx},t_{lvl - 1}{sfx})"))
        arcs.append(b.arc(s[lvl - 1], t[lvl], dear, cap, f"(s_{lvl - 1}{sfx},t_{lvl}{sfx})"))
        arcs.append(b.arc(t[lvl - 1], t[lvl], cheap, cap, f"(t_{lvl - 1}{sfx},t_{lvl}{sfx})"))
    return s[i], t[i], arcs


def _signed(inst: PartitionInstance, sign: int) -> list[Fraction]:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return [sign * a for a in inst.normalized]


def build_counting_ssp(inst: PartitionInstance, sign: int, i: int) -> GadgetNetwork:
    """N_i^v with v = sign * normalized; source s_i, sink t_i, zero balances."""
    if not 0 <= i <= inst.n:
        raise LevelOutOfRange(f"level {i} outside 0..{inst.n}")
    b = NetworkBuilder()
    top_s, top_t, arcs = _ssp_gadget(b, _signed(inst, sign), i, "")
    net = b.build(top_s, top_t)
    validate_network(net)
    return GadgetNetwork(
        net=net,
        roles={nd.label: nd.id for nd in net.nodes},
        watched=(),
        initial_flow=Flow.zero(net),
        initial_basis=None,
        meta=GadgetMeta("N", i, sign, epsilon=inst.epsilon),
        groups={"gadget": frozenset(arcs)},
    )


def build_gssp(inst: PartitionInstance, perturb: bool = False) -> GadgetNetwork:
    """Two SSP gadgets for +a and -a joined by s, t and the watched arc e.

    ``perturb`` raises the (s_0,t_0) cost of the -a gadget from eps/5 to
    eps/5 + eps/50 so that successive path costs are pairwise distinct.
    """
    n = inst.n
    eps = inst.epsilon
    b = NetworkBuilder()
    s = b.node("s")
    t = b.node("t")
    plus_cost = eps / 5
    minus_cost = eps / 5 + (eps / 50 if perturb else 0)
    sp, tp, arcs_p = _ssp_gadget(b, _signed(inst, 1), n, "+", plus_cost)
    sm, tm, arcs_m = _ssp_gadget(b, _signed(inst, -1), n, "-", minus_cost)
    cap = 2**n
    conn = [
        b.arc(s, sp, 0, cap, "(s,s_n+)"),
        b.arc(tp, t, 0, cap, "(t_n+,t)"),
        b.arc(s, sm, 0, cap, "(s,s_n-)"),
        b.arc(tm, t, 0, cap, "(t_n-,t)"),
    ]
    e = b.arc(b["s_0+"], b["t_0-"], 0, 1, "e")
    net = b.build(s, t)
    validate_network(net)
    return GadgetNetwork(
        net=net,
        roles={nd.label: nd.id for nd in net.nodes},
        watched=(e,),
        initial_flow=Flow.zero(net),
        initial_basis=None,
        meta=GadgetMeta("Gssp", n, epsilon=eps, perturbed=perturb),
        groups={"gadget+": frozenset(arcs_p), "gadget-": frozenset(arcs_m), "connectors": frozenset(conn)},
    )


def split_watched_arc(g: GadgetNetwork) -> GadgetNetwork:
    """Replace e by two parallel half-capacity arcs with costs eps/25 and 2 eps/25."""
    if g.meta.family != "Gssp" or g.meta.split:
        raise WrongFamily(f"split_watched_arc needs an unsplit Gssp network, got {g.meta.family}")
    eps = g.meta.epsilon
    old = g.net.arcs[g.watched[0]]
    half = Fraction(1, 2)
    e1 = Arc(old.id, old.tail, old.head, old.cost + eps / 25, half, "e1")
    e2 = Arc(len(g.net.arcs), old.tail, old.head, old.cost + 2 * eps / 25, half, "e2")
    arcs = list(g.net.arcs)
    arcs[old.id] = e1
    arcs.append(e2)
    net = Network(g.net.nodes, tuple(arcs), g.net.source, g.net.sink)
    validate_network(net)
    return replace(
        g,
        net=net,
        watched=(e1.id, e2.id),
        initial_flow=Flow.zero(net),
        meta=replace(g.meta, split=True),
    )


# ---------------------------------------------------------------- S gadget (simplex)


def _check_r(inst: PartitionInstance, r: Fraction) -> Fraction:
    r = as_rational(r)
    a2 = 2 * inst.total
    if not (a2 < r < 1 - a2) or r == Fraction(1, 2):
        raise InvalidR(f"r = {r} must lie in ({a2}, {1 - a2}) and differ from 1/2")
    return r


def _ns_gadget(
    b: NetworkBuilder,
    v: Sequence[Fraction],
    r: Fraction,
    i: int,
    sfx: str,
    flow: dict[int, Fraction],
    splitter: str | None = None,
    eps: Fraction | None = None,
    level_offset: Fraction = Fraction(0),
):
    """Append S_i^{v,r} with its unit boundary flows; returns (s_i, t_i, arcs, bold arcs).

    ``splitter`` ('+' or '-') replaces (s_0,t_0) by s_0 -> c -> t_0 as in the
    two-gadget simplex network. ``level_offset`` adds lvl * offset to the two
    cheap arcs of each level (optional tie-breaking perturbation).
    """
    arcs, bold = [], []
    s = [b.node(f"s_0{sfx}", -1)]
    t = [b.node(f"t_0{sfx}", 1)]
    if splitter is None:
        arcs.append(b.arc(s[0], t[0], 0, 1, f"(s_0{sfx},t_0{sfx})"))
    else:
        c = b.node(f"c{sfx}")
        two = 2
        if splitter == "+":
            b.add_balance(s[0], 1)
            b.add_balance(c, -1)
            a1 = b.arc(s[0], c, 0, two, f"(s_0{sfx},c{sfx})")
            a2 = b.arc(c, t[0], eps / 5, two, f"(c{sfx},t_0{sfx})")
            flow[a1] = Fraction(1)
            bold.append(a1)
        else:
            b.add_balance(t[0], -1)
            b.add_balance(c, 1)
            a1 = b.arc(s[0], c, eps / 5, two, f"(s_0{sfx},c{sfx})")
            a2 = b.arc(c, t[0], 0, two, f"(c{sfx},t_0{sfx})")
            flow[a2] = Fraction(1)
            bold.append(a2)
        arcs += [a1, a2]
    for lvl in range(1, i + 1):
        s.append(b.node(f"s_{lvl}{sfx}"))
        t.append(b.node(f"t_{lvl}{sfx}"))
        cap = x_param(lvl) + 1
        half_v = v[lvl - 1] / 2
        cheap = half_v + lvl * level_offset
        base = 2 ** (lvl - 1)
        down = b.arc(s[lvl], s[lvl - 1], cheap, cap, f"(s_{lvl}{sfx},s_{lvl - 1}{sfx})")
        diag1 = b.arc(s[lvl], t[lvl - 1], base - r - half_v, cap, f"(s_{lvl}{sfx},t_{lvl - 1}{sfx})")
        diag2 = b.arc(s[lvl - 1], t[lvl], base - (1 - r) - half_v, cap, f"(s_{lvl - 1}{sfx},t_{lvl}{sfx})")
        up = b.arc(t[lvl - 1], t[lvl], cheap, cap, f"(t_{lvl - 1}{sfx},t_{lvl}{sfx})")
        arcs += [down, diag1, diag2, up]
        bold += [down, up]
        flow[down] = Fraction(1)
        flow[up] = Fraction(1)
    b.add_balance(s[i], 1)
    b.add_balance(t[i], -1)
    return s[i], t[i], arcs, bold


def build_counting_ns(inst: PartitionInstance, sign: int, r, i: int) -> GadgetNetwork:
    """Stand-alone S_i^{v,r}: boundary supplies, unit initial flows, bold partial basis."""
    r = _check_r(inst, r)
    if not 0 <= i <= inst.n:
        raise LevelOutOfRange(f"level {i} outside 0..{inst.n}")
    b = NetworkBuilder()
    flow: dict[int, Fraction] = {}
    si, ti, arcs, bold = _ns_gadget(b, _signed(inst, sign), r, i, "", flow)
    net = b.build(si, ti)
    validate_network(net)
    return GadgetNetwork(
        net=net,
        roles={nd.label: nd.id for nd in net.nodes},
        watched=(),
        initial_flow=Flow.from_mapping(net, flow),
        initial_basis=None,
        meta=GadgetMeta("S", i, sign, r, inst.epsilon),
        groups={"gadget": frozenset(arcs)},
        partial_basis=frozenset(bold),
    )


def build_ns_harness(inst: PartitionInstance, sign: int, r, i: int) -> GadgetNetwork:
    """S_i^{v,r} closed by s, t and a backbone (s,t) of cost 2^(i+1) + 1.

    The backbone keeps a residual return path t_i -> s_i of cost below
    -2^(i+1) in the tree for the whole run.
    """
    r = _check_r(inst, r)
    if not 1 <= i <= inst.n:
        raise LevelOutOfRange(f"harness level {i} outside 1..{inst.n}")
    x = x_param(i)
    b = NetworkBuilder()
    s = b.node("s", 2 * x + 2)
    t = b.node("t", -(2 * x + 2))
    flow: dict[int, Fraction] = {}
    si, ti, arcs, bold = _ns_gadget(b, _signed(inst, sign), r, i, "", flow)
    b.add_balance(si, -1)
    b.add_balance(ti, 1)
    cs = b.arc(s, si, 0, UNBOUNDED, f"(s,s_{i})")
    ct = b.arc(ti, t, 0, UNBOUNDED, f"(t_{i},t)")
    back = b.arc(s, t, 2 ** (i + 1) + 1, UNBOUNDED, "(s,t)")
    flow[cs] = Fraction(1)
    flow[ct] = Fraction(1)
    flow[back] = Fraction(2 * x + 1)
    net = b.build(s, t)
    validate_network(net)
    init = Flow.from_mapping(net, flow)
    basis = TreeBasis.from_tree(net, [cs, ct, back, *bold], init, root=s)
    return GadgetNetwork(
        net=net,
        roles={nd.label: nd.id for nd in net.nodes},
        watched=(),
        initial_flow=init,
        initial_basis=basis,
        meta=GadgetMeta("Harness", i, sign, r, inst.epsilon),
        groups={"gadget": frozenset(arcs), "outer": frozenset([cs, ct, back])},
        partial_basis=frozenset(bold),
    )


def build_gns(inst: PartitionInstance, perturb: bool = False) -> GadgetNetwork:
    """Two simplex gadgets S_n^{+a,1/3}, S_n^{-a,1/3} (a with a leading 0) plus e = (c+,c-)."""
    eps = inst.epsilon
    a = [Fraction(0), *inst.normalized]
    n = len(a)
    x = x_param(n)
    b = NetworkBuilder()
    s = b.node("s", 4 * x + 2)
    t = b.node("t", -(4 * x + 2))
    flow: dict[int, Fraction] = {}
    sp, tp, arcs_p, bold_p = _ns_gadget(b, a, THIRD, n, "+", flow, "+", eps)
    offset = eps / 1000 if perturb else Fraction(0)
    sm, tm, arcs_m, bold_m = _ns_gadget(b, [-v for v in a], THIRD, n, "-", flow, "-", eps, offset)
    for top_s, top_t in ((sp, tp), (sm, tm)):
        b.add_balance(top_s, -1)
        b.add_balance(top_t, 1)
    conn = [
        b.arc(s, sp, 0, UNBOUNDED, "(s,s_n+)"),
        b.arc(tp, t, 0, UNBOUNDED, "(t_n+,t)"),
        b.arc(s, sm, 0, UNBOUNDED, "(s,s_n-)"),
        b.arc(tm, t, 0, UNBOUNDED, "(t_n-,t)"),
    ]
    for c in conn:
        flow[c] = Fraction(1)
    back = b.arc(s, t, 2 ** (n + 1), UNBOUNDED, "(s,t)")
    flow[back] = Fraction(4 * x)
    e = b.arc(b["c+"], b["c-"], 0, Fraction(1, 2), "e")
    net = b.build(s, t)
    validate_network(net)
    init = Flow.from_mapping(net, flow)
    basis = TreeBasis.from_tree(net, [*conn, back, *bold_p, *bold_m], init, root=s)
    return GadgetNetwork(
        net=net,
        roles={nd.label: nd.id for nd in net.nodes},
        watched=(e,),
        initial_flow=init,
        initial_basis=basis,
        meta=GadgetMeta("Gns", n, r=THIRD, epsilon=eps, perturbed=perturb),
        groups={
            "gadget+": frozenset(arcs_p),
            "gadget-": frozenset(arcs_m),
            "connectors": frozenset(conn),
            "backbone": frozenset([back]),
        },
        partial_basis=frozenset(bold_p + bold_m),
    )
