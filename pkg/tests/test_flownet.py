from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from flowlab.errors import DuplicateLabel, InfeasibleFlow, NegativeCapacity, UnbalancedSupplies, DanglingEndpoint
from flowlab.exactnum import UNBOUNDED
from flowlab.flownet import (
    BACKWARD,
    FORWARD,
    Arc,
    Flow,
    Network,
    NetworkBuilder,
    Node,
    dumps_canonical,
    flow_cost,
    network_from_dict,
    network_to_dict,
    residual_network,
    validate_flow,
    validate_network,
)


def one_arc(cost=3, cap=1):
    b = NetworkBuilder()
    u, v = b.node("u"), b.node("v")
    b.arc(u, v, cost, cap)
    return b.build(u, v)


def test_validate_ok_and_errors():
    b = NetworkBuilder()
    u, v = b.node("u", 1), b.node("v", -1)
    b.arc(u, v, 0, 1)
    validate_network(b.build())

    with pytest.raises(UnbalancedSupplies) as exc:
        validate_network(Network((Node(0, F(1)),), ()))
    assert exc.value.total == 1

    bad_cap = Network((Node(0), Node(1)), (Arc(0, 0, 1, F(0), F(-1, 2)),))
    with pytest.raises(NegativeCapacity):
        validate_network(bad_cap)

    dangling = Network((Node(0), Node(1)), (Arc(0, 0, 5, F(0), F(1)),))
    with pytest.raises(DanglingEndpoint):
        validate_network(dangling)

    with pytest.raises(DuplicateLabel):
        b2 = NetworkBuilder()
        b2.node("x")
        b2.node("x")


@pytest.mark.parametrize(
    "cap, x, expected",
    [
        (1, 0, [(FORWARD, F(1), F(3))]),
        (1, 1, [(BACKWARD, F(1), F(-3))]),
        (2, 1, [(FORWARD, F(1), F(3)), (BACKWARD, F(1), F(-3))]),
    ],
)
def test_residual_examples(cap, x, expected):
    net = one_arc(3, cap)
    res = residual_network(net, Flow([F(x)]))
    assert [(r.direction, r.residual_capacity, r.residual_cost) for r in res] == expected


def test_residual_rejects_infeasible():
    with pytest.raises(InfeasibleFlow):
        residual_network(one_arc(3, 1), Flow([F(2)]))


def test_unbounded_residual():
    res = residual_network(one_arc(1, UNBOUNDED), Flow([F(4)]))
    assert res[0].residual_capacity is UNBOUNDED
    assert res[1].residual_capacity == 4


def test_flow_cost_examples():
    b = NetworkBuilder()
    u, v, w = b.node(), b.node(), b.node()
    b.arc(u, v, F(1, 26), 5)
    b.arc(v, w, F(6, 13), 5)
    net = b.build()
    assert flow_cost(net, Flow.zero(net)) == 0
    assert flow_cost(net, Flow([F(1), F(0)])) == F(1, 26)
    assert flow_cost(net, Flow([F(1), F(2)])) == F(25, 26)


@st.composite
def random_net_and_flows(draw):
    n = draw(st.integers(2, 5))
    b = NetworkBuilder()
    for _ in range(n):
        b.node()
    m = draw(st.integers(1, 7))
    for _ in range(m):
        u = draw(st.integers(0, n - 1))
        v = draw(st.integers(0, n - 2))
        v = v if v < u else v + 1
        b.arc(u, v, draw(st.fractions(-5, 5, max_denominator=6)), draw(st.integers(0, 4)))
    net = b.build()
    f = [F(draw(st.integers(0, int(a.capacity)))) for a in net.arcs]
    g = [F(draw(st.integers(0, int(a.capacity)))) for a in net.arcs]
    return net, Flow(f), Flow(g)


@settings(max_examples=60)
@given(random_net_and_flows())
def test_zero_flow_residual_is_forward_only(data):
    net, _f, _g = data
    res = residual_network(net, Flow.zero(net))
    assert all(r.direction == FORWARD for r in res)
    assert [r.residual_cost for r in res] == [a.cost for a in net.arcs if a.capacity > 0]


@settings(max_examples=60)
@given(random_net_and_flows())
def test_flow_cost_linear(data):
    net, f, g = data
    both = Flow([x + y for x, y in zip(f.values, g.values)])
    assert flow_cost(net, both) == flow_cost(net, f) + flow_cost(net, g)


@settings(max_examples=60)
@given(random_net_and_flows(), st.data())
def test_augment_then_undo_is_identity(data, draw):
    net, f, _g = data
    res = residual_network(net, f)
    if not res:
        return
    r = draw.draw(st.sampled_from(res))
    delta = r.residual_capacity
    sign = 1 if r.direction == FORWARD else -1
    pushed = f.copy()
    pushed[r.base] = pushed[r.base] + sign * delta
    residual_network(net, pushed)  # still feasible
    pushed[r.base] = pushed[r.base] - sign * delta
    assert pushed.values == f.values


def test_validate_flow_with_routed_amount():
    net = one_arc(0, 1)
    validate_flow(net, Flow([F(1)]), routed=1)
    with pytest.raises(InfeasibleFlow):
        validate_flow(net, Flow([F(1)]), routed=0)


def test_json_round_trip_is_byte_exact():
    b = NetworkBuilder()
    s, t = b.node("s", 1), b.node("t", -1)
    b.arc(s, t, F(-3, 26), UNBOUNDED, "e")
    b.arc(s, t, F(1, 26), F(1, 2))
    net = b.build(s, t)
    text = dumps_canonical(network_to_dict(net))
    again = network_from_dict(__import__("json").loads(text))
    assert again == net
    assert dumps_canonical(network_to_dict(again)) == text
    assert '"capacity": "inf"' in text and '"cost": "-3/26"' in text
