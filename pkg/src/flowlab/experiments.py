"""Implicit-solve drivers, brute-force PARTITION oracles and trace analyses."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import HorizonTooSmall, InstanceTooLarge
from .exactnum import as_rational
from .gadgets import (
    GadgetNetwork,
    PartitionInstance,
    build_gns,
    build_gssp,
    normalize_instance,
    split_watched_arc,
    x_param,
)
from .netsimplex import NetworkSimplex
from .ssp import SspIteration, SspTrace, SuccessiveShortestPaths

ORACLE_MAX_N = 24
SSP_MAX_N = 14
NS_MAX_N = 12


# ---------------------------------------------------------------- oracles


def _check_size(inst: PartitionInstance, limit: int) -> None:
    if inst.n > limit:
        raise InstanceTooLarge(f"n = {inst.n} exceeds the limit {limit}")


def _subset_sums(weights: Sequence[int]) -> list[int]:
    """reach[i] is a bitset of the sums attainable with weights[i:]."""
    reach = [0] * (len(weights) + 1)
    reach[-1] = 1
    for i in range(len(weights) - 1, -1, -1):
        reach[i] = reach[i + 1] | (reach[i + 1] << weights[i])
    return reach


def partition_oracle(inst: PartitionInstance) -> tuple[int, ...] | None:
    """Lexicographically smallest 0-based index set splitting the instance evenly."""
    _check_size(inst, ORACLE_MAX_N)
    w = inst.weights
    total = sum(w)
    if total % 2:
        return None
    reach = _subset_sums(w)
    rest = total // 2
    if not (reach[0] >> rest) & 1:
        return None
    chosen: list[int] = []
    i = 0
    while rest:
        # smallest next index that still leaves a completable remainder
        while not (w[i] <= rest and (reach[i + 1] >> (rest - w[i])) & 1):
            i += 1
        chosen.append(i)
        rest -= w[i]
        i += 1
    return tuple(chosen)


def smallest_zero_k(inst: PartitionInstance) -> int | None:
    """Least k whose signed sum of the normalized entries vanishes."""
    _check_size(inst, ORACLE_MAX_N)
    w = inst.weights
    total = sum(w)
    if total % 2:
        return None
    # prefix[j]: sums attainable with w[:j]
    prefix = [1]
    for x in w:
        prefix.append(prefix[-1] | (prefix[-1] << x))
    rest = total // 2  # weight that must carry a minus sign
    if not (prefix[-1] >> rest) & 1:
        return None
    k = 0
    for j in range(len(w) - 1, -1, -1):
        if (prefix[j] >> rest) & 1:
            continue  # keep bit j clear
        k |= 1 << j
        rest -= w[j]
    assert rest == 0
    return k


# ---------------------------------------------------------------- deciders


@dataclass
class Verdict:
    algorithm: str
    answer: bool
    witness: int | None = None
    oracle_subset: tuple[int, ...] | None = None
    iterations: int = 0
    warnings: list[str] = field(default_factory=list)
    degenerate_pivots: list[int] = field(default_factory=list)
    leaving_ties: list[int] = field(default_factory=list)
    trace: SspTrace | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        assert self.answer == (self.witness is not None) or self.algorithm == "oracle"

    def to_json(self, inst: PartitionInstance) -> dict:
        return {
            "instance": [str(a) for a in inst.raw],
            "normalized": [str(a) for a in inst.normalized],
            "algorithm": self.algorithm,
            "answer": self.answer,
            "witnessIteration": self.witness,
            "oracleSubset": None if self.oracle_subset is None else list(self.oracle_subset),
            "iterations": self.iterations,
        }


def _oracle_or_none(inst: PartitionInstance):
    return partition_oracle(inst) if inst.n <= ORACLE_MAX_N else None


def _ssp_budget(n: int) -> int:
    return 2 ** (n + 4)


def _watch_ssp(g: GadgetNetwork, keep: bool = False):
    solver = SuccessiveShortestPaths(g.net, g.watched, _ssp_budget(g.meta.n))
    witness = None
    kept = []
    count = 0
    for it in solver.run():
        if witness is None and it.watched_flow > 0:
            witness = it.index
        if keep:
            kept.append(it)
        count += 1
    trace = None
    if keep:
        total = sum((it.path_cost * it.amount for it in kept), Fraction(0))
        trace = SspTrace(kept, solver.flow, total, solver.watched)
    return witness, count, trace


def decide_via_ssp(inst: PartitionInstance, max_n: int = SSP_MAX_N, keep_trace: bool = False) -> Verdict:
    """Run SSP on the two-gadget network and report whether e ever carries flow."""
    _check_size(inst, max_n)
    witness, count, trace = _watch_ssp(build_gssp(inst), keep_trace)
    return Verdict("ssp", witness is not None, witness, _oracle_or_none(inst), count, trace=trace)


def _run_gns(inst: PartitionInstance, perturb: bool = False):
    g = build_gns(inst, perturb)
    engine = NetworkSimplex(
        g.net, g.initial_basis, g.initial_flow, g.watched, max_pivots=8 * 4 * x_param(g.meta.n), degenerate="record"
    )
    witness = None
    degenerate, ties = [], []
    for rec in engine.run():
        if witness is None and (rec.watched_entered or rec.watched_in_basis):
            witness = rec.index
        if rec.theta == 0:
            degenerate.append(rec.index)
        if rec.leaving_tie:
            ties.append(rec.index)
    return g, engine, witness, degenerate, ties


def decide_via_ns(inst: PartitionInstance, max_n: int = NS_MAX_N) -> Verdict:
    """Run Network Simplex on the two-gadget network and report whether e ever enters.

    e has capacity 1/2 and saturates in the same pivot it enters, so the event
    watched is "e chosen as entering arc" (it is never left in the tree).
    """
    _check_size(inst, max_n)
    _g, engine, witness, degenerate, ties = _run_gns(inst)
    return Verdict(
        "ns",
        witness is not None,
        witness,
        _oracle_or_none(inst),
        engine.count,
        list(engine.warnings),
        degenerate,
        ties,
    )


def decide_via_oracle(inst: PartitionInstance) -> Verdict:
    subset = partition_oracle(inst)
    return Verdict("oracle", subset is not None, None, subset, 0)


@dataclass(frozen=True)
class Census:
    count: int
    threshold: int
    threshold_exceeded: bool


def iteration_census(inst: PartitionInstance, algo: str) -> Census:
    """Iteration count of the split SSP network or the simplex network against its threshold."""
    algo = algo.lower()
    if algo == "ssp":
        _check_size(inst, SSP_MAX_N)
        g = split_watched_arc(build_gssp(inst))
        _w, count, _t = _watch_ssp(g)
        threshold = 2 ** (inst.n + 1)
    elif algo == "ns":
        _check_size(inst, NS_MAX_N)
        g, engine, *_ = _run_gns(inst)
        count = engine.count
        threshold = 4 * x_param(g.meta.n)
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    return Census(count, threshold, count > threshold)


def gadget_state_pairing(g: GadgetNetwork, trace: SspTrace) -> bool:
    """True iff both gadgets have received equal flow before every even iteration."""
    plus = g.arc("(s,s_n+)")
    minus = g.arc("(s,s_n-)")
    into_plus = into_minus = Fraction(0)
    for it in trace.iterations:
        if it.index % 2 == 0 and into_plus != into_minus:
            return False
        for a, d in it.path_arcs:
            sign = 1 if d == 0 else -1
            if a == plus:
                into_plus += sign * it.amount
            elif a == minus:
                into_minus += sign * it.amount
    return len(trace.iterations) % 2 == 1 or into_plus == into_minus


# ---------------------------------------------------------------- parametric analysis


@dataclass(frozen=True)
class ParametricCurve:
    breakpoints: tuple[tuple[Fraction, Fraction], ...]

    @property
    def slopes(self) -> list[Fraction]:
        pts = self.breakpoints
        return [(c1 - c0) / (f1 - f0) for (f0, c0), (f1, c1) in zip(pts, pts[1:])]

    def to_json(self) -> dict:
        return {"breakpoints": [[str(f), str(c)] for f, c in self.breakpoints]}


def _iterations(trace) -> list[SspIteration]:
    return trace.iterations if isinstance(trace, SspTrace) else list(trace)


def parametric_curve(trace) -> ParametricCurve:
    """Minimum cost as a function of flow value, one segment per distinct path cost."""
    pts = [(Fraction(0), Fraction(0))]
    last_slope = None
    for it in _iterations(trace):
        if it.amount == 0:
            continue
        f, c = pts[-1]
        nxt = (f + it.amount, c + it.amount * it.path_cost)
        if last_slope is not None and it.path_cost == last_slope:
            pts[-1] = nxt
        else:
            pts.append(nxt)
        last_slope = it.path_cost
    return ParametricCurve(tuple(pts))


def breakpoint_count(curve: ParametricCurve) -> int:
    return len(curve.breakpoints) - 1


def average_arrival_time(trace, horizon) -> Fraction:
    """Mean arrival time of the temporally repeated flow over [0, horizon].

    Path j (cost c, amount q) delivers at rate q during [c, horizon], so it
    contributes q (T^2 - c^2) / 2 to the time integral and q (T - c) to the
    arrived volume.
    """
    T = as_rational(horizon)
    its = _iterations(trace)
    if not its:
        raise HorizonTooSmall("empty trace: nothing ever arrives")
    worst = max(it.path_cost for it in its)
    if T < worst:
        raise HorizonTooSmall(f"horizon {T} below the longest path cost {worst}")
    weighted = sum((it.amount * (T * T - it.path_cost**2) / 2 for it in its), Fraction(0))
    volume = sum((it.amount * (T - it.path_cost) for it in its), Fraction(0))
    if volume == 0:
        raise HorizonTooSmall(f"horizon {T} leaves no time for any flow to arrive")
    return weighted / volume


def costs_to_iterations(costs: Iterable, amounts: Iterable | None = None) -> list[SspIteration]:
    """Synthetic iterations for curve and arrival-time analysis of bare cost lists."""
    costs = [as_rational(c) for c in costs]
    amounts = [Fraction(1)] * len(costs) if amounts is None else [as_rational(q) for q in amounts]
    return [SspIteration(j, [], [], c, q) for j, (c, q) in enumerate(zip(costs, amounts))]


# ---------------------------------------------------------------- corpora


def planted_yes_instance(rng, n: int, hi: int = 30) -> list[int]:
    """n positive integers (n >= 2) containing a subset with half the total."""
    if n < 2:
        raise ValueError("a planted yes-instance needs n >= 2")
    left = rng.randint(1, n - 1)
    side = [rng.randint(1, hi) for _ in range(left)]
    target = sum(side)
    m = n - left
    while target < m:  # make room for m positive parts
        side[rng.randrange(left)] += 1
        target += 1
    cuts = sorted(rng.sample(range(1, target), m - 1))
    other = [b - a for a, b in zip([0, *cuts], [*cuts, target])]
    values = side + other
    rng.shuffle(values)
    return values


def random_no_instance(rng, n: int, hi: int = 30, tries: int = 1000) -> list[int]:
    """Random draw rejected by the oracle, preferring even totals (non-trivial no)."""
    fallback = None
    for _ in range(tries):
        values = [rng.randint(1, hi) for _ in range(n)]
        if partition_oracle(normalize_instance(values)) is not None:
            continue
        if sum(values) % 2 == 0:
            return values
        fallback = fallback or values
    if fallback is None:
        raise RuntimeError("could not draw a no-instance")
    return fallback


def sample_corpus(seed: int, count: int, n_max: int, n_min: int = 2) -> list[list[int]]:
    """Half planted yes-instances, half oracle-rejected random draws, n in [n_min, n_max]."""
    rng = random.Random(seed)
    out = []
    for j in range(count):
        n = rng.randint(max(n_min, 2), n_max) if j % 2 == 0 else rng.randint(n_min, n_max)
        out.append(planted_yes_instance(rng, n) if j % 2 == 0 else random_no_instance(rng, n))
    return out
