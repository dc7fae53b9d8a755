"""Command-line front end: ``flowlab {gen,run,decide,curve,export}``.

Exit status is 0 on success, 1 on a domain error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import FlowLabError
from .exactnum import format_capacity, format_rational, parse_rational
from .experiments import (
    average_arrival_time,
    breakpoint_count,
    costs_to_iterations,
    decide_via_ns,
    decide_via_oracle,
    decide_via_ssp,
    iteration_census,
    parametric_curve,
)
from .flownet import Flow, Network, dumps_canonical, network_from_dict, network_to_dict
from .gadgets import (
    GadgetMeta,
    GadgetNetwork,
    build_counting_ns,
    build_counting_ssp,
    build_gns,
    build_gssp,
    build_ns_harness,
    normalize_instance,
    split_watched_arc,
)
from .netsimplex import NetworkSimplex, TreeBasis
from .ssp import SuccessiveShortestPaths

FAMILIES = ("nssp", "gssp", "ns-gadget", "ns-harness", "gns")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- files


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".sidecar.json")


def sidecar_dict(g: GadgetNetwork) -> dict:
    return {
        "watched": list(g.watched),
        "roles": g.roles,
        "initialFlow": {str(a): format_rational(v) for a, v in g.initial_flow.nonzero().items()},
        "initialBasis": None if g.initial_basis is None else g.initial_basis.to_json(),
        "partialBasis": sorted(g.partial_basis),
        "meta": g.meta.to_json(),
    }


def write_gadget(g: GadgetNetwork, path: Path) -> None:
    path.write_text(dumps_canonical(network_to_dict(g.net)))
    sidecar_path(path).write_text(dumps_canonical(sidecar_dict(g)))


def load_gadget(path: Path) -> GadgetNetwork:
    """Network file plus its sidecar when present (bare networks get empty roles)."""
    net = network_from_dict(json.loads(Path(path).read_text()))
    side = sidecar_path(Path(path))
    if not side.exists():
        return GadgetNetwork(
            net=net,
            roles={nd.label: nd.id for nd in net.nodes if nd.label is not None},
            watched=(),
            initial_flow=Flow.zero(net),
            initial_basis=None,
            meta=GadgetMeta("custom", 0),
        )
    data = json.loads(side.read_text())
    meta = data.get("meta") or {}
    basis = data.get("initialBasis")
    return GadgetNetwork(
        net=net,
        roles=dict(data.get("roles", {})),
        watched=tuple(data.get("watched", ())),
        initial_flow=Flow.from_mapping(net, {int(k): v for k, v in data.get("initialFlow", {}).items()}),
        initial_basis=None if basis is None else TreeBasis.from_json(basis),
        meta=GadgetMeta(
            meta.get("family", "custom"),
            int(meta.get("n", 0)),
            int(meta.get("sign", 1)),
            None if meta.get("r") is None else parse_rational(meta["r"]),
            None if meta.get("epsilon") is None else parse_rational(meta["epsilon"]),
            bool(meta.get("split", False)),
            bool(meta.get("perturbed", False)),
        ),
        partial_basis=frozenset(data.get("partialBasis", ())),
    )


def parse_list(text: str) -> list[Fraction]:
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise UsageError("--a needs at least one number")
    return [parse_rational(s) for s in items]


def _watched_ids(net: Network, labels: str | None, default: tuple[int, ...]) -> tuple[int, ...]:
    if labels is None:
        return default
    ids = []
    for label in labels.split(","):
        try:
            ids.append(net.arc_by_label(label))
        except KeyError:
            if label.isdigit() and int(label) < net.n_arcs:
                ids.append(int(label))
            else:
                raise UsageError(f"no arc labelled {label!r}") from None
    return tuple(ids)


# ---------------------------------------------------------------- export


def _dot_id(net: Network, v: int) -> str:
    return json.dumps(net.node_name(v))


def export_dot(g: GadgetNetwork) -> str:
    """Graphviz text: arcs labelled "cost; capacity", watched dashed, basis bold."""
    net = g.net
    bold = set(g.partial_basis)
    if g.initial_basis is not None:
        bold |= set(g.initial_basis.tree_arcs)
    watched = set(g.watched)
    lines = ["digraph flowlab {", "  rankdir=LR;"]
    for nd in net.nodes:
        attrs = [f"label={json.dumps(net.node_name(nd.id))}"]
        if nd.balance:
            attrs.append(f"xlabel={json.dumps(format_rational(nd.balance))}")
        lines.append(f"  {_dot_id(net, nd.id)} [{', '.join(attrs)}];")
    for a in net.arcs:
        attrs = [f'label="{format_rational(a.cost)}; {format_capacity(a.capacity)}"']
        styles = []
        if a.id in watched:
            styles.append("dashed")
        if a.id in bold:
            styles.append("bold")
        if styles:
            attrs.append(f'style="{",".join(styles)}"')
        lines.append(f"  {_dot_id(net, a.tail)} -> {_dot_id(net, a.head)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- verbs


def cmd_gen(args) -> int:
    inst = normalize_instance(parse_list(args.a))
    r = parse_rational(args.r) if args.r is not None else Fraction(1, 3)
    level = inst.n if args.level is None else args.level
    fam = args.family
    if fam == "nssp":
        g = build_counting_ssp(inst, args.sign, level)
    elif fam == "gssp":
        g = build_gssp(inst, perturb=args.perturb)
        if args.split:
            g = split_watched_arc(g)
    elif fam == "ns-gadget":
        g = build_counting_ns(inst, args.sign, r, level)
    elif fam == "ns-harness":
        g = build_ns_harness(inst, args.sign, r, level)
    else:
        g = build_gns(inst, perturb=args.perturb)
    out = Path(args.output)
    write_gadget(g, out)
    print(dumps_canonical({"network": str(out), "sidecar": str(sidecar_path(out)),
                           "nodes": g.net.n_nodes, "arcs": g.net.n_arcs}), end="")
    return 0


class _TraceWriter:
    """Writes a JSON trace one record at a time."""

    def __init__(self, path: str | None):
        self.fh = open(path, "w") if path else None
        self.first = True
        if self.fh:
            self.fh.write('{\n "iterations": [\n')

    def add(self, record: dict) -> None:
        if self.fh:
            self.fh.write(("" if self.first else ",\n") + "  " + json.dumps(record, ensure_ascii=False))
            self.first = False

    def close(self, tail: dict) -> None:
        if self.fh:
            self.fh.write("\n ]" if not self.first else " ]")
            for key, value in tail.items():
                self.fh.write(f",\n {json.dumps(key)}: {json.dumps(value)}")
            self.fh.write("\n}\n")
            self.fh.close()


def cmd_run(args) -> int:
    g = load_gadget(Path(args.file))
    watched = _watched_ids(g.net, args.watch, g.watched)
    writer = _TraceWriter(args.trace)
    first_event = None
    if args.algo == "ssp":
        limit = args.max_iter or (2 ** (g.meta.n + 4) if g.meta.family != "custom" else 10**6)
        solver = SuccessiveShortestPaths(g.net, watched, limit)
        total = Fraction(0)
        count = 0
        for it in solver.run():
            writer.add(it.to_json())
            total += it.path_cost * it.amount
            if first_event is None and it.watched_flow is not None and it.watched_flow > 0:
                first_event = it.index
            count += 1
        writer.close({"totalCost": format_rational(total)})
        summary = {"algorithm": "ssp", "iterations": count, "totalCost": format_rational(total)}
    else:
        if g.initial_basis is None:
            raise UsageError("network simplex needs an initial basis (sidecar 'initialBasis')")
        limit = args.max_iter or 10**6
        engine = NetworkSimplex(g.net, g.initial_basis, g.initial_flow, watched, limit, degenerate="record")
        for rec in engine.run():
            writer.add(rec.to_json())
            if first_event is None and (rec.watched_entered or rec.watched_in_basis):
                first_event = rec.index
        objective = Fraction(engine.objective, engine.sn.cost_scale * engine.sn.unit_scale)
        writer.close({"objective": format_rational(objective), "warnings": engine.warnings})
        summary = {
            "algorithm": "ns",
            "iterations": engine.count,
            "objective": format_rational(objective),
            "warnings": engine.warnings,
        }
    summary["watched"] = list(watched)
    summary["watchedEvent"] = first_event
    print(dumps_canonical(summary), end="")
    return 0


def _decide_one(raw: Sequence[Fraction], algo: str, census: bool) -> dict:
    inst = normalize_instance(raw)
    if algo == "ssp":
        verdict = decide_via_ssp(inst)
    elif algo == "ns":
        verdict = decide_via_ns(inst)
    else:
        verdict = decide_via_oracle(inst)
    out = verdict.to_json(inst)
    if census and algo in ("ssp", "ns"):
        c = iteration_census(inst, algo)
        out["census"] = {"count": c.count, "threshold": c.threshold, "thresholdExceeded": c.threshold_exceeded}
    return out


def cmd_decide(args) -> int:
    if (args.a is None) == (args.batch is None):
        raise UsageError("give exactly one of --a or --batch")
    if args.a is not None:
        print(dumps_canonical(_decide_one(parse_list(args.a), args.algo, args.census)), end="")
        return 0
    lines = [ln.strip() for ln in Path(args.batch).read_text().splitlines()]
    instances = [parse_list(ln) for ln in lines if ln and not ln.startswith("#")]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_decide_one, instances, [args.algo] * len(instances),
                                    [args.census] * len(instances)))
    else:
        results = [_decide_one(raw, args.algo, args.census) for raw in instances]
    print(dumps_canonical(results), end="")
    return 0


def cmd_curve(args) -> int:
    data = json.loads(Path(args.file).read_text())
    records = data.get("iterations", [])
    its = costs_to_iterations([r["cost"] for r in records], [r["amount"] for r in records])
    curve = parametric_curve(its)
    out = {
        "breakpoints": curve.to_json()["breakpoints"],
        "breakpointCount": breakpoint_count(curve),
    }
    if args.arrival_horizon is not None:
        out["averageArrivalTime"] = format_rational(average_arrival_time(its, parse_rational(args.arrival_horizon)))
    print(dumps_canonical(out), end="")
    return 0


def cmd_export(args) -> int:
    g = load_gadget(Path(args.file))
    text = export_dot(g) if args.format == "dot" else dumps_canonical(network_to_dict(g.net))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- parser


def _sign(text: str) -> int:
    if text not in ("1", "+1", "-1"):
        raise argparse.ArgumentTypeError("sign must be +1 or -1")
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", help="generate a gadget network and its sidecar")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--a", required=True, help="comma-separated rationals, e.g. 1/2,3,5/7")
    g.add_argument("--sign", type=_sign, default=1)
    g.add_argument("--r", default=None, help="gadget parameter r (default 1/3)")
    g.add_argument("--level", type=int, default=None, help="gadget level i (default n)")
    g.add_argument("--split", action="store_true", help="gssp: split the watched arc in two")
    g.add_argument("--perturb", action="store_true", help="gssp/gns: tie-breaking cost perturbation")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run SSP or network simplex on a network file")
    r.add_argument("algo", choices=("ssp", "ns"))
    r.add_argument("file")
    r.add_argument("--watch", default=None, help="arc label(s) to watch, comma-separated")
    r.add_argument("--trace", default=None, help="stream the trace to this JSON file")
    r.add_argument("--max-iter", type=int, default=None)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("decide", help="decide PARTITION via a watched arc")
    d.add_argument("--a", default=None)
    d.add_argument("--batch", default=None, help="file with one instance per line")
    d.add_argument("--algo", choices=("ssp", "ns", "oracle"), default="ssp")
    d.add_argument("--census", action="store_true", help="also report the iteration census")
    d.add_argument("--jobs", type=int, default=1)
    d.set_defaults(func=cmd_decide)

    c = sub.add_parser("curve", help="parametric cost curve of an SSP trace")
    c.add_argument("file")
    c.add_argument("--arrival-horizon", default=None)
    c.set_defaults(func=cmd_curve)

    e = sub.add_parser("export", help="export a network as DOT or canonical JSON")
    e.add_argument("file")
    e.add_argument("--format", choices=("dot", "json"), default="dot")
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_export)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"flowlab: usage error: {exc}", file=sys.stderr)
        return 2
    except (FlowLabError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"flowlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
