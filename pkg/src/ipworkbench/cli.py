"""Command-line entry point: ``ipworkbench <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 infeasible plan or failed check.
Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import channel
from .addr import (
    MalformedAddress,
    V4Address,
    V4Network,
    broadcast_address,
    classify_class,
    classify_scope,
    classify_v6,
    format_v6_canonical,
    magic_number,
    network_address,
    parse_address,
    parse_v6,
    usable_hosts,
)
from .aggregation import (
    AggregationError,
    BurstPolicy,
    PacketTooLarge,
    Trace,
    TraceError,
    TraceProfile,
    Trigger,
    assemble_bursts,
    disaggregate,
    generate_trace,
    header_swap_analysis,
    payload_reconstruct_analysis,
    reconstruct_sweep,
    stats_csv,
)
from .aggregation.remanufacture import ConversionStats
from .subnet import Infeasible, PlanError, build_plan, check_feasibility, magic_plan, parse_requirements, render_plan

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONSTRAINT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; here 2 means "infeasible", so raise instead."""

    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: error: {message}")


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- addr ----------------------------------------------------------------------


def cmd_addr_classify(args: argparse.Namespace) -> int:
    a = parse_address(args.address)
    if isinstance(a, V4Address):
        print(f"Class {classify_class(a).value}, {classify_scope(a).value}")
    else:
        print(classify_v6(a).value)
    return EXIT_OK


def cmd_addr_net(args: argparse.Namespace) -> int:
    net = V4Network.parse(args.network)
    m = net.mask
    print(f"address    {net.address}")
    print(f"mask       {V4Address(m.value)} (/{m.prefix_len})")
    print(f"network    {network_address(net.address, m)}")
    print(f"broadcast  {broadcast_address(net.address, m)}")
    print(f"usable     {usable_hosts(m.prefix_len)}")
    return EXIT_OK


def cmd_addr_magic(args: argparse.Namespace) -> int:
    mn = magic_number(args.prefix)
    print(f"octet      {mn.octet_index + 1} (mask {mn.octet_mask})")
    print(f"magic      {mn.magic}")
    print(f"sequence   {', '.join(map(str, mn.sequence))}")
    return EXIT_OK


def cmd_addr_v6(args: argparse.Namespace) -> int:
    a = parse_v6(args.address)
    if args.action == "canon":
        print(format_v6_canonical(a, embedded_ipv4=args.embedded_ipv4))
    else:
        print(classify_v6(a).value)
    return EXIT_OK


# -- plan ----------------------------------------------------------------------


def cmd_plan(args: argparse.Namespace) -> int:
    base = V4Network.parse(args.base)
    if args.equal is not None:
        if args.hosts_each is None:
            raise UsageError("plan: --equal needs --hosts-each")
        for net in magic_plan(base, args.equal, args.hosts_each):
            print(net)
        return EXIT_OK
    if args.reqs is None:
        raise UsageError("plan: --reqs or --equal is required")
    reqs = parse_requirements(_read(args.reqs))
    feas = check_feasibility(reqs, base.prefix_len)
    if not feas.feasible:
        print(
            f"infeasible: need {feas.needed} addresses, base {base} holds {feas.available} (deficit {feas.deficit})",
            file=sys.stderr,
        )
        return EXIT_CONSTRAINT
    _write(render_plan(build_plan(base, reqs), args.format), args.output)
    return EXIT_OK


# -- keyed-sim -----------------------------------------------------------------


def _buffer_arg(text: str) -> str | int:
    if text in ("half", "n-1"):
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("buffer must be 'half', 'n-1' or an integer") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def cmd_keyed_sim(args: argparse.Namespace) -> int:
    if args.config:
        grid, config = channel.parse_experiment_config(_read(args.config))
    else:
        grid, config = channel.ExperimentGrid(channel.Axis.REORDER), channel.ChannelConfig()
    axis = channel.Axis(args.axis) if args.axis else grid.axis
    rates = grid.rates if args.config else None
    if args.rate is not None:
        rates = (args.rate,)
    elif args.rates is not None:
        rates = args.rates
    if rates is None:
        rates = channel.DEFAULT_LOSS_RATES if axis is channel.Axis.LOSS else channel.DEFAULT_REORDER_RATES
    grid = channel.ExperimentGrid(
        axis=axis,
        key_sizes=args.sizes or grid.key_sizes,
        rates=rates,
        runs=args.runs if args.runs is not None else grid.runs,
        rounds=grid.rounds,
        buffer=args.buffer if args.buffer is not None else grid.buffer,
    )
    model = config.reorder_model
    if args.model is not None:
        model = channel.make_model(args.model, args.max_d)
    seed = args.seed if args.seed is not None else config.rng_seed
    config = channel.ChannelConfig(reorder_model=model, rng_seed=seed)
    result = channel.run_experiment(grid, config, workers=args.workers)
    _write(result.to_table_csv() if args.layout == "table" else result.to_csv(), args.output)
    return EXIT_OK


# -- trace / aggregate / remanufacture -------------------------------------------


def _size_dist(text: str) -> dict[int, float]:
    dist: dict[int, float] = {}
    try:
        for item in text.split(","):
            size, _, weight = item.partition(":")
            dist[int(size)] = float(weight) if weight else 1.0
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected size:weight pairs, got {text!r}") from None
    return dist


def cmd_trace(args: argparse.Namespace) -> int:
    profile = TraceProfile(
        flows=args.flows,
        packets=args.packets,
        sizes=args.sizes,
        mean_gap_us=args.mean_gap_us,
        burst_mean=args.burst_mean,
        intra_gap_us=args.intra_gap_us,
        ip_version=args.ip_version,
        routes=args.routes,
        seed=args.seed,
    )
    _write(generate_trace(profile).to_csv(), args.output)
    return EXIT_OK


def cmd_aggregate(args: argparse.Namespace) -> int:
    trace = Trace.from_csv(_read(args.trace))
    policy = BurstPolicy(args.max_size, args.max_delay_us, Trigger(args.policy))
    bursts = assemble_bursts(trace, policy)
    carriers = [b.carrier(args.carrier, ident=i) for i, b in enumerate(bursts)]
    if args.check_roundtrip:
        for i, (b, c) in enumerate(zip(bursts, carriers)):
            if disaggregate(c) != list(b.packets):
                print(f"round trip FAILED for burst {i}", file=sys.stderr)
                return EXIT_CONSTRAINT
    bytes_in = sum(r.total_len for r in trace)
    stats = ConversionStats(
        f"aggregate:policy={args.policy};max_size={args.max_size};max_delay_us={args.max_delay_us};carrier={args.carrier}",
        len(trace),
        len(bursts),
        bytes_in,
        sum(len(c) for c in carriers),
        bytes_in,
        sum(b.payload_len for b in bursts),
    )
    _write(stats_csv([stats]), args.output)
    if args.check_roundtrip:
        print(f"round trip OK ({len(bursts)} bursts)", file=sys.stderr)
    return EXIT_OK


def cmd_remanufacture(args: argparse.Namespace) -> int:
    trace = Trace.from_csv(_read(args.trace))
    if args.mode == "swap":
        stats = [header_swap_analysis(trace, args.mtu)]
    elif args.mode == "reconstruct":
        stats = [payload_reconstruct_analysis(trace, args.vicinity_us, args.limit)]
    else:
        stats = [header_swap_analysis(trace, args.mtu), *reconstruct_sweep(trace)]
    _write(stats_csv(stats), args.output)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ipworkbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    addr = sub.add_parser("addr", help="classify and dissect addresses")
    asub = addr.add_subparsers(dest="addr_command", required=True, parser_class=_Parser)
    a = asub.add_parser("classify", help="class and scope of an IPv4 address, or IPv6 address type")
    a.add_argument("address")
    a.set_defaults(func=cmd_addr_classify)
    a = asub.add_parser("net", help="network, broadcast and usable hosts of a.b.c.d/p")
    a.add_argument("network")
    a.set_defaults(func=cmd_addr_net)
    a = asub.add_parser("magic", help="magic number and start sequence for a prefix length")
    a.add_argument("prefix", type=int)
    a.set_defaults(func=cmd_addr_magic)
    a = asub.add_parser("v6", help="IPv6 canonical text or type")
    a.add_argument("action", choices=("canon", "classify"))
    a.add_argument("address")
    a.add_argument("--embedded-ipv4", action="store_true", help="write the low 32 bits in dotted form")
    a.set_defaults(func=cmd_addr_v6)

    s = sub.add_parser("plan", help="VLSM addressing table or equal-size subnets")
    s.add_argument("--base", required=True, help="base network, e.g. 10.0.0.0/23")
    s.add_argument("--reqs", help="requirements file with name,required_hosts lines ('-' for stdin)")
    s.add_argument("--format", choices=("csv", "pretty"), default="csv")
    s.add_argument("--equal", type=int, help="number of equal subnets (magic-number plan)")
    s.add_argument("--hosts-each", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_plan)

    k = sub.add_parser("keyed-sim", help="Monte-Carlo efficiency of stream reconstruction")
    k.add_argument("--axis", choices=("loss", "reorder"))
    k.add_argument("--sizes", type=_int_list, help="key sizes, e.g. 5,10,15")
    k.add_argument("--rates", type=_float_list, help="error rates, e.g. 0.1,0.35")
    k.add_argument("--rate", type=float, help="single error rate")
    k.add_argument("--runs", type=int)
    k.add_argument("--seed", type=int, help="master seed (default 0)")
    k.add_argument("--model", choices=("adjacent", "displacement"))
    k.add_argument("--max-d", type=int, default=3)
    k.add_argument("--buffer", type=_buffer_arg, help="'half' (default), 'n-1' or a fixed length")
    k.add_argument("--config", help="key=value experiment file; flags override it")
    k.add_argument("--layout", choices=("long", "table"), default="long")
    k.add_argument("--workers", type=int, default=1)
    k.add_argument("-o", "--output")
    k.set_defaults(func=cmd_keyed_sim)

    t = sub.add_parser("trace", help="generate a synthetic trace CSV")
    t.add_argument("--flows", type=int, default=8)
    t.add_argument("--packets", type=int, default=1000)
    t.add_argument("--sizes", type=_size_dist, default={1500: 0.6, 576: 0.1, 40: 0.3}, help="size:weight,...")
    t.add_argument("--mean-gap-us", type=float, default=100.0)
    t.add_argument("--burst-mean", type=float, default=4.0)
    t.add_argument("--intra-gap-us", type=int, default=12)
    t.add_argument("--ip-version", type=int, choices=(4, 6), default=4)
    t.add_argument("--routes", type=int)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_trace)

    g = sub.add_parser("aggregate", help="IP-PAC burst assembly statistics")
    g.add_argument("--trace", required=True)
    g.add_argument("--policy", choices=[tr.value for tr in Trigger], default="hybrid")
    g.add_argument("--max-size", type=int, default=9000)
    g.add_argument("--max-delay-us", type=int, default=10_000)
    g.add_argument("--carrier", type=int, choices=(4, 6), default=4)
    g.add_argument("--check-roundtrip", action="store_true")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_aggregate)

    r = sub.add_parser("remanufacture", help="IPv4 to IPv6 conversion statistics")
    r.add_argument("--trace", required=True)
    r.add_argument("--mode", choices=("swap", "reconstruct", "sweep"), default="swap")
    r.add_argument("--vicinity-us", type=int, default=500)
    r.add_argument("--limit", type=int, default=9000)
    r.add_argument("--mtu", type=int, default=1500)
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_remanufacture)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except Infeasible as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONSTRAINT
    except PacketTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (
        MalformedAddress,
        PlanError,
        TraceError,
        AggregationError,
        channel.InvalidGrid,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
