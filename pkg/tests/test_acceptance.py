"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the "acceptance criteria"
section of the pytest summary) and then asserts the same condition.
"""

from __future__ import annotations

import random
import time
from pathlib import Path

import pytest

from ipworkbench import channel as ch
from ipworkbench.addr import (
    MalformedAddress,
    V4Mask,
    V6Kind,
    classify_v6,
    format_v6_canonical,
    magic_number,
    network_address,
    parse_v4,
    parse_v6,
)
from ipworkbench.aggregation import (
    TraceProfile,
    aggregate,
    build_inner_packet,
    disaggregate,
    generate_trace,
    header_swap_analysis,
    ipv4_header_valid,
    payload_reconstruct_analysis,
    reconstruct_sweep,
    uniform_trace,
)
from ipworkbench.keyed import MISS, ReconstructionState
from ipworkbench.subnet import V4Network, build_plan, check_feasibility, magic_plan, parse_requirements, render_plan

GOLDEN = Path(__file__).parent / "golden"

# Reference efficiencies for the soft-cell report (not gated)
REFERENCE_REORDER_N5_70 = 0.7510
REFERENCE_LOSS_N5_10 = 0.9975


@pytest.fixture(scope="module")
def experiments():
    start = time.perf_counter()
    cfg = ch.ChannelConfig(rng_seed=0)
    loss = ch.run_experiment(ch.ExperimentGrid(ch.Axis.LOSS, rates=ch.DEFAULT_LOSS_RATES), cfg)
    reorder = ch.run_experiment(ch.ExperimentGrid(ch.Axis.REORDER, rates=ch.DEFAULT_REORDER_RATES), cfg)
    return loss, reorder, time.perf_counter() - start


def test_criterion_01_anding(acceptance):
    net = network_address(parse_v4("193.136.66.69"), V4Mask.from_value(int(parse_v4("255.255.255.240"))))
    ok = str(net) == "193.136.66.64"
    acceptance(1, ok, f"193.136.66.69 AND 255.255.255.240 = {net}")
    assert ok


def test_criterion_02_vlsm_tables(acceptance):
    four = build_plan(V4Network.parse("192.168.0.0/24"), parse_requirements((GOLDEN / "four_switch_reqs.csv").read_text()))
    six_reqs = parse_requirements((GOLDEN / "six_subnet_reqs.csv").read_text())
    six = build_plan(V4Network.parse("10.0.0.0/23"), six_reqs)
    feas = check_feasibility(six_reqs, 24)
    checks = {
        "four-switch plan": render_plan(four) == (GOLDEN / "four_switch_plan.csv").read_text(),
        "six-subnet plan": render_plan(six) == (GOLDEN / "six_subnet_plan.csv").read_text(),
        "/24 needs 292 of 256": (feas.needed, feas.available, feas.feasible) == (292, 256, False),
    }
    ok = all(checks.values())
    acceptance(2, ok, "; ".join(f"{k}: {'ok' if v else 'MISMATCH'}" for k, v in checks.items()))
    assert ok


def test_criterion_03_magic_number(acceptance):
    plan = [str(n) for n in magic_plan(V4Network.parse("192.168.0.0/24"), 4, 41)]
    rows = {
        128: (0, 128),
        32: (0, 32, 64, 96, 128, 160, 192, 224),
        16: tuple(range(0, 256, 16)),
    }
    got = {magic_number(p).magic: magic_number(p).sequence for p in (25, 27, 28)}
    ok = plan == ["192.168.0.0/26", "192.168.0.64/26", "192.168.0.128/26", "192.168.0.192/26"] and got == rows
    acceptance(3, ok, f"4x41 hosts -> {', '.join(plan)}; magic numbers {sorted(got, reverse=True)}")
    assert ok


def test_criterion_04_ipv6_text_and_kinds(acceptance):
    failures = []
    for full, short in [
        ("1080:0:0:0:8:800:200C:417A", "1080::8:800:200c:417a"),
        ("FF01:0:0:0:0:0:0:101", "ff01::101"),
        ("0:0:0:0:0:0:0:1", "::1"),
        ("0:0:0:0:0:0:0:0", "::"),
    ]:
        if format_v6_canonical(parse_v6(full)) != short or parse_v6(short) != parse_v6(full):
            failures.append(short)
    target = parse_v6("12AB:0000:0000:CD30:0000:0000:0000:0000")
    for form in ("12AB::CD30:0:0:0:0", "12AB:0:0:CD30::"):
        if parse_v6(form) != target:
            failures.append(form)
    try:
        parse_v6("12AB::CD30::")
        failures.append("12AB::CD30:: accepted")
    except MalformedAddress:
        pass
    if parse_v6("::13.1.68.3") != parse_v6("0:0:0:0:0:0:13.1.68.3") or parse_v6("::13.1.68.3").value != 0x0D014403:
        failures.append("::13.1.68.3")
    if parse_v6("::FFFF:129.144.52.38") != parse_v6("0:0:0:0:0:FFFF:129.144.52.38") or parse_v6(
        "::FFFF:129.144.52.38"
    ).value != 0xFFFF_8190_3426:
        failures.append("::FFFF:129.144.52.38")
    kinds = {
        "::": V6Kind.UNSPECIFIED,
        "::1": V6Kind.LOOPBACK,
        "fc00::1": V6Kind.UNIQUE_LOCAL_UNICAST,
        "fd12:3456::1": V6Kind.UNIQUE_LOCAL_UNICAST,
        "fe80::1234": V6Kind.LINK_LOCAL_UNICAST,
        "ff02::1": V6Kind.MULTICAST,
        "2001:db8::1": V6Kind.DOCUMENTATION,
        "2001:470::1": V6Kind.GLOBAL_UNICAST,
    }
    failures += [a for a, k in kinds.items() if classify_v6(parse_v6(a)) is not k]
    ok = not failures
    acceptance(4, ok, "all text and classification cases exact" if ok else f"failed: {failures}")
    assert ok


def test_criterion_05_nine_arrival_election(acceptance):
    arrivals = ["1a", "3a", "4a", "6a", "5a", "2b", "4b", "6b", "3b"]
    state = ReconstructionState(6)
    events = []
    for tag in arrivals:
        events += state.push(int(tag[0]) - 1, tag)
    events += state.flush()
    out = ["f" if v is MISS else v.payload_id for v in state.output[:9]]
    six = events[5]
    ok = out == ["1a", "f", "3a", "4a", "5a", "6a", "f", "2b", "3b"] and six.position == 6 and six.value.payload_id == "6a"
    acceptance(5, ok, f"first nine elections {{{', '.join(out)}}}; position 6 -> {six.log_line().split(',')[1]}")
    assert ok


def test_criterion_06_hard_cells(acceptance, experiments):
    loss, reorder, elapsed = experiments
    cells = {
        "loss n=200 20%": (loss.efficiency(200, 0.20), 0.995),
        "loss n=20 10%": (loss.efficiency(20, 0.10), 0.995),
        "reorder n=50 50%": (reorder.efficiency(50, 0.50), 0.990),
        "reorder n=200 70%": (reorder.efficiency(200, 0.70), 0.995),
    }
    ok = all(v >= floor for v, floor in cells.values()) and elapsed < 120
    detail = "; ".join(f"{k}: {100 * v:.2f}% (>= {100 * f:.1f}%)" for k, (v, f) in cells.items())
    acceptance(6, ok, f"{detail}; both full grids in {elapsed:.1f} s")
    assert ok


def test_criterion_07_soft_cells_report(acceptance, experiments):
    loss, reorder, _ = experiments
    rows = [
        ("reorder n=5 70%", reorder.efficiency(5, 0.70), REFERENCE_REORDER_N5_70),
        ("loss n=5 10%", loss.efficiency(5, 0.10), REFERENCE_LOSS_N5_10),
    ]
    parts = []
    for name, ours, reference in rows:
        dev = 100 * (ours - reference)
        flag = " DEVIATION > 5 pp" if abs(dev) > 5 else ""
        parts.append(f"{name}: {100 * ours:.2f}% vs reference {100 * reference:.2f}% ({dev:+.2f} pp){flag}")
    # report only: this criterion does not gate
    acceptance(7, True, "report: " + "; ".join(parts))


def test_criterion_08_monotone_in_key_length(acceptance, experiments):
    loss, reorder, _ = experiments
    bad = []
    for name, res in (("loss", loss), ("reorder", reorder)):
        for rate in res.grid.rates:
            series = [res.efficiency(n, rate) for n in res.grid.key_sizes]
            if not ch.is_monotone(series, 0.02):
                bad.append(f"{name} {rate:.0%}: {[round(100 * v, 2) for v in series]}")
    ok = not bad
    acceptance(8, ok, "non-decreasing within 2 pp for every rate on both axes" if ok else f"violations: {bad}")
    assert ok


def test_criterion_09_aggregation_round_trip(acceptance):
    rng = random.Random(20240601)
    src4, dst4 = parse_v4("10.0.0.1"), parse_v4("172.16.0.1")
    src6, dst6 = parse_v6("2001:db8:1::1"), parse_v6("2001:db8:2::1")
    start = time.perf_counter()
    bursts = failures = 0
    while bursts < 10_000:
        members = []
        for i in range(rng.randint(1, 8)):
            if rng.random() < 0.5:
                members.append(build_inner_packet(4, rng.randint(20, 1500), src4, dst4, rng.randint(0, 65535), 5000, i))
            else:
                members.append(build_inner_packet(6, rng.randint(40, 1500), src6, dst6, rng.randint(0, 65535), 5000, i))
        version = rng.choice((4, 6))
        carrier = aggregate(members, carrier=version, ident=bursts)
        if disaggregate(carrier) != members or (version == 4 and not ipv4_header_valid(carrier)):
            failures += 1
        bursts += 1
    jumbo_members = [build_inner_packet(6, 35_000, src6, dst6), build_inner_packet(6, 35_000, src6, dst6)]
    jumbo = aggregate(jumbo_members, carrier=6)
    jumbo_ok = jumbo[6] == 0 and jumbo[42] == 0xC2 and disaggregate(jumbo) == jumbo_members
    elapsed = time.perf_counter() - start
    ok = failures == 0 and jumbo_ok and elapsed < 30
    acceptance(9, ok, f"{bursts} random bursts, {failures} mismatches; 70000-B jumbogram {'ok' if jumbo_ok else 'BROKEN'}; {elapsed:.1f} s")
    assert ok


def test_criterion_10_header_swap(acceptance):
    one = header_swap_analysis(uniform_trace([1500]))
    full = header_swap_analysis(uniform_trace([1500] * 100))
    conserved = True
    for seed in range(10):
        tr = generate_trace(TraceProfile(flows=8, packets=1000, sizes={40: 3, 576: 1, 1500: 6}, burst_mean=6, seed=seed))
        stats = [header_swap_analysis(tr), *reconstruct_sweep(tr)]
        conserved &= all(s.conserved for s in stats)
    tr = generate_trace(TraceProfile(flows=8, packets=3000, sizes={40: 3, 576: 1, 1500: 6}, burst_mean=6, seed=42))
    demo = {v: payload_reconstruct_analysis(tr, v, 9000).packet_ratio for v in (100, 500, 1000)}
    falling = demo[100] >= demo[500] >= demo[1000]
    ok = one.packets_out == 2 and full.packet_ratio == 2.0 and conserved and falling
    acceptance(
        10,
        ok,
        f"1500-B packet -> {one.packets_out} IPv6 packets; all-1500 ratio {full.packet_ratio:.1f}; "
        f"payload conserved on 10 traces: {conserved}; reconstruct ratio at 9000 B for 100/500/1000 us: "
        + "/".join(f"{demo[v]:.3f}" for v in (100, 500, 1000)),
    )
    assert ok


def test_criterion_11_identity_channel(acceptance):
    bad = []
    for n in range(2, 51):
        for axis in ch.Axis:
            res = ch.run_trial(n, axis, 0.0, ch.trial_rng(0, axis, n, 0, 0))
            if res.efficiency != 1.0 or MISS in res.output:
                bad.append((n, axis.value))
        for length in range(8 * n + 1):
            state = ReconstructionState(n)
            for i in range(length):
                state.push(i % n, i)
            state.flush()
            if [v.payload_id if v is not MISS else None for v in state.output] != list(range(length)):
                bad.append((n, length))
    ok = not bad
    acceptance(11, ok, "n = 2..50, every length up to 8n: output equals send order, no f" if ok else f"failures: {bad[:5]}")
    assert ok
