"""Packet records, traces and the synthetic trace generator."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ..addr import V4Address, V6Address, parse_address
from .packets import IPV4_HEADER_LEN, IPV4_MAX_TOTAL, IPV6_HEADER_LEN, IPV6_MAX_PAYLOAD, build_inner_packet

TRACE_HEADER = ("ts_us", "ip_version", "src", "dst", "sport", "dport", "total_len")


class TraceError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class PacketRecord:
    ts_us: int
    ip_version: int
    src: V4Address | V6Address
    dst: V4Address | V6Address
    sport: int
    dport: int
    total_len: int

    def __post_init__(self) -> None:
        if self.ip_version == 4:
            lo, hi, kind = IPV4_HEADER_LEN, IPV4_MAX_TOTAL, V4Address
        elif self.ip_version == 6:
            lo, hi, kind = IPV6_HEADER_LEN, IPV6_HEADER_LEN + IPV6_MAX_PAYLOAD, V6Address
        else:
            raise TraceError(f"ip_version must be 4 or 6, got {self.ip_version}")
        if not lo <= self.total_len <= hi:
            raise TraceError(f"total_len {self.total_len} outside {lo}..{hi} for IPv{self.ip_version}")
        if not (isinstance(self.src, kind) and isinstance(self.dst, kind)):
            raise TraceError(f"addresses do not match IPv{self.ip_version}")
        if not (0 <= self.sport <= 0xFFFF and 0 <= self.dport <= 0xFFFF):
            raise TraceError("ports must be 0..65535")
        if self.ts_us < 0:
            raise TraceError("timestamps start at 0")

    @property
    def header_len(self) -> int:
        return IPV4_HEADER_LEN if self.ip_version == 4 else IPV6_HEADER_LEN

    @property
    def payload_len(self) -> int:
        return self.total_len - self.header_len

    @property
    def flow(self) -> tuple:
        return (self.src, self.dst, self.sport, self.dport, self.ip_version)

    def serialize(self, ident: int = 0) -> bytes:
        return build_inner_packet(self.ip_version, self.total_len, self.src, self.dst, self.sport, self.dport, ident)


@dataclass(frozen=True)
class Trace:
    records: tuple[PacketRecord, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        prev = 0
        for i, r in enumerate(self.records):
            if r.ts_us < prev:
                raise TraceError(f"timestamps decrease at record {i}")
            prev = r.ts_us

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PacketRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> PacketRecord:
        return self.records[i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.records:
            w.writerow((r.ts_us, r.ip_version, r.src, r.dst, r.sport, r.dport, r.total_len))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Trace:
        rows = csv.reader(io.StringIO(text))
        header = next(rows, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise TraceError(f"trace CSV header must be {','.join(TRACE_HEADER)}")
        records = []
        for lineno, row in enumerate(rows, 2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise TraceError(f"line {lineno}: expected {len(TRACE_HEADER)} fields, got {len(row)}")
            try:
                ts, ver, src, dst, sport, dport, tlen = row
                records.append(
                    PacketRecord(int(ts), int(ver), parse_address(src), parse_address(dst), int(sport), int(dport), int(tlen))
                )
            except ValueError as exc:
                raise TraceError(f"line {lineno}: {exc}") from None
        return cls(tuple(records))


@dataclass(frozen=True)
class TraceProfile:
    """Parameters of a synthetic trace.

    Traffic arrives as application events: each event picks a flow, then
    emits a geometric number of packets (mean ``burst_mean``) spaced
    ``intra_gap_us`` apart. Events are separated by exponential gaps with
    mean ``mean_gap_us``. Packet sizes are drawn independently from
    ``sizes`` (total length in bytes -> weight).
    """

    flows: int = 1
    packets: int = 10
    sizes: Mapping[int, float] = field(default_factory=lambda: {1500: 1.0})
    mean_gap_us: float = 100.0
    burst_mean: float = 1.0
    intra_gap_us: int = 12
    ip_version: int = 4
    routes: int | None = None  # distinct destinations; defaults to one per flow
    seed: int = 0

    def __post_init__(self) -> None:
        if self.flows < 1 or self.packets < 0:
            raise TraceError("need at least one flow and a non-negative packet count")
        if not self.sizes or any(w < 0 for w in self.sizes.values()) or sum(self.sizes.values()) <= 0:
            raise TraceError("size distribution needs positive total weight")
        if self.burst_mean < 1 or self.mean_gap_us < 0 or self.intra_gap_us < 0:
            raise TraceError("burst_mean >= 1 and non-negative gaps required")
        if self.ip_version not in (4, 6):
            raise TraceError("ip_version must be 4 or 6")
        if self.routes is not None and self.routes < 1:
            raise TraceError("routes must be >= 1")


def _flow_endpoints(i: int, routes: int, ip_version: int) -> tuple:
    route = i % routes
    if ip_version == 4:
        src = V4Address.parse("10.0.0.0") + (i + 1)
        dst = V4Address.parse("172.16.0.0") + (route + 1)
    else:
        src = V6Address.parse("2001:db8:1::") + (i + 1)
        dst = V6Address.parse("2001:db8:2::") + (route + 1)
    sport = 1024 + (i * 7919) % 60000
    dport = (5000, 443, 80, 53, 7000)[i % 5]
    return src, dst, sport, dport


def generate_trace(profile: TraceProfile) -> Trace:
    rng = np.random.Generator(np.random.PCG64(profile.seed))
    routes = profile.routes or profile.flows
    endpoints = [_flow_endpoints(i, routes, profile.ip_version) for i in range(profile.flows)]
    size_values = np.array(sorted(profile.sizes), dtype=np.int64)
    weights = np.array([profile.sizes[s] for s in size_values], dtype=float)
    sizes = rng.choice(size_values, size=profile.packets, p=weights / weights.sum())
    records: list[PacketRecord] = []
    t = 0.0
    while len(records) < profile.packets:
        t += rng.exponential(profile.mean_gap_us) if profile.mean_gap_us > 0 else 0.0
        flow = int(rng.integers(profile.flows))
        burst = int(rng.geometric(1.0 / profile.burst_mean))
        src, dst, sport, dport = endpoints[flow]
        for k in range(min(burst, profile.packets - len(records))):
            ts = int(t) + k * profile.intra_gap_us
            records.append(PacketRecord(ts, profile.ip_version, src, dst, sport, dport, int(sizes[len(records)])))
        t += (burst - 1) * profile.intra_gap_us
    return Trace(tuple(records))


def size_histogram(records: Iterable[PacketRecord]) -> dict[int, int]:
    hist: dict[int, int] = {}
    for r in records:
        hist[r.total_len] = hist.get(r.total_len, 0) + 1
    return hist


def uniform_trace(
    sizes: Sequence[int],
    gap_us: int = 0,
    ip_version: int = 4,
    src: str = "10.0.0.1",
    dst: str = "172.16.0.1",
    sport: int = 40000,
    dport: int = 5000,
) -> Trace:
    """Single-flow trace with fixed spacing, handy for worked examples."""
    s, d = parse_address(src), parse_address(dst)
    return Trace(tuple(PacketRecord(i * gap_us, ip_version, s, d, sport, dport, n) for i, n in enumerate(sizes)))
