"""IPv4 to IPv6 remanufacturing analyses over a trace.

Two conversions are modelled. Header swap re-emits every IPv4 packet's
payload behind IPv6 headers, splitting when the 20 extra header bytes push
it over the MTU. Payload reconstruction first coalesces same-flow packets
that arrive close together into one application datum, then re-segments
that datum under a (possibly jumbo) size limit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .packets import IPV4_HEADER_LEN, IPV6_HEADER_LEN
from .trace import PacketRecord, Trace

STATS_HEADER = ("parameterization", "packet_ratio", "byte_ratio")
VICINITIES_US = (100, 500, 1000)
SIZE_LIMITS = (1500, 9000, 65535)


def segment(payload_len: int, max_payload: int) -> list[int]:
    """Split ``payload_len`` bytes into maximal chunks plus one remainder.

    An empty payload still needs one (header-only) packet.
    """
    if max_payload < 1:
        raise ValueError(f"packet size limit leaves no room for payload ({max_payload})")
    if payload_len < 0:
        raise ValueError("negative payload length")
    if payload_len == 0:
        return [0]
    full, rest = divmod(payload_len, max_payload)
    return [max_payload] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class ConversionStats:
    """Packet and byte counts before and after a conversion."""

    parameterization: str
    packets_in: int
    packets_out: int
    bytes_in: int
    bytes_out: int
    payload_in: int
    payload_out: int

    @property
    def packet_ratio(self) -> float:
        return self.packets_out / self.packets_in if self.packets_in else 1.0

    @property
    def byte_ratio(self) -> float:
        return self.bytes_out / self.bytes_in if self.bytes_in else 1.0

    @property
    def conserved(self) -> bool:
        return self.payload_in == self.payload_out

    def row(self) -> tuple[str, str, str]:
        return (self.parameterization, f"{self.packet_ratio:.6f}", f"{self.byte_ratio:.6f}")


SwapStats = ConversionStats


@dataclass(frozen=True)
class ReassemblyStats(ConversionStats):
    groups: int = 0


def _require_v4(records: Sequence[PacketRecord]) -> None:
    for i, r in enumerate(records):
        if r.ip_version != 4:
            raise ValueError(f"record {i} is IPv{r.ip_version}; remanufacturing expects an IPv4 trace")


def _v6_packets(payload_len: int, max_payload: int) -> tuple[int, int, int]:
    chunks = segment(payload_len, max_payload)
    return len(chunks), sum(chunks) + IPV6_HEADER_LEN * len(chunks), sum(chunks)


def header_swap_analysis(trace: Trace | Iterable[PacketRecord], mtu: int = 1500) -> SwapStats:
    """Packet-by-packet conversion: payload = total_len - 20, re-sent in chunks of at most mtu - 40."""
    records = tuple(trace)
    _require_v4(records)
    packets = total = payload = 0
    for r in records:
        n, b, p = _v6_packets(r.total_len - IPV4_HEADER_LEN, mtu - IPV6_HEADER_LEN)
        packets += n
        total += b
        payload += p
    return SwapStats(
        f"swap:mtu={mtu}",
        len(records),
        packets,
        sum(r.total_len for r in records),
        total,
        sum(r.total_len - IPV4_HEADER_LEN for r in records),
        payload,
    )


def flow_groups(records: Iterable[PacketRecord], vicinity_us: int) -> list[list[PacketRecord]]:
    """Group same-flow packets whose gap to the previous one is at most ``vicinity_us``.

    Groups are returned in order of their first packet.
    """
    if vicinity_us < 0:
        raise ValueError("vicinity must be non-negative")
    open_groups: dict[tuple, list[PacketRecord]] = {}
    groups: list[list[PacketRecord]] = []
    for r in records:
        g = open_groups.get(r.flow)
        if g is None or r.ts_us - g[-1].ts_us > vicinity_us:
            g = open_groups[r.flow] = []
            groups.append(g)
        g.append(r)
    return groups


def payload_reconstruct_analysis(
    trace: Trace | Iterable[PacketRecord],
    vicinity_us: int = 500,
    size_limit: int = 9000,
) -> ReassemblyStats:
    """Coalesce flow groups into one datum each and re-segment under ``size_limit``."""
    records = tuple(trace)
    _require_v4(records)
    groups = flow_groups(records, vicinity_us)
    packets = total = payload = 0
    for g in groups:
        datum = sum(r.total_len - IPV4_HEADER_LEN for r in g)
        n, b, p = _v6_packets(datum, size_limit - IPV6_HEADER_LEN)
        packets += n
        total += b
        payload += p
    return ReassemblyStats(
        f"reconstruct:vicinity_us={vicinity_us};limit={size_limit}",
        len(records),
        packets,
        sum(r.total_len for r in records),
        total,
        sum(r.total_len - IPV4_HEADER_LEN for r in records),
        payload,
        groups=len(groups),
    )


def stats_csv(stats: Iterable[ConversionStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_HEADER)
    for s in stats:
        w.writerow(s.row())
    return buf.getvalue()


def reconstruct_sweep(
    trace: Trace | Iterable[PacketRecord],
    vicinities: Sequence[int] = VICINITIES_US,
    limits: Sequence[int] = SIZE_LIMITS,
) -> list[ReassemblyStats]:
    """Every (vicinity, limit) combination, vicinity-major."""
    records = tuple(trace)
    return [payload_reconstruct_analysis(records, v, lim) for v in vicinities for lim in limits]
