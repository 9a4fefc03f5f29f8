"""IP-PAC packet aggregation and IPv4 to IPv6 remanufacturing analyses."""

from .burst import Burst, BurstPolicy, FlushReason, PacketTooLarge, Trigger, assemble_bursts
from .packets import (
    AggregationError,
    BadInnerHeader,
    MalformedCarrier,
    Overflow,
    TruncatedPayload,
    aggregate,
    build_inner_packet,
    carrier_payload,
    disaggregate,
    internet_checksum,
    ipv4_header_valid,
    split_packets,
)
from .remanufacture import (
    ConversionStats,
    ReassemblyStats,
    SwapStats,
    flow_groups,
    header_swap_analysis,
    payload_reconstruct_analysis,
    reconstruct_sweep,
    segment,
    stats_csv,
)
from .trace import PacketRecord, Trace, TraceError, TraceProfile, generate_trace, size_histogram, uniform_trace

__all__ = [
    "AggregationError",
    "BadInnerHeader",
    "Burst",
    "BurstPolicy",
    "ConversionStats",
    "FlushReason",
    "MalformedCarrier",
    "Overflow",
    "PacketRecord",
    "PacketTooLarge",
    "ReassemblyStats",
    "SwapStats",
    "Trace",
    "TraceError",
    "TraceProfile",
    "Trigger",
    "TruncatedPayload",
    "aggregate",
    "assemble_bursts",
    "build_inner_packet",
    "carrier_payload",
    "disaggregate",
    "flow_groups",
    "generate_trace",
    "header_swap_analysis",
    "internet_checksum",
    "ipv4_header_valid",
    "payload_reconstruct_analysis",
    "reconstruct_sweep",
    "segment",
    "size_histogram",
    "split_packets",
    "stats_csv",
    "uniform_trace",
]
