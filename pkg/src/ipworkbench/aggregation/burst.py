"""Hybrid burst assembly for an IP-PAC ingress node.

One queue per route (destination address). A queue is flushed when the
next packet would push it past ``max_burst_payload`` (size trigger) or
when its oldest packet has waited ``max_delay_us`` (time trigger).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .packets import aggregate
from .trace import PacketRecord, Trace

DEFAULT_MAX_DELAY_US = 10_000


class Trigger(enum.Enum):
    SIZE_ONLY = "size"
    TIME_ONLY = "time"
    HYBRID = "hybrid"


class FlushReason(enum.Enum):
    SIZE = "size"
    TIME = "time"
    END = "end"


class PacketTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class BurstPolicy:
    max_burst_payload: int | None = 9000
    max_delay_us: int | None = DEFAULT_MAX_DELAY_US
    trigger: Trigger = Trigger.HYBRID

    def __post_init__(self) -> None:
        if self.size_bound is None and self.delay_bound is None:
            raise ValueError(f"{self.trigger.value} trigger needs a finite bound")
        if self.size_bound is not None and self.size_bound <= 0:
            raise ValueError("max_burst_payload must be positive")
        if self.delay_bound is not None and self.delay_bound <= 0:
            raise ValueError("max_delay_us must be positive")

    @property
    def size_bound(self) -> int | None:
        return None if self.trigger is Trigger.TIME_ONLY else self.max_burst_payload

    @property
    def delay_bound(self) -> int | None:
        return None if self.trigger is Trigger.SIZE_ONLY else self.max_delay_us


@dataclass(frozen=True)
class Burst:
    route: Hashable
    members: tuple[PacketRecord, ...]
    flush_time_us: int
    reason: FlushReason
    packets: tuple[bytes, ...] = field(repr=False, default=())

    @property
    def payload_len(self) -> int:
        return sum(m.total_len for m in self.members)

    def payload(self) -> bytes:
        return b"".join(self.packets)

    def carrier(self, version: int = 4, ident: int = 0) -> bytes:
        return aggregate(self.packets, version, ident=ident)


@dataclass
class _Queue:
    members: list[PacketRecord] = field(default_factory=list)
    size: int = 0

    @property
    def oldest(self) -> int:
        return self.members[0].ts_us


def _route(record: PacketRecord) -> Hashable:
    return record.dst


def _route_sort_key(route: Hashable) -> tuple:
    return (route.__class__.__name__, route)


def assemble_bursts(trace: Trace | Iterable[PacketRecord], policy: BurstPolicy) -> list[Burst]:
    """Partition ``trace`` into bursts, ordered by (flush time, route)."""
    size_bound, delay_bound = policy.size_bound, policy.delay_bound
    queues: dict[Hashable, _Queue] = {}
    done: list[tuple[int, tuple, int, Burst]] = []
    seq = 0

    def close(route: Hashable, when: int, reason: FlushReason) -> None:
        nonlocal seq
        q = queues.pop(route)
        burst = Burst(
            route,
            tuple(q.members),
            when,
            reason,
            tuple(m.serialize(ident=i) for i, m in enumerate(q.members)),
        )
        done.append((when, _route_sort_key(route), seq, burst))
        seq += 1

    def expire(now: int | None) -> None:
        # Time trigger: close every queue whose oldest packet has aged out.
        if delay_bound is None:
            return
        for route in sorted(queues, key=lambda r: (queues[r].oldest, _route_sort_key(r))):
            deadline = queues[route].oldest + delay_bound
            if now is None or deadline <= now:
                close(route, deadline, FlushReason.TIME)

    for rec in trace:
        if size_bound is not None and rec.total_len > size_bound:
            raise PacketTooLarge(f"packet of {rec.total_len} bytes exceeds burst limit {size_bound}")
        expire(rec.ts_us)
        route = _route(rec)
        q = queues.get(route)
        if q is not None and size_bound is not None and q.size + rec.total_len > size_bound:
            close(route, rec.ts_us, FlushReason.SIZE)
            q = None
        if q is None:
            q = queues[route] = _Queue()
        q.members.append(rec)
        q.size += rec.total_len
    if delay_bound is not None:
        expire(None)
    else:
        last = max((q.members[-1].ts_us for q in queues.values()), default=0)
        for route in sorted(queues, key=_route_sort_key):
            close(route, last, FlushReason.END)
    done.sort(key=lambda item: item[:3])
    return [b for *_, b in done]
