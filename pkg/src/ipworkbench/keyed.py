"""Keyed-UDP / Keyed-IPv6 keys and the receiver-side stream reconstruction.

A key is an ordered list of n ports or IPv6 addresses. The sender walks it
round-robin, so the key value a datagram arrives on tells the receiver the
datagram's position modulo n. :class:`ReconstructionState` turns that into a
stream order, electing one packet (or the miss marker ``f``) per position.

Position convention: stream positions are 1-based; key indices are 0-based,
so key index k holds positions k+1, k+1+n, k+1+2n, ...
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence, Union

from .addr import V6Address

KeyValue = Union[int, V6Address]
PayloadId = Hashable


class KeyMode(enum.Enum):
    SOURCE_KEYED = "sK"
    DESTINATION_KEYED = "dK"
    SOURCE_DESTINATION_KEYED = "sdK"


@dataclass(frozen=True)
class Key:
    """Round-robin key.

    ``values`` is the keyed side for sK and dK modes and the source side
    in sdK mode, where ``destinations`` holds the paired destination side.
    """

    mode: KeyMode
    values: tuple[KeyValue, ...]
    destinations: tuple[KeyValue, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "destinations", tuple(self.destinations))
        if len(self.values) < 2:
            raise ValueError("a key needs at least 2 values")
        if len(set(self.values)) != len(self.values):
            raise ValueError("key values must be pairwise distinct")
        if self.mode is KeyMode.SOURCE_DESTINATION_KEYED:
            if len(self.destinations) != len(self.values):
                raise ValueError("sdK keys need equal-length source and destination sequences")
            if len(set(self.destinations)) != len(self.destinations):
                raise ValueError("key values must be pairwise distinct")
        elif self.destinations:
            raise ValueError(f"{self.mode.value} keys take a single value sequence")

    def __len__(self) -> int:
        return len(self.values)

    def index_of(self, observed: KeyValue | tuple[KeyValue, KeyValue]) -> int:
        """Key index of an observed port/address (a pair in sdK mode)."""
        if self.mode is KeyMode.SOURCE_DESTINATION_KEYED:
            return list(zip(self.values, self.destinations)).index(observed)
        return self.values.index(observed)


def key_value_for(seq_no: int, key: Key) -> KeyValue | tuple[KeyValue, KeyValue]:
    """Key value used for the ``seq_no``-th datagram sent (1-based)."""
    if seq_no < 1:
        raise ValueError("seq_no is 1-based")
    i = (seq_no - 1) % len(key)
    if key.mode is KeyMode.SOURCE_DESTINATION_KEYED:
        return key.values[i], key.destinations[i]
    return key.values[i]


@dataclass(frozen=True, slots=True)
class KeyedPacket:
    payload_id: PayloadId
    key_index: int
    arrival_seq: int = 0


class _MissType:
    __slots__ = ()
    _instance = None

    def __new__(cls) -> _MissType:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISS"

    def __reduce__(self) -> str:
        return "MISS"


MISS = _MissType()
"""The ``f`` (failure to receive) marker."""


@dataclass(frozen=True, slots=True)
class Packet:
    payload_id: PayloadId


SlotValue = Union[Packet, _MissType]


@dataclass(frozen=True, slots=True)
class ElectionEvent:
    position: int
    value: SlotValue

    def log_line(self) -> str:
        token = "f" if self.value is MISS else str(self.value.payload_id)
        return f"{self.position},{token}"


def elect(candidates: Iterable[SlotValue], excluded: set | frozenset = frozenset()) -> SlotValue:
    """Pick the winner among one position's candidates, oldest queue first.

    The packet with most occurrences wins; ties go to the candidate that
    occurs first. Already-elected payloads are not eligible. The miss marker
    only wins when no eligible packet is among the candidates.
    """
    return _elect_weighted(((c, 1) for c in candidates), excluded)


def _elect_weighted(weighted: Iterable[tuple[SlotValue, int]], excluded: set | frozenset) -> SlotValue:
    counts: dict[Packet, int] = {}
    for cand, weight in weighted:
        if cand is MISS or cand.payload_id in excluded:
            continue
        # dict preserves first-occurrence order, which settles ties below
        counts[cand] = counts.get(cand, 0) + weight
    if not counts:
        return MISS
    return max(counts, key=counts.__getitem__)


def default_buffer_len(n: int) -> int:
    """Half the key length, rounded up."""
    return -(-n // 2)


@dataclass
class ReconstructionState:
    """Stream Reconstruction Algorithm state for one keyed stream.

    Each push drops the elected head of the sorting queue, places the new
    packet at its inferred position and records a queue snapshot; the last
    ``n + 1`` snapshots form the election window. Whenever ``buffer_len``
    placed packets are waiting, position ``next_position`` is elected.
    """

    n: int
    buffer_len: int | None = None
    rounds: list[int] = field(init=False)
    slots: dict[int, tuple[PayloadId, int]] = field(init=False, default_factory=dict)
    snapshots: deque = field(init=False)
    elected_ids: set = field(init=False, default_factory=set)
    output: list[SlotValue] = field(init=False, default_factory=list)
    next_position: int = field(init=False, default=1)
    max_seen: int = field(init=False, default=0)
    pushes: int = field(init=False, default=0)
    flushed: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("key length must be >= 2")
        if self.buffer_len is None:
            self.buffer_len = default_buffer_len(self.n)
        if self.buffer_len < 1:
            raise ValueError("buffer_len must be >= 1")
        self.rounds = [0] * self.n
        self.snapshots = deque(maxlen=self.n + 1)

    @property
    def pending(self) -> int:
        return len(self.slots)

    def infer_position(self, key_index: int) -> int:
        """Global position for the next packet seen on ``key_index``.

        The round counter predicts the slot. A slot that is occupied, already
        elected, or more than half a key behind the newest position seen
        holds a hidden packet, so the packet moves to the first free slot of
        the same key index after it. The counter then resyncs past that slot.
        """
        if not 0 <= key_index < self.n:
            raise ValueError(f"key_index {key_index} outside key of length {self.n}")
        pos = self.rounds[key_index] * self.n + key_index + 1
        stale_below = self.max_seen - self.n // 2
        while pos < self.next_position or pos in self.slots or pos < stale_below:
            pos += self.n
        self.rounds[key_index] = (pos - 1) // self.n + 1
        self.max_seen = max(self.max_seen, pos)
        return pos

    def push(self, key_index: int, payload_id: PayloadId) -> list[ElectionEvent]:
        if self.flushed:
            raise RuntimeError("state already flushed")
        pos = self.infer_position(key_index)
        self.pushes += 1
        self.slots[pos] = (payload_id, self.pushes)
        self.snapshots.append(self.pushes)
        events = []
        while len(self.slots) >= self.buffer_len:
            events.append(self._elect_next())
        return events

    def candidates(self, position: int) -> list[SlotValue]:
        """Slot ``position`` as seen by each retained queue, oldest first."""
        return [v for v, w in self._weighted_candidates(position) for _ in range(w)]

    def _weighted_candidates(self, position: int) -> list[tuple[SlotValue, int]]:
        retained = len(self.snapshots)
        entry = self.slots.get(position)
        if entry is None:
            return [(MISS, retained)] if retained else []
        payload_id, placed_at = entry
        # snapshots taken before the packet was placed still show f there
        first = self.snapshots[0] if retained else placed_at
        showing_miss = min(max(placed_at - first, 0), retained)
        out: list[tuple[SlotValue, int]] = []
        if showing_miss:
            out.append((MISS, showing_miss))
        out.append((Packet(payload_id), retained - showing_miss))
        return out

    def _elect_next(self) -> ElectionEvent:
        j = self.next_position
        value = _elect_weighted(self._weighted_candidates(j), self.elected_ids)
        self.slots.pop(j, None)
        if value is not MISS:
            self.elected_ids.add(value.payload_id)
        self.output.append(value)
        self.next_position = j + 1
        return ElectionEvent(j, value)

    def flush(self, until: int | None = None) -> list[ElectionEvent]:
        """Elect every remaining position and close the state.

        Elections run up to the highest occupied slot. A receiver that knows
        where the stream ends passes ``until`` so trailing losses show as ``f``.
        """
        if self.flushed:
            return []
        until = max(until or 0, max(self.slots, default=0))
        events = []
        while self.next_position <= until:
            events.append(self._elect_next())
        self.flushed = True
        return events


def reconstruct(
    arrivals: Iterable[tuple[int, PayloadId]],
    n: int,
    buffer_len: int | None = None,
    until: int | None = None,
) -> list[SlotValue]:
    """Run the whole algorithm over ``(key_index, payload_id)`` arrivals."""
    state = ReconstructionState(n, buffer_len)
    for key_index, payload_id in arrivals:
        state.push(key_index, payload_id)
    state.flush(until)
    return state.output


def event_log(events: Sequence[ElectionEvent]) -> str:
    """One ``position,payload_id|f`` line per election."""
    return "".join(e.log_line() + "\n" for e in events)
