"""IPv4 and IPv6 address values, text forms and classification.

Addresses are plain integers wrapped in frozen dataclasses so they hash,
order and compare by value. Parsing is strict: anything that is not a
well-formed literal raises :class:`MalformedAddress`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union

V4_BITS = 32
V6_BITS = 128
V4_ALL_ONES = (1 << V4_BITS) - 1
V6_ALL_ONES = (1 << V6_BITS) - 1

_OCTET_RE = re.compile(r"[0-9]{1,3}")
_HEXTET_RE = re.compile(r"[0-9A-Fa-f]{1,4}")


class MalformedAddress(ValueError):
    """Raised when an address literal cannot be parsed.

    ``component`` is the zero-based index of the offending dotted/colon
    component when one can be singled out, otherwise ``None``.
    """

    def __init__(self, text: str, reason: str, component: int | None = None) -> None:
        self.text = text
        self.reason = reason
        self.component = component
        where = f" (component {component})" if component is not None else ""
        super().__init__(f"malformed address {text!r}: {reason}{where}")


class AddressClass(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"


class V4Scope(enum.Enum):
    RESERVED = "Reserved"
    PUBLIC = "Public"
    PRIVATE = "Private"
    LOCAL_LOOPBACK = "LocalLoopback"
    MULTICAST = "Multicast"


class V6Kind(enum.Enum):
    UNSPECIFIED = "Unspecified"
    LOOPBACK = "Loopback"
    UNIQUE_LOCAL_UNICAST = "UniqueLocalUnicast"
    LINK_LOCAL_UNICAST = "LinkLocalUnicast"
    MULTICAST = "Multicast"
    DOCUMENTATION = "Documentation"
    GLOBAL_UNICAST = "GlobalUnicast"


# ---------------------------------------------------------------------------
# IPv4
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True, slots=True)
class V4Address:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= V4_ALL_ONES:
            raise ValueError(f"IPv4 value out of range: {self.value}")

    @classmethod
    def parse(cls, text: str) -> V4Address:
        return parse_v4(text)

    def __str__(self) -> str:
        return format_v4(self)

    def __int__(self) -> int:
        return self.value

    def __add__(self, other: int) -> V4Address:
        return V4Address(self.value + other)

    def __sub__(self, other: int) -> V4Address:
        return V4Address(self.value - other)

    @property
    def octets(self) -> tuple[int, int, int, int]:
        v = self.value
        return (v >> 24 & 0xFF, v >> 16 & 0xFF, v >> 8 & 0xFF, v & 0xFF)

    def packed(self) -> bytes:
        return self.value.to_bytes(4, "big")


@dataclass(frozen=True, order=True, slots=True)
class V4Mask:
    """A contiguous ("slash notation") IPv4 mask."""

    prefix_len: int

    def __post_init__(self) -> None:
        if not 0 <= self.prefix_len <= V4_BITS:
            raise ValueError(f"IPv4 prefix length out of range: {self.prefix_len}")

    @property
    def value(self) -> int:
        return (V4_ALL_ONES << (V4_BITS - self.prefix_len)) & V4_ALL_ONES

    @property
    def host_bits(self) -> int:
        return V4_ALL_ONES ^ self.value

    @property
    def block_size(self) -> int:
        return 1 << (V4_BITS - self.prefix_len)

    @classmethod
    def from_value(cls, mask: int) -> V4Mask:
        inverted = V4_ALL_ONES ^ mask
        if inverted & (inverted + 1):
            raise ValueError(f"mask {format_v4(V4Address(mask))} is not contiguous")
        return cls(V4_BITS - inverted.bit_length())

    def __str__(self) -> str:
        return format_v4(V4Address(self.value))


@dataclass(frozen=True, order=True, slots=True)
class V4Network:
    """An address plus prefix length, e.g. ``10.0.0.0/23``.

    The address may carry host bits; use :attr:`is_network` or
    :func:`network_address` when that matters.
    """

    address: V4Address
    prefix_len: int

    def __post_init__(self) -> None:
        V4Mask(self.prefix_len)

    @classmethod
    def parse(cls, text: str) -> V4Network:
        addr_text, sep, plen_text = text.partition("/")
        if not sep:
            raise MalformedAddress(text, "missing '/prefix'")
        if not plen_text.isascii() or not plen_text.isdigit() or int(plen_text) > V4_BITS:
            raise MalformedAddress(text, f"bad prefix length {plen_text!r}")
        return cls(parse_v4(addr_text), int(plen_text))

    @property
    def mask(self) -> V4Mask:
        return V4Mask(self.prefix_len)

    @property
    def size(self) -> int:
        return 1 << (V4_BITS - self.prefix_len)

    @property
    def network(self) -> V4Address:
        return network_address(self.address, self.mask)

    @property
    def broadcast(self) -> V4Address:
        return broadcast_address(self.address, self.mask)

    @property
    def is_network(self) -> bool:
        return self.address == self.network

    def __contains__(self, addr: V4Address) -> bool:
        return addr.value & self.mask.value == self.network.value

    def __str__(self) -> str:
        return f"{self.address}/{self.prefix_len}"


def parse_v4(text: str) -> V4Address:
    """Parse dotted-decimal text. Leading zeros are read as decimal."""
    parts = text.split(".")
    if len(parts) != 4:
        raise MalformedAddress(text, f"expected 4 octets, got {len(parts)}")
    value = 0
    for i, part in enumerate(parts):
        if not part:
            raise MalformedAddress(text, "empty octet", i)
        if not _OCTET_RE.fullmatch(part):
            raise MalformedAddress(text, f"octet {part!r} is not a decimal number", i)
        octet = int(part)
        if octet > 255:
            raise MalformedAddress(text, f"octet {octet} out of range", i)
        value = value << 8 | octet
    return V4Address(value)


def format_v4(a: V4Address) -> str:
    return ".".join(str(o) for o in a.octets)


def classify_class(a: V4Address) -> AddressClass:
    first = a.value >> 24
    if first < 0x80:
        return AddressClass.A
    if first < 0xC0:
        return AddressClass.B
    if first < 0xE0:
        return AddressClass.C
    if first < 0xF0:
        return AddressClass.D
    return AddressClass.E


def _block(text: str) -> tuple[int, int]:
    net = V4Network.parse(text)
    return net.address.value, net.mask.value


# Evaluated in order; the first match wins.
_SCOPE_RULES: tuple[tuple[tuple[int, int], V4Scope], ...] = (
    (_block("0.0.0.0/8"), V4Scope.RESERVED),
    (_block("127.0.0.0/8"), V4Scope.LOCAL_LOOPBACK),
    (_block("10.0.0.0/8"), V4Scope.PRIVATE),
    (_block("172.16.0.0/12"), V4Scope.PRIVATE),
    (_block("192.168.0.0/16"), V4Scope.PRIVATE),
    (_block("224.0.0.0/4"), V4Scope.MULTICAST),
    (_block("240.0.0.0/4"), V4Scope.RESERVED),
    (_block("255.255.255.255/32"), V4Scope.RESERVED),
)


def classify_scope(a: V4Address) -> V4Scope:
    for (net, mask), scope in _SCOPE_RULES:
        if a.value & mask == net:
            return scope
    return V4Scope.PUBLIC


def network_address(a: V4Address, m: V4Mask) -> V4Address:
    """ANDing: clear the host bits of ``a``."""
    return V4Address(a.value & m.value)


def broadcast_address(a: V4Address, m: V4Mask) -> V4Address:
    return V4Address(a.value & m.value | m.host_bits)


def usable_hosts(prefix_len: int) -> int:
    """Host addresses in a block, minus network and broadcast (0 for /31, /32)."""
    V4Mask(prefix_len)
    return max((1 << (V4_BITS - prefix_len)) - 2, 0)


@dataclass(frozen=True, slots=True)
class MagicNumber:
    prefix_len: int
    octet_index: int  # 0 is the leftmost octet
    octet_mask: int
    magic: int

    @property
    def sequence(self) -> tuple[int, ...]:
        """Start values of successive subnets inside the interesting octet."""
        return tuple(range(0, 256, self.magic))

    @property
    def step(self) -> int:
        """The magic number expressed as a 32-bit address increment."""
        return self.magic << (8 * (3 - self.octet_index))


def magic_number(prefix_len: int) -> MagicNumber:
    """256 minus the mask value of the octet where the prefix boundary falls.

    >>> magic_number(26).magic
    64
    """
    if not 1 <= prefix_len <= V4_BITS:
        raise ValueError(f"no interesting octet for /{prefix_len}")
    idx = (prefix_len - 1) // 8
    octet_mask = V4Mask(prefix_len).value >> (8 * (3 - idx)) & 0xFF
    return MagicNumber(prefix_len, idx, octet_mask, 256 - octet_mask)


# ---------------------------------------------------------------------------
# IPv6
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True, slots=True)
class V6Address:
    value: int
    zone_id: str | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.value <= V6_ALL_ONES:
            raise ValueError(f"IPv6 value out of range: {self.value:#x}")
        if self.zone_id is not None and not self.zone_id:
            raise ValueError("zone_id must be non-empty when present")

    @classmethod
    def parse(cls, text: str) -> V6Address:
        return parse_v6(text)

    def __str__(self) -> str:
        return format_v6_canonical(self)

    def __int__(self) -> int:
        return self.value

    def __add__(self, other: int) -> V6Address:
        return V6Address(self.value + other, self.zone_id)

    @property
    def groups(self) -> tuple[int, ...]:
        return tuple(self.value >> (16 * (7 - i)) & 0xFFFF for i in range(8))

    def packed(self) -> bytes:
        return self.value.to_bytes(16, "big")


Address = Union[V4Address, V6Address]


def _parse_groups(text: str, chunk: str, offset: int, allow_v4: bool = True) -> list[int]:
    """Parse a ':'-separated run of hextets; the last may be dotted IPv4."""
    if not chunk:
        return []
    pieces = chunk.split(":")
    groups: list[int] = []
    for i, piece in enumerate(pieces):
        if "." in piece:
            if not allow_v4 or i != len(pieces) - 1:
                raise MalformedAddress(text, "embedded IPv4 must be the last component", offset + i)
            try:
                v4 = parse_v4(piece)
            except MalformedAddress as exc:
                raise MalformedAddress(text, f"bad embedded IPv4: {exc.reason}", offset + i) from None
            groups += [v4.value >> 16, v4.value & 0xFFFF]
        elif _HEXTET_RE.fullmatch(piece):
            groups.append(int(piece, 16))
        else:
            reason = "empty group" if not piece else f"bad hex group {piece!r}"
            raise MalformedAddress(text, reason, offset + i)
    return groups


def parse_v6(text: str) -> V6Address:
    """Parse a full, ``::``-compressed or IPv4-embedded literal with optional ``%zone``."""
    body, pct, zone = text.partition("%")
    if pct and not zone:
        raise MalformedAddress(text, "empty zone id")
    n_compress = body.count("::")
    if n_compress > 1:
        raise MalformedAddress(text, "double compression: '::' appears more than once")
    if ":::" in body:
        raise MalformedAddress(text, "':::' is not a valid separator")
    if n_compress:
        head, _, tail = body.partition("::")
        left = _parse_groups(text, head, 0, allow_v4=False)
        right = _parse_groups(text, tail, len(left))
        if len(left) + len(right) > 7:
            raise MalformedAddress(text, f"group count: {len(left) + len(right)} groups plus '::'")
        groups = left + [0] * (8 - len(left) - len(right)) + right
    else:
        groups = _parse_groups(text, body, 0)
        if len(groups) != 8:
            raise MalformedAddress(text, f"group count: expected 8 groups, got {len(groups)}")
    value = 0
    for g in groups:
        value = value << 16 | g
    return V6Address(value, zone if pct else None)


def _longest_zero_run(groups: tuple[int, ...]) -> tuple[int, int]:
    """(start, length) of the leftmost longest run of zero groups."""
    best_start, best_len = -1, 0
    start = None
    for i, g in enumerate((*groups, 1)):
        if g == 0 and start is None:
            start = i
        elif g != 0 and start is not None:
            if i - start > best_len:
                best_start, best_len = start, i - start
            start = None
    return best_start, best_len


def format_v6_canonical(a: V6Address, *, embedded_ipv4: bool = False) -> str:
    """Lowercase, no leading zeros, ``::`` over the longest run of >= 2 zero groups.

    With ``embedded_ipv4`` the last 32 bits are written as dotted decimal.
    """
    groups = a.groups
    tail = ""
    if embedded_ipv4:
        tail = format_v4(V4Address(a.value & V4_ALL_ONES))
        groups = groups[:6]
    start, length = _longest_zero_run(groups)
    hexes = [f"{g:x}" for g in groups]
    if length >= 2:
        left = ":".join(hexes[:start])
        right = ":".join(hexes[start + length:])
        if tail:
            right = f"{right}:{tail}" if right else tail
        text = f"{left}::{right}"
    else:
        text = ":".join(hexes + ([tail] if tail else []))
    if a.zone_id is not None:
        text += f"%{a.zone_id}"
    return text


def _v6_prefix(text: str) -> tuple[int, int]:
    addr_text, _, plen = text.partition("/")
    return parse_v6(addr_text).value, int(plen)


_V6_KINDS: tuple[tuple[tuple[int, int], V6Kind], ...] = (
    (_v6_prefix("::/128"), V6Kind.UNSPECIFIED),
    (_v6_prefix("::1/128"), V6Kind.LOOPBACK),
    (_v6_prefix("fc00::/7"), V6Kind.UNIQUE_LOCAL_UNICAST),
    (_v6_prefix("fe80::/10"), V6Kind.LINK_LOCAL_UNICAST),
    (_v6_prefix("ff00::/8"), V6Kind.MULTICAST),
    (_v6_prefix("2001:db8::/32"), V6Kind.DOCUMENTATION),
)


def classify_v6(a: V6Address) -> V6Kind:
    """Longest-prefix match over the special ranges; everything else is global unicast."""
    best: tuple[int, V6Kind] = (-1, V6Kind.GLOBAL_UNICAST)
    for (net, plen), kind in _V6_KINDS:
        shift = V6_BITS - plen
        if a.value >> shift == net >> shift and plen > best[0]:
            best = (plen, kind)
    return best[1]


def parse_address(text: str) -> Address:
    """Parse either family, deciding by the presence of ':'."""
    return parse_v6(text) if ":" in text else parse_v4(text)
