"""Base IPv4/IPv6 headers, inner packet serialization and IP-PAC carriers.

A carrier is one IP header followed by untouched inner packets back to
back. Inner packets are delimited only by their own length fields, so
disaggregation needs nothing but the carrier payload.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

from ..addr import V4Address, V6Address

IPV4_HEADER_LEN = 20
IPV6_HEADER_LEN = 40
UDP_HEADER_LEN = 8
IPV4_MAX_TOTAL = 0xFFFF
IPV4_MAX_CARRIER_PAYLOAD = IPV4_MAX_TOTAL - IPV4_HEADER_LEN
IPV6_MAX_PAYLOAD = 0xFFFF
JUMBO_HBH_LEN = 8
JUMBO_OPTION_TYPE = 0xC2

PROTO_HOPOPT = 0
PROTO_UDP = 17
# Experimental protocol number (RFC 3692) tagging an aggregate payload.
PROTO_PAC = 253

DEFAULT_TTL = 64

V4_CARRIER_SRC = V4Address.parse("192.0.2.1")
V4_CARRIER_DST = V4Address.parse("198.51.100.1")
V6_CARRIER_SRC = V6Address.parse("2001:db8::1")
V6_CARRIER_DST = V6Address.parse("2001:db8::2")


class AggregationError(ValueError):
    pass


class Overflow(AggregationError):
    pass


class TruncatedPayload(AggregationError):
    pass


class BadInnerHeader(AggregationError):
    pass


class MalformedCarrier(AggregationError):
    pass


def internet_checksum(data: bytes) -> int:
    """RFC 1071 ones-complement sum of 16-bit words, complemented."""
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4_header(
    total_len: int,
    protocol: int,
    src: V4Address,
    dst: V4Address,
    ident: int = 0,
    ttl: int = DEFAULT_TTL,
) -> bytes:
    if not IPV4_HEADER_LEN <= total_len <= IPV4_MAX_TOTAL:
        raise Overflow(f"IPv4 total length {total_len} outside 20..65535")
    hdr = struct.pack(
        "!BBHHHBBH4s4s",
        0x45,  # version 4, IHL 5
        0,
        total_len,
        ident & 0xFFFF,
        0x4000,  # DF, no fragmentation of aggregates
        ttl,
        protocol,
        0,
        src.packed(),
        dst.packed(),
    )
    csum = internet_checksum(hdr)
    return hdr[:10] + struct.pack("!H", csum) + hdr[12:]


def ipv6_header(
    payload_len: int,
    next_header: int,
    src: V6Address,
    dst: V6Address,
    hop_limit: int = DEFAULT_TTL,
) -> bytes:
    if not 0 <= payload_len <= IPV6_MAX_PAYLOAD:
        raise Overflow(f"IPv6 payload length {payload_len} outside 0..65535")
    return struct.pack("!IHBB16s16s", 6 << 28, payload_len, next_header, hop_limit, src.packed(), dst.packed())


def ipv4_header_valid(header: bytes) -> bool:
    """Ones-complement check: a correct header sums to zero."""
    ihl = (header[0] & 0x0F) * 4
    return internet_checksum(header[:ihl]) == 0


_PATTERN = bytes((i * 31) & 0xFF for i in range(IPV6_MAX_PAYLOAD + 256))


def _filler(n: int, seed: int) -> bytes:
    start = seed & 0xFF
    return _PATTERN[start:start + n]


def build_inner_packet(
    ip_version: int,
    total_len: int,
    src: V4Address | V6Address,
    dst: V4Address | V6Address,
    sport: int = 0,
    dport: int = 0,
    ident: int = 0,
) -> bytes:
    """A UDP datagram of exactly ``total_len`` bytes with deterministic payload.

    Packets too short for a UDP header carry raw filler after the IP header.
    """
    header_len = IPV4_HEADER_LEN if ip_version == 4 else IPV6_HEADER_LEN
    body_len = total_len - header_len
    if body_len < 0:
        raise ValueError(f"total_len {total_len} shorter than the IPv{ip_version} header")
    if body_len >= UDP_HEADER_LEN:
        body = struct.pack("!HHHH", sport, dport, body_len, 0) + _filler(body_len - UDP_HEADER_LEN, sport ^ ident)
        proto = PROTO_UDP
    else:
        body = _filler(body_len, ident)
        proto = 59 if ip_version == 6 else 255  # "no next header" / reserved
    if ip_version == 4:
        return ipv4_header(total_len, proto, src, dst, ident) + body  # type: ignore[arg-type]
    if ip_version == 6:
        return ipv6_header(body_len, proto, src, dst) + body  # type: ignore[arg-type]
    raise ValueError(f"unsupported IP version {ip_version}")


def aggregate(
    members: Sequence[bytes],
    carrier: int = 4,
    src: V4Address | V6Address | None = None,
    dst: V4Address | V6Address | None = None,
    ident: int = 0,
) -> bytes:
    """Wrap ``members`` back to back behind one carrier header.

    IPv6 carriers switch to the jumbogram form (hop-by-hop option with a
    32-bit length) when the payload does not fit the 16-bit length field.
    """
    if not members:
        raise ValueError("cannot aggregate an empty burst")
    payload = b"".join(members)
    if carrier == 4:
        if len(payload) > IPV4_MAX_CARRIER_PAYLOAD:
            raise Overflow(f"payload of {len(payload)} bytes exceeds the IPv4 carrier limit {IPV4_MAX_CARRIER_PAYLOAD}")
        header = ipv4_header(
            IPV4_HEADER_LEN + len(payload), PROTO_PAC, src or V4_CARRIER_SRC, dst or V4_CARRIER_DST, ident
        )
        return header + payload
    if carrier == 6:
        s, d = src or V6_CARRIER_SRC, dst or V6_CARRIER_DST
        if len(payload) <= IPV6_MAX_PAYLOAD:
            return ipv6_header(len(payload), PROTO_PAC, s, d) + payload
        jumbo_len = JUMBO_HBH_LEN + len(payload)
        if jumbo_len > 0xFFFFFFFF:
            raise Overflow(f"payload of {len(payload)} bytes exceeds the jumbogram limit")
        hbh = struct.pack("!BBBBI", PROTO_PAC, 0, JUMBO_OPTION_TYPE, 4, jumbo_len)
        return ipv6_header(0, PROTO_HOPOPT, s, d) + hbh + payload
    raise ValueError(f"carrier must be 4 or 6, got {carrier}")


def carrier_payload(carrier: bytes) -> bytes:
    """Strip the carrier header (and jumbo option) and return the payload bytes."""
    if not carrier:
        raise MalformedCarrier("empty carrier")
    version = carrier[0] >> 4
    if version == 4:
        if len(carrier) < IPV4_HEADER_LEN:
            raise MalformedCarrier("carrier shorter than an IPv4 header")
        ihl = (carrier[0] & 0x0F) * 4
        total = struct.unpack_from("!H", carrier, 2)[0]
        if ihl < IPV4_HEADER_LEN or total < ihl or total > len(carrier):
            raise MalformedCarrier(f"inconsistent IPv4 carrier lengths (ihl={ihl}, total={total}, have={len(carrier)})")
        if not ipv4_header_valid(carrier):
            raise MalformedCarrier("IPv4 carrier header checksum mismatch")
        return carrier[ihl:total]
    if version == 6:
        if len(carrier) < IPV6_HEADER_LEN:
            raise MalformedCarrier("carrier shorter than an IPv6 header")
        plen, nxt = struct.unpack_from("!HB", carrier, 4)
        if plen == 0 and nxt == PROTO_HOPOPT:
            if len(carrier) < IPV6_HEADER_LEN + JUMBO_HBH_LEN:
                raise MalformedCarrier("truncated hop-by-hop header")
            _, _, opt_type, opt_len, jumbo_len = struct.unpack_from("!BBBBI", carrier, IPV6_HEADER_LEN)
            if opt_type != JUMBO_OPTION_TYPE or opt_len != 4:
                raise MalformedCarrier("hop-by-hop header is not a jumbo payload option")
            end = IPV6_HEADER_LEN + jumbo_len
            if end > len(carrier):
                raise MalformedCarrier("jumbogram shorter than its length field")
            return carrier[IPV6_HEADER_LEN + JUMBO_HBH_LEN:end]
        end = IPV6_HEADER_LEN + plen
        if end > len(carrier):
            raise MalformedCarrier("IPv6 carrier shorter than its payload length")
        return carrier[IPV6_HEADER_LEN:end]
    raise MalformedCarrier(f"carrier version nibble {version}")


def split_packets(payload: bytes) -> list[bytes]:
    """Walk back-to-back IP packets using each header's own length field."""
    out: list[bytes] = []
    off = 0
    view = memoryview(payload)
    while off < len(payload):
        version = payload[off] >> 4
        if version == 4:
            if len(payload) - off < IPV4_HEADER_LEN:
                raise TruncatedPayload(f"IPv4 header cut short at offset {off}")
            ihl = (payload[off] & 0x0F) * 4
            size = struct.unpack_from("!H", payload, off + 2)[0]
            if ihl < IPV4_HEADER_LEN or size < ihl:
                raise BadInnerHeader(f"inconsistent IPv4 lengths at offset {off} (ihl={ihl}, total={size})")
        elif version == 6:
            if len(payload) - off < IPV6_HEADER_LEN:
                raise TruncatedPayload(f"IPv6 header cut short at offset {off}")
            size = IPV6_HEADER_LEN + struct.unpack_from("!H", payload, off + 4)[0]
        else:
            raise BadInnerHeader(f"version nibble {version} at offset {off}")
        if off + size > len(payload):
            raise TruncatedPayload(f"packet at offset {off} needs {size} bytes, {len(payload) - off} left")
        out.append(bytes(view[off:off + size]))
        off += size
    return out


def disaggregate(carrier: bytes) -> list[bytes]:
    return split_packets(carrier_payload(carrier))


def total_length(packets: Iterable[bytes]) -> int:
    return sum(len(p) for p in packets)
