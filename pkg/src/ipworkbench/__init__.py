"""IPv4/IPv6 address tools, VLSM planning, keyed transport reconstruction and IP-PAC aggregation."""

from .addr import (
    AddressClass,
    MalformedAddress,
    V4Address,
    V4Mask,
    V4Network,
    V4Scope,
    V6Address,
    V6Kind,
    broadcast_address,
    classify_class,
    classify_scope,
    classify_v6,
    format_v4,
    format_v6_canonical,
    magic_number,
    network_address,
    parse_address,
    parse_v4,
    parse_v6,
    usable_hosts,
)
from .keyed import MISS, Key, KeyMode, Packet, ReconstructionState, elect, key_value_for, reconstruct
from .subnet import (
    AlignmentError,
    Infeasible,
    InvalidBase,
    PlanTable,
    SubnetRequirement,
    best_fit_prefix,
    build_plan,
    check_feasibility,
    magic_plan,
    render_plan,
)

__version__ = "0.1.0"

__all__ = [
    "MISS",
    "AddressClass",
    "AlignmentError",
    "Infeasible",
    "InvalidBase",
    "Key",
    "KeyMode",
    "MalformedAddress",
    "Packet",
    "PlanTable",
    "ReconstructionState",
    "SubnetRequirement",
    "V4Address",
    "V4Mask",
    "V4Network",
    "V4Scope",
    "V6Address",
    "V6Kind",
    "best_fit_prefix",
    "broadcast_address",
    "build_plan",
    "check_feasibility",
    "classify_class",
    "classify_scope",
    "classify_v6",
    "elect",
    "format_v4",
    "format_v6_canonical",
    "key_value_for",
    "magic_number",
    "magic_plan",
    "network_address",
    "parse_address",
    "parse_v4",
    "parse_v6",
    "reconstruct",
    "render_plan",
    "usable_hosts",
]
