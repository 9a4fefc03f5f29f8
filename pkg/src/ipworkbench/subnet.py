"""Subnet planning: equal-size "magic number" slicing and the VLSM addressing table.

The VLSM table has eight columns per subnetwork::

    Ref  #Hosts  NM  #AA  NAddr  1st addr  Last addr  Bdcast

Rows are placed in descending order of required hosts. The first NAddr is
the base network; each following NAddr is the previous Bdcast plus one.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .addr import V4_BITS, V4Address, V4Network, magic_number, usable_hosts

PLAN_COLUMNS = ("Ref", "#Hosts", "NM", "#AA", "NAddr", "1st addr", "Last addr", "Bdcast")
MAX_PLAN_PREFIX = 30


class PlanError(ValueError):
    pass


class Infeasible(PlanError):
    def __init__(self, needed: int, available: int) -> None:
        self.needed = needed
        self.available = available
        self.deficit = needed - available
        super().__init__(f"infeasible: need {needed} addresses, base block holds {available}")


class InvalidBase(PlanError):
    pass


class AlignmentError(PlanError):
    pass


@dataclass(frozen=True, slots=True)
class SubnetRequirement:
    """A named subnetwork and its host count.

    ``prefix_len`` pins the mask instead of taking the best fit; it must
    still leave room for ``required_hosts``.
    """

    ref_name: str
    required_hosts: int
    prefix_len: int | None = None

    def __post_init__(self) -> None:
        if self.required_hosts < 1:
            raise ValueError(f"{self.ref_name}: required_hosts must be >= 1, got {self.required_hosts}")
        if self.prefix_len is not None:
            if not 0 <= self.prefix_len <= MAX_PLAN_PREFIX:
                raise ValueError(f"{self.ref_name}: prefix /{self.prefix_len} outside /0../{MAX_PLAN_PREFIX}")
            if usable_hosts(self.prefix_len) < self.required_hosts:
                raise ValueError(
                    f"{self.ref_name}: /{self.prefix_len} holds {usable_hosts(self.prefix_len)} hosts,"
                    f" {self.required_hosts} required"
                )

    @property
    def prefix(self) -> int:
        return best_fit_prefix(self.required_hosts) if self.prefix_len is None else self.prefix_len


@dataclass(frozen=True, slots=True)
class PlanRow:
    ref_name: str
    required_hosts: int
    prefix_len: int
    awarded_hosts: int
    network_addr: V4Address
    first_host: V4Address
    last_host: V4Address
    broadcast: V4Address

    @property
    def block(self) -> V4Network:
        return V4Network(self.network_addr, self.prefix_len)

    def cells(self) -> tuple[str, ...]:
        return (
            self.ref_name,
            str(self.required_hosts),
            f"/{self.prefix_len}",
            str(self.awarded_hosts),
            str(self.network_addr),
            str(self.first_host),
            str(self.last_host),
            str(self.broadcast),
        )


@dataclass(frozen=True)
class PlanTable:
    base_network: V4Network
    rows: tuple[PlanRow, ...] = ()
    next_free: V4Address = field(default=V4Address(0))

    @property
    def base_end(self) -> V4Address:
        return self.base_network.broadcast

    def append(self, req: SubnetRequirement) -> PlanTable:
        """Add one subnetwork at ``next_free``.

        Unlike :func:`build_plan`, nothing is re-sorted, so a block that is
        larger than ``next_free``'s alignment allows is rejected.
        """
        prefix = req.prefix
        size = 1 << (V4_BITS - prefix)
        if self.next_free.value % size:
            raise AlignmentError(
                f"{req.ref_name}: /{prefix} block cannot start at {self.next_free}"
            )
        end = self.next_free.value + size - 1
        if end > self.base_end.value:
            used = self.next_free.value - self.base_network.address.value
            raise Infeasible(used + size, self.base_network.size)
        row = _make_row(req, prefix, self.next_free)
        return PlanTable(self.base_network, self.rows + (row,), row.broadcast + 1)


def best_fit_prefix(required_hosts: int) -> int:
    """Longest prefix (0..30) whose usable host count covers ``required_hosts``."""
    if required_hosts < 1:
        raise ValueError("required_hosts must be >= 1")
    for prefix in range(MAX_PLAN_PREFIX, -1, -1):
        if usable_hosts(prefix) >= required_hosts:
            return prefix
    raise Infeasible(required_hosts + 2, 1 << V4_BITS)


@dataclass(frozen=True, slots=True)
class Feasibility:
    needed: int
    available: int

    @property
    def feasible(self) -> bool:
        return self.needed <= self.available

    @property
    def deficit(self) -> int:
        return max(self.needed - self.available, 0)


def check_feasibility(reqs: Iterable[SubnetRequirement], base_prefix: int) -> Feasibility:
    """Sum of awarded hosts plus the two reserved addresses per subnetwork."""
    needed = sum(usable_hosts(r.prefix) + 2 for r in reqs)
    return Feasibility(needed, 1 << (V4_BITS - base_prefix))


def _make_row(req: SubnetRequirement, prefix: int, naddr: V4Address) -> PlanRow:
    awarded = usable_hosts(prefix)
    last = naddr + awarded
    return PlanRow(
        ref_name=req.ref_name,
        required_hosts=req.required_hosts,
        prefix_len=prefix,
        awarded_hosts=awarded,
        network_addr=naddr,
        first_host=naddr + 1,
        last_host=last,
        broadcast=last + 1,
    )


def sort_requirements(reqs: Iterable[SubnetRequirement]) -> list[SubnetRequirement]:
    # Largest block first keeps every block aligned; within a block size the
    # larger host count goes first. sorted() is stable, so exact ties keep
    # their input order. Without pinned prefixes this is plain descending
    # order of required hosts.
    return sorted(reqs, key=lambda r: (r.prefix, -r.required_hosts))


def build_plan(base: V4Network, reqs: Iterable[SubnetRequirement]) -> PlanTable:
    if not base.is_network:
        raise InvalidBase(f"base {base} has host bits set (network is {base.network}/{base.prefix_len})")
    ordered = sort_requirements(reqs)
    feas = check_feasibility(ordered, base.prefix_len)
    if not feas.feasible:
        raise Infeasible(feas.needed, feas.available)
    rows: list[PlanRow] = []
    naddr = base.address
    for req in ordered:
        row = _make_row(req, req.prefix, naddr)
        rows.append(row)
        naddr = row.broadcast + 1
    return PlanTable(base, tuple(rows), naddr)


def magic_plan(base: V4Network, n_equal_subnets: int, hosts_each: int) -> list[V4Network]:
    """Slice ``base`` into equal subnets stepping by the magic number."""
    if n_equal_subnets < 1:
        raise ValueError("n_equal_subnets must be >= 1")
    if not base.is_network:
        raise InvalidBase(f"base {base} has host bits set")
    prefix = best_fit_prefix(hosts_each)
    slice_size = 1 << (V4_BITS - prefix)
    if prefix < base.prefix_len or n_equal_subnets * slice_size > base.size:
        raise Infeasible(n_equal_subnets * slice_size, base.size)
    step = magic_number(prefix).step
    return [V4Network(base.address + i * step, prefix) for i in range(n_equal_subnets)]


def render_plan(table: PlanTable, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PLAN_COLUMNS)
        writer.writerows(row.cells() for row in table.rows)
        return buf.getvalue()
    if fmt == "pretty":
        grid = [PLAN_COLUMNS, *(row.cells() for row in table.rows)]
        widths = [max(len(r[i]) for r in grid) for i in range(len(PLAN_COLUMNS))]
        lines = [f"Base network address: {table.base_network}", ""]
        for i, r in enumerate(grid):
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        lines += ["", f"Next free address: {table.next_free}"]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_requirements(text: str) -> list[SubnetRequirement]:
    """Read ``name,required_hosts[,prefix]`` lines; ``#`` starts a comment.

    The optional third field pins the mask, written ``/27`` or ``27``.
    """
    reqs: list[SubnetRequirement] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (2, 3) or not parts[0]:
            raise PlanError(f"line {lineno}: expected 'name,required_hosts[,prefix]', got {raw!r}")
        if parts[:2] == ["name", "required_hosts"]:
            continue
        try:
            hosts = int(parts[1])
            prefix = int(parts[2].removeprefix("/")) if len(parts) == 3 else None
        except ValueError:
            raise PlanError(f"line {lineno}: host count and prefix must be integers, got {raw!r}") from None
        try:
            reqs.append(SubnetRequirement(parts[0], hosts, prefix))
        except ValueError as exc:
            raise PlanError(f"line {lineno}: {exc}") from None
    return reqs


def plan_blocks(table: PlanTable) -> Sequence[tuple[int, int]]:
    """Half-open ``(start, end)`` integer ranges of each row's block."""
    return [(r.network_addr.value, r.network_addr.value + (1 << (V4_BITS - r.prefix_len))) for r in table.rows]
