"""Value types and pure table rules shared by all channel-access engines.

Everything in this module is an immutable value with pure operations on it:
link-layer addresses, per-vehicle neighbor tables fed by beacons, and the
broadcast tables (IBT/BT) that carry a round's transmission schedule.

Simulation times are integer microseconds throughout the package.
"""

from __future__ import annotations

import functools
from typing import Iterable, NamedTuple, Optional

MAC_OCTETS = 8


class MacParseError(ValueError):
    """Raised when a textual MAC address cannot be parsed."""


@functools.total_ordering
class MacAddress:
    """An 8-octet address, totally ordered by its octet sequence."""

    __slots__ = ("octets", "_hash")

    def __init__(self, octets: Iterable[int] | bytes):
        data = bytes(octets)
        if len(data) != MAC_OCTETS:
            raise MacParseError(f"expected {MAC_OCTETS} octets, got {len(data)}")
        self.octets = data
        self._hash = hash(data)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MacAddress) and self.octets == other.octets

    def __lt__(self, other: "MacAddress") -> bool:
        return self.octets < other.octets

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return format_mac(self)

    def __repr__(self) -> str:
        return f"MacAddress({format_mac(self)!r})"


def parse_mac(text: str) -> MacAddress:
    """Parse "XX-XX-XX-XX-XX-XX-XX-XX" (hex pairs) into a MacAddress.

    Errors identify the offending group so that malformed trace files are
    easy to debug.
    """
    groups = text.strip().split("-")
    if len(groups) != MAC_OCTETS:
        raise MacParseError(
            f"expected {MAC_OCTETS} hyphen-separated groups, got {len(groups)} in {text!r}"
        )
    octets = []
    for i, g in enumerate(groups):
        if len(g) != 2:
            raise MacParseError(f"group {i} ({g!r}) is not two characters in {text!r}")
        try:
            octets.append(int(g, 16))
        except ValueError:
            raise MacParseError(f"group {i} ({g!r}) is not hexadecimal in {text!r}") from None
    return MacAddress(octets)


def format_mac(mac: MacAddress) -> str:
    """Canonical text form: uppercase hex pairs joined by '-'."""
    return "-".join(f"{b:02X}" for b in mac.octets)


class PositionRecord(NamedTuple):
    x: float        # meters along the highway, in [0, L)
    lane: int       # 0 or 1


class NeighborEntry(NamedTuple):
    mac: MacAddress
    position: PositionRecord
    last_heard: int  # microseconds


class NeighborTable:
    """Immutable map from MacAddress to the freshest beacon heard from it."""

    __slots__ = ("entries",)

    def __init__(self, entries: Optional[dict] = None):
        self.entries = dict(entries) if entries else {}

    def __contains__(self, mac: MacAddress) -> bool:
        return mac in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, mac: MacAddress) -> Optional[NeighborEntry]:
        return self.entries.get(mac)

    def macs(self) -> list:
        return list(self.entries.keys())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NeighborTable) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"NeighborTable({len(self.entries)} entries)"


def update_neighbor_table(
    nt: NeighborTable, mac: MacAddress, position: PositionRecord, now: int
) -> NeighborTable:
    """Upsert a beacon into the table; last_heard becomes `now`.

    Callers are responsible for never feeding a vehicle its own beacon.
    """
    entries = dict(nt.entries)
    entries[mac] = NeighborEntry(mac, position, now)
    return NeighborTable(entries)


def expire_neighbors(nt: NeighborTable, now: int, window: int) -> NeighborTable:
    """Drop every entry with now - last_heard > window (microseconds)."""
    if window <= 0:
        raise ValueError("staleness window must be positive")
    kept = {m: e for m, e in nt.entries.items() if now - e.last_heard <= window}
    if len(kept) == len(nt.entries):
        return nt
    return NeighborTable(kept)


class BtRow(NamedTuple):
    mac: MacAddress
    wts: int  # 0 or 1


class BroadcastTable:
    """Ordered reservation schedule: row 0 is the initiator, the rest are the
    initiator's neighbors in strictly ascending MAC order."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[BtRow]):
        self.rows = tuple(rows)
        self._validate()

    def _validate(self) -> None:
        seen = set()
        for r in self.rows:
            if r.wts not in (0, 1):
                raise ValueError(f"wts flag must be 0 or 1, got {r.wts}")
            if r.mac in seen:
                raise ValueError(f"duplicate MAC {r.mac} in broadcast table")
            seen.add(r.mac)
        tail = [r.mac for r in self.rows[1:]]
        if tail != sorted(tail):
            raise ValueError("rows after the initiator must be strictly ascending by MAC")

    @property
    def initiator(self) -> MacAddress:
        return self.rows[0].mac

    def row_index(self, mac: MacAddress) -> int:
        for i, r in enumerate(self.rows):
            if r.mac == mac:
                return i
        raise KeyError(f"{mac} not in broadcast table")

    def wts_of(self, mac: MacAddress) -> int:
        return self.rows[self.row_index(mac)].wts

    def __contains__(self, mac: MacAddress) -> bool:
        return any(r.mac == mac for r in self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BroadcastTable) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        body = ", ".join(f"{r.mac}:{r.wts}" for r in self.rows)
        return f"BroadcastTable[{body}]"


def build_ibt(initiator: MacAddress, nt: NeighborTable) -> BroadcastTable:
    """Build the initial broadcast table: initiator first (highest priority),
    then the neighbor MACs in ascending order, all flags cleared."""
    if initiator in nt:
        raise ValueError(f"initiator {initiator} present in its own neighbor table")
    rows = [BtRow(initiator, 0)]
    rows.extend(BtRow(m, 0) for m in sorted(nt.entries.keys()))
    return BroadcastTable(rows)


def mark_wts(bt: BroadcastTable, responder: MacAddress) -> BroadcastTable:
    """Return a table with the responder's flag set to 1. Idempotent."""
    idx = bt.row_index(responder)  # KeyError for unknown responders
    if bt.rows[idx].wts == 1:
        return bt
    rows = list(bt.rows)
    rows[idx] = BtRow(responder, 1)
    return BroadcastTable(rows)


def transmission_order(bt: BroadcastTable) -> list:
    """MACs with wts = 1, in table order: the round's sending sequence."""
    return [r.mac for r in bt.rows if r.wts == 1]


def next_initiator(bt: BroadcastTable) -> Optional[MacAddress]:
    """The first row with wts = 0 inherits the next round; None if all rows
    transmitted this round (contention follows)."""
    for r in bt.rows:
        if r.wts == 0:
            return r.mac
    return None
