"""Multicast transmission groups: MLMSG combination and the uni-stream baseline.

MLMSG runs the lattice combination independently per rectangular lattice type:
inside one h x v lattice type every tile joins the group of its (x mod h,
y mod v) residue class, which is exactly the combination
zeta(x, y) U zeta(x + i*h, y + j*v) over all in-range i, j. Each viewport's
lattice instance covers every residue class once, so each of the h*v groups
contains one tile stream per viewport and the per-group/per-user constraints
hold by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .tiling import Grid, LatticeType, Tile, ViewportSpec, canonical_shape


@dataclass(frozen=True)
class Stream:
    tile: Tile
    viewports: tuple[int, ...]  # owning viewport ids, sorted
    users: tuple[int, ...]      # receiving user ids, sorted


@dataclass(frozen=True)
class Group:
    id: int
    streams: tuple[Stream, ...]

    @property
    def sigma(self) -> int:
        """Pilot length: one orthogonal pilot per stream."""
        return len(self.streams)


@dataclass(frozen=True)
class LatticeSpan:
    """Bookkeeping: which group ids one lattice type produced."""

    lattice: LatticeType
    first_group: int
    count: int


@dataclass(frozen=True)
class GroupingResult:
    groups: tuple[Group, ...]
    mode: str  # "mlmsg" or "bg"
    spans: tuple[LatticeSpan, ...] = ()


@dataclass
class GroupingDiagnostics:
    """Violation report from validate_grouping; empty lists mean clean."""

    user_conflicts: list[tuple[int, int]] = field(default_factory=list)      # (group, user)
    viewport_conflicts: list[tuple[int, int]] = field(default_factory=list)  # (group, viewport)
    missing_pairs: list[tuple[Tile, int]] = field(default_factory=list)
    duplicate_pairs: list[tuple[Tile, int]] = field(default_factory=list)
    incomplete_groups: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.user_conflicts
            or self.viewport_conflicts
            or self.missing_pairs
            or self.duplicate_pairs
        )

    @property
    def all_complete(self) -> bool:
        return not self.incomplete_groups


def _check_common_shape(viewports: Sequence[ViewportSpec]) -> frozenset[Tile]:
    shapes = {canonical_shape(vp.tiles) for vp in viewports}
    if len(shapes) != 1:
        raise ValueError(
            "MLMSG needs all viewports to share one canonical shape; "
            f"got {len(shapes)} distinct shapes"
        )
    return next(iter(shapes))


def _origin(vp: ViewportSpec) -> Tile:
    return Tile(min(t.x for t in vp.tiles), min(t.y for t in vp.tiles))


def mlmsg_group(
    lattices: Sequence[LatticeType],
    viewports: Sequence[ViewportSpec],
    users: Mapping[int, Sequence[int]],
    grid: Grid | None = None,
) -> GroupingResult:
    """Combine lattice instances into h*v complete groups per lattice type.

    `lattices` is the decomposition of the common viewport shape; every
    viewport contributes one instance of each lattice anchored at its origin
    plus the lattice offset. Total group count equals N_p.
    """
    if not viewports:
        raise ValueError("need at least one viewport")
    _check_common_shape(viewports)
    groups: list[Group] = []
    spans: list[LatticeSpan] = []
    for lattice in lattices:
        # tile -> owning viewports within this lattice type
        owners: dict[Tile, list[int]] = {}
        for vp in viewports:
            origin = _origin(vp)
            anchor = Tile(origin.x + lattice.offset.x, origin.y + lattice.offset.y)
            for tile in lattice.tiles_at(anchor):
                if grid is not None and not grid.contains(tile):
                    raise ValueError(f"lattice tile {tile} of viewport {vp.id} off grid")
                owners.setdefault(tile, []).append(vp.id)
        # residue classes of the combination rule, row-major over (y, x)
        classes: dict[tuple[int, int], list[Tile]] = {}
        for tile in owners:
            classes.setdefault((tile.y % lattice.height, tile.x % lattice.width), []).append(tile)
        first = len(groups)
        for key in sorted(classes):
            streams = tuple(
                Stream(
                    tile=tile,
                    viewports=tuple(sorted(owners[tile])),
                    users=tuple(sorted(u for v in owners[tile] for u in users[v])),
                )
                for tile in sorted(classes[key])
            )
            groups.append(Group(id=len(groups), streams=streams))
        spans.append(LatticeSpan(lattice=lattice, first_group=first, count=len(groups) - first))
    return GroupingResult(groups=tuple(groups), mode="mlmsg", spans=tuple(spans))


def bg_group(
    viewports: Sequence[ViewportSpec],
    users: Mapping[int, Sequence[int]],
) -> GroupingResult:
    """Basic grouping: one uni-stream multicast group per distinct tile."""
    owners: dict[Tile, list[int]] = {}
    for vp in viewports:
        for tile in vp.tiles:
            owners.setdefault(tile, []).append(vp.id)
    groups = []
    for gid, tile in enumerate(sorted(owners, key=lambda t: (t.y, t.x))):
        stream = Stream(
            tile=tile,
            viewports=tuple(sorted(owners[tile])),
            users=tuple(sorted(u for v in owners[tile] for u in users[v])),
        )
        groups.append(Group(id=gid, streams=(stream,)))
    return GroupingResult(groups=tuple(groups), mode="bg")


def validate_grouping(
    result: GroupingResult, viewports: Sequence[ViewportSpec]
) -> GroupingDiagnostics:
    """Diagnose a grouping: per-user and per-viewport conflicts inside groups,
    exact cover of all requested (tile, viewport) pairs, and completeness."""
    diag = GroupingDiagnostics()
    all_ids = {vp.id for vp in viewports}
    for group in result.groups:
        seen_users: set[int] = set()
        seen_viewports: set[int] = set()
        for stream in group.streams:
            for u in stream.users:
                if u in seen_users:
                    diag.user_conflicts.append((group.id, u))
                seen_users.add(u)
            for v in stream.viewports:
                if v in seen_viewports:
                    diag.viewport_conflicts.append((group.id, v))
                seen_viewports.add(v)
        if seen_viewports != all_ids:
            diag.incomplete_groups.append(group.id)
    covered: dict[tuple[Tile, int], int] = {}
    for group in result.groups:
        for stream in group.streams:
            for v in stream.viewports:
                covered[(stream.tile, v)] = covered.get((stream.tile, v), 0) + 1
    requested = {(tile, vp.id) for vp in viewports for tile in vp.tiles}
    for pair in sorted(requested - set(covered), key=lambda p: (p[0].y, p[0].x, p[1])):
        diag.missing_pairs.append(pair)
    for pair, count in sorted(covered.items(), key=lambda kv: (kv[0][0].y, kv[0][0].x, kv[0][1])):
        if pair not in requested or count > 1:
            diag.duplicate_pairs.append(pair)
    return diag


def min_groups_search(viewports: Sequence[ViewportSpec], limit: int) -> bool:
    """Exhaustively test whether all (tile, viewport) pairs fit in <= `limit`
    groups under the one-tile-per-viewport-per-group constraint.

    Backtracking over pairs in viewport-major order with symmetry breaking
    (a pair may only open the next unused group index). Intended for tiny
    instances; used to certify the h*v lower bound.
    """
    pairs: list[tuple[int, Tile]] = []
    for vp in sorted(viewports, key=lambda v: v.id):
        for tile in sorted(vp.tiles):
            pairs.append((vp.id, tile))

    group_viewports: list[set[int]] = [set() for _ in range(limit)]
    group_tiles: list[dict[Tile, set[int]]] = [dict() for _ in range(limit)]

    def place(i: int, used: int) -> bool:
        if i == len(pairs):
            return True
        vid, tile = pairs[i]
        for g in range(min(used + 1, limit)):
            if vid in group_viewports[g]:
                continue
            group_viewports[g].add(vid)
            group_tiles[g].setdefault(tile, set()).add(vid)
            if place(i + 1, max(used, g + 1)):
                return True
            group_viewports[g].remove(vid)
            group_tiles[g][tile].discard(vid)
            if not group_tiles[g][tile]:
                del group_tiles[g][tile]
        return False

    return place(0, 0)


def write_grouping_csv(result: GroupingResult, path) -> None:
    """One row per (group, stream, owning viewport) for inspection fixtures."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_id", "stream_index", "tile_x", "tile_y", "viewport_id", "user_count"])
        for group in result.groups:
            for idx, stream in enumerate(group.streams):
                for vid in stream.viewports:
                    writer.writerow([group.id, idx, stream.tile.x, stream.tile.y, vid, len(stream.users)])
