"""Equirectangular tile grid, viewport tile sets, and lattice decomposition.

A viewport is the rectangular field of view (FoV, M tiles) plus extra
exact-scope tiles buffered in advance; the predictive set holds N_p tiles with
the extras picked closest to the viewport center. Non-rectangular predictive
shapes are decomposed into rectangular tile lattices for grouping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import OutOfGridError


@dataclass(frozen=True, order=True)
class Tile:
    x: int  # horizontal coordinate
    y: int  # vertical coordinate


@dataclass(frozen=True)
class Grid:
    H: int  # max horizontal coordinate (12x12 grid -> H = 11)
    V: int  # max vertical coordinate

    def __post_init__(self):
        if self.H < 0 or self.V < 0:
            raise ValueError(f"grid extents must be non-negative, got {self}")

    @classmethod
    def from_size(cls, width: int, height: int) -> "Grid":
        return cls(H=width - 1, V=height - 1)

    def contains(self, tile: Tile) -> bool:
        return 0 <= tile.x <= self.H and 0 <= tile.y <= self.V


@dataclass(frozen=True)
class ViewportSpec:
    id: int
    center: Tile
    tiles: frozenset[Tile]        # predictive set, |tiles| = N_p
    scope_tiles: frozenset[Tile]  # exact scope, |scope_tiles| = S


@dataclass(frozen=True)
class LatticeType:
    """One rectangular piece of the canonical viewport shape.

    `offset` anchors the piece relative to the canonical shape's top-left
    corner; a viewport's instance sits at its own origin plus this offset.
    """

    width: int   # horizontal extent (the paper's h)
    height: int  # vertical extent (the paper's v)
    offset: Tile

    @property
    def area(self) -> int:
        return self.width * self.height

    def tiles_at(self, anchor: Tile) -> frozenset[Tile]:
        return frozenset(
            Tile(anchor.x + i, anchor.y + j)
            for i in range(self.width)
            for j in range(self.height)
        )


def viewport_tiles(
    center: Tile, shape: tuple[int, int], grid: Grid, wrap: bool = False
) -> frozenset[Tile]:
    """Axis-aligned w x h rectangle centered on `center` with top-left bias.

    For even extents the center tile sits (w-1)//2 from the left edge and
    (h-1)//2 from the top. With wrap=True the x coordinate is taken modulo the
    grid width (vertical wrapping never occurs); wrap is off by default and no
    rectangle may leave the grid.
    """
    w, h = shape
    if w < 1 or h < 1:
        raise ValueError(f"shape extents must be positive, got {shape}")
    x0 = center.x - (w - 1) // 2
    y0 = center.y - (h - 1) // 2
    if y0 < 0 or y0 + h - 1 > grid.V:
        raise OutOfGridError(
            f"{w}x{h} rectangle at {center} spans rows {y0}..{y0 + h - 1} "
            f"outside 0..{grid.V}"
        )
    if wrap:
        width = grid.H + 1
        return frozenset(
            Tile((x0 + i) % width, y0 + j) for i in range(w) for j in range(h)
        )
    if x0 < 0 or x0 + w - 1 > grid.H:
        raise OutOfGridError(
            f"{w}x{h} rectangle at {center} spans columns {x0}..{x0 + w - 1} "
            f"outside 0..{grid.H}"
        )
    return frozenset(Tile(x0 + i, y0 + j) for i in range(w) for j in range(h))


def predictive_tiles(
    center: Tile,
    fov_shape: tuple[int, int],
    scope_shape: tuple[int, int],
    grid: Grid,
    n_p: int,
) -> frozenset[Tile]:
    """FoV rectangle plus the (N_p - M) exact-scope tiles nearest the center.

    Extra tiles are ranked by squared Euclidean distance between tile centers,
    ties broken by smaller y then smaller x, so the result is identical across
    viewports up to translation.
    """
    fov = viewport_tiles(center, fov_shape, grid)
    scope = viewport_tiles(center, scope_shape, grid)
    if not fov <= scope:
        raise ValueError(f"FoV {fov_shape} does not fit inside scope {scope_shape}")
    m, s = len(fov), len(scope)
    if not m <= n_p <= s:
        raise ValueError(f"need M={m} <= N_p <= S={s}, got N_p={n_p}")
    extras = sorted(
        scope - fov,
        key=lambda t: ((t.x - center.x) ** 2 + (t.y - center.y) ** 2, t.y, t.x),
    )
    return frozenset(fov | set(extras[: n_p - m]))


def make_viewport(
    vid: int,
    center: Tile,
    fov_shape: tuple[int, int],
    scope_shape: tuple[int, int],
    grid: Grid,
    n_p: int,
) -> ViewportSpec:
    return ViewportSpec(
        id=vid,
        center=center,
        tiles=predictive_tiles(center, fov_shape, scope_shape, grid, n_p),
        scope_tiles=viewport_tiles(center, scope_shape, grid),
    )


def classify_tiles(viewports: Iterable[ViewportSpec]) -> dict[Tile, frozenset[int]]:
    """Map each requested tile to the ids of all viewports containing it.

    A tile is isolated (IT) iff its owner set has size 1, coexisting (CT)
    otherwise.
    """
    viewports = list(viewports)
    if not viewports:
        raise ValueError("need at least one viewport")
    owners: dict[Tile, set[int]] = {}
    for vp in viewports:
        for tile in vp.tiles:
            owners.setdefault(tile, set()).add(vp.id)
    return {tile: frozenset(ids) for tile, ids in owners.items()}


def isolated_count(owners: Mapping[Tile, frozenset[int]], vid: int) -> int:
    """Number of ITs of one viewport (the appendix's A(l))."""
    return sum(1 for ids in owners.values() if ids == frozenset({vid}))


def coexisting_count(owners: Mapping[Tile, frozenset[int]], vids: set[int]) -> int:
    """Number of CTs belonging to exactly this viewport set (Pi(...))."""
    target = frozenset(vids)
    return sum(1 for ids in owners.values() if ids == target)


def canonical_shape(tiles: Iterable[Tile]) -> frozenset[Tile]:
    """Translate a tile set so its bounding-box corner sits at (0, 0)."""
    tiles = list(tiles)
    if not tiles:
        raise ValueError("empty tile set")
    x0 = min(t.x for t in tiles)
    y0 = min(t.y for t in tiles)
    return frozenset(Tile(t.x - x0, t.y - y0) for t in tiles)


def _largest_rectangle(cells: set[Tile]) -> tuple[Tile, int, int]:
    """Largest axis-aligned rectangle fully inside `cells`.

    Ties go to the wider rectangle, then the topmost-leftmost anchor.
    Brute-force over bounding-box corner pairs; shapes here are tiny.
    """
    xs = sorted({t.x for t in cells})
    ys = sorted({t.y for t in cells})
    best = None  # (area, width, -y, -x) maximized lexicographically
    best_rect = None
    for y0 in ys:
        for y1 in ys:
            if y1 < y0:
                continue
            for x0 in xs:
                for x1 in xs:
                    if x1 < x0:
                        continue
                    w, h = x1 - x0 + 1, y1 - y0 + 1
                    if best is not None and w * h < best[0]:
                        continue
                    if all(
                        Tile(x, y) in cells
                        for x in range(x0, x1 + 1)
                        for y in range(y0, y1 + 1)
                    ):
                        key = (w * h, w, -y0, -x0)
                        if best is None or key > best:
                            best = key
                            best_rect = (Tile(x0, y0), w, h)
    assert best_rect is not None  # cells is non-empty, so 1x1 always fits
    return best_rect


def decompose_lattices(shape: Iterable[Tile]) -> list[LatticeType]:
    """Partition a viewport shape into rectangular tile lattices.

    Repeatedly extracts the largest-area axis-aligned rectangle (ties: wider,
    then topmost-leftmost) until no tiles remain; the lattice areas sum to the
    shape size. Input is normalized to its bounding-box corner first.
    """
    remaining = set(canonical_shape(shape))
    pieces: list[LatticeType] = []
    while remaining:
        anchor, w, h = _largest_rectangle(remaining)
        pieces.append(LatticeType(width=w, height=h, offset=anchor))
        remaining -= {
            Tile(anchor.x + i, anchor.y + j) for i in range(w) for j in range(h)
        }
    return pieces


def load_layout(path) -> list[Tile]:
    """Read viewport centers from a text file, one `x y` (or `x,y`) per line."""
    centers = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected two coordinates, got {raw!r}")
            centers.append(Tile(int(parts[0]), int(parts[1])))
    return centers


def valid_centers(shape: tuple[int, int], grid: Grid) -> list[Tile]:
    """All centers at which a w x h rectangle fits the grid (no wrap)."""
    w, h = shape
    out = []
    for y in range((h - 1) // 2, grid.V - (h - 1 - (h - 1) // 2) + 1):
        for x in range((w - 1) // 2, grid.H - (w - 1 - (w - 1) // 2) + 1):
            out.append(Tile(x, y))
    return out
