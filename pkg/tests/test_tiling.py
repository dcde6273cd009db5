import pytest
from hypothesis import given, settings, strategies as st

from tilecast.errors import OutOfGridError
from tilecast.tiling import (
    Grid,
    LatticeType,
    Tile,
    canonical_shape,
    classify_tiles,
    coexisting_count,
    decompose_lattices,
    isolated_count,
    load_layout,
    make_viewport,
    predictive_tiles,
    valid_centers,
    viewport_tiles,
)

GRID = Grid.from_size(12, 12)


def rect(x0, y0, w, h):
    return frozenset(Tile(x0 + i, y0 + j) for i in range(w) for j in range(h))


# ---------------------------------------------------------------- viewport_tiles

def test_viewport_rectangle_centered_with_top_left_bias():
    # 5x4 at (5,5) spans x in [3,7], y in [4,7]: 20 tiles
    tiles = viewport_tiles(Tile(5, 5), (5, 4), GRID)
    assert tiles == rect(3, 4, 5, 4)


def test_viewport_single_tile_is_center():
    assert viewport_tiles(Tile(2, 9), (1, 1), GRID) == frozenset({Tile(2, 9)})


def test_viewport_out_of_grid_rejected():
    with pytest.raises(OutOfGridError):
        viewport_tiles(Tile(0, 0), (5, 4), GRID)


def test_viewport_wraparound_mode():
    tiles = viewport_tiles(Tile(0, 5), (5, 4), GRID, wrap=True)
    assert len(tiles) == 20
    assert {t.x for t in tiles} == {10, 11, 0, 1, 2}
    # vertical never wraps
    with pytest.raises(OutOfGridError):
        viewport_tiles(Tile(5, 0), (5, 4), GRID, wrap=True)


def test_viewport_rejects_bad_shape():
    with pytest.raises(ValueError):
        viewport_tiles(Tile(5, 5), (0, 4), GRID)


# -------------------------------------------------------------- predictive_tiles

def test_predictive_equals_fov_at_minimum():
    fov = viewport_tiles(Tile(5, 5), (5, 4), GRID)
    assert predictive_tiles(Tile(5, 5), (5, 4), (6, 5), GRID, 20) == fov


def test_predictive_equals_scope_at_maximum():
    scope = viewport_tiles(Tile(5, 5), (6, 5), GRID)
    assert predictive_tiles(Tile(5, 5), (5, 4), (6, 5), GRID, 30) == scope


def test_predictive_adds_center_adjacent_scope_tiles():
    # enumerated by distance/tie-break: first two extras are (5,3) then (4,3)
    fov = viewport_tiles(Tile(5, 5), (5, 4), GRID)
    got = predictive_tiles(Tile(5, 5), (5, 4), (6, 5), GRID, 22)
    assert got - fov == {Tile(5, 3), Tile(4, 3)}


def test_predictive_matches_independent_enumeration():
    center = Tile(6, 5)
    fov = viewport_tiles(center, (5, 4), GRID)
    scope = viewport_tiles(center, (6, 5), GRID)
    order = sorted(
        scope - fov,
        key=lambda t: ((t.x - center.x) ** 2 + (t.y - center.y) ** 2, t.y, t.x),
    )
    for n_p in range(20, 31):
        got = predictive_tiles(center, (5, 4), (6, 5), GRID, n_p)
        assert got == fov | set(order[: n_p - 20])


def test_predictive_translation_invariance():
    a = predictive_tiles(Tile(4, 4), (5, 4), (6, 5), GRID, 25)
    b = predictive_tiles(Tile(6, 6), (5, 4), (6, 5), GRID, 25)
    assert canonical_shape(a) == canonical_shape(b)


def test_predictive_rejects_out_of_range_np():
    with pytest.raises(ValueError):
        predictive_tiles(Tile(5, 5), (5, 4), (6, 5), GRID, 19)
    with pytest.raises(ValueError):
        predictive_tiles(Tile(5, 5), (5, 4), (6, 5), GRID, 31)


# ---------------------------------------------------------------- classify_tiles

def vp(vid, center, shape, n_p=None):
    area = shape[0] * shape[1]
    return make_viewport(vid, center, shape, shape, GRID, n_p or area)


def test_classify_disjoint_viewports_all_isolated():
    owners = classify_tiles([vp(1, Tile(2, 2), (3, 2)), vp(2, Tile(8, 8), (3, 2))])
    assert all(len(ids) == 1 for ids in owners.values())


def test_classify_identical_viewports_all_coexisting():
    owners = classify_tiles([vp(1, Tile(5, 5), (4, 3)), vp(2, Tile(5, 5), (4, 3))])
    assert all(ids == frozenset({1, 2}) for ids in owners.values())


def test_classify_three_viewport_counting_identity():
    # horizontal MVC of 4x3 viewports with unit shifts:
    # coexisting(l1,l2) = isolated(l3) and coexisting(l2,l3) = isolated(l1)
    vps = [vp(1, Tile(2, 5), (4, 3)), vp(2, Tile(3, 5), (4, 3)), vp(3, Tile(4, 5), (4, 3))]
    owners = classify_tiles(vps)
    assert coexisting_count(owners, {1, 2}) == isolated_count(owners, 3)
    assert coexisting_count(owners, {2, 3}) == isolated_count(owners, 1)


def test_classify_requires_viewports():
    with pytest.raises(ValueError):
        classify_tiles([])


# ------------------------------------------------------------ decompose_lattices

def test_decompose_rectangle_is_single_lattice():
    pieces = decompose_lattices(rect(3, 4, 5, 4))
    assert pieces == [LatticeType(width=5, height=4, offset=Tile(0, 0))]


def test_decompose_fov_plus_buffer_row():
    # 4x3 block, a 2x1 lattice above it, and two stray corner tiles
    shape = (
        rect(0, 1, 4, 3)
        | {Tile(1, 0), Tile(2, 0)}
        | {Tile(-1, 2), Tile(4, 2)}
    )
    sizes = sorted((p.width, p.height) for p in decompose_lattices(shape))
    assert sizes == [(1, 1), (1, 1), (2, 1), (4, 3)]


def test_decompose_plus_pentomino():
    plus = {Tile(1, 0), Tile(0, 1), Tile(1, 1), Tile(2, 1), Tile(1, 2)}
    pieces = decompose_lattices(plus)
    # greedy tie-break prefers the wider 3x1 row over the 1x3 column
    assert (pieces[0].width, pieces[0].height) == (3, 1)
    assert sorted((p.width, p.height) for p in pieces[1:]) == [(1, 1), (1, 1)]


def test_decompose_rejects_empty_shape():
    with pytest.raises(ValueError):
        decompose_lattices([])


@settings(max_examples=60, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=18))
def test_decompose_partition_property(coords):
    shape = {Tile(x, y) for x, y in coords}
    pieces = decompose_lattices(shape)
    covered = []
    for p in pieces:
        covered.extend(p.tiles_at(p.offset))
    assert len(covered) == len(set(covered)) == len(shape)
    assert frozenset(covered) == canonical_shape(shape)
    assert sum(p.area for p in pieces) == len(shape)


def test_decompose_translation_invariance():
    base = {Tile(1, 0), Tile(0, 1), Tile(1, 1), Tile(2, 1)}
    moved = {Tile(t.x + 4, t.y + 6) for t in base}
    assert decompose_lattices(base) == decompose_lattices(moved)


# ------------------------------------------------------------------ misc helpers

def test_make_viewport_fields():
    v = make_viewport(3, Tile(5, 5), (5, 4), (6, 5), GRID, 22)
    assert v.id == 3
    assert len(v.tiles) == 22
    assert len(v.scope_tiles) == 30
    assert v.tiles <= v.scope_tiles
    assert viewport_tiles(Tile(5, 5), (5, 4), GRID) <= v.tiles


def test_valid_centers_all_fit():
    for center in valid_centers((6, 5), GRID):
        viewport_tiles(center, (6, 5), GRID)  # must not raise
    assert len(valid_centers((6, 5), GRID)) == 7 * 8


def test_load_layout(tmp_path):
    path = tmp_path / "layout.txt"
    path.write_text("# centers\n5 5\n6,7\n\n")
    assert load_layout(path) == [Tile(5, 5), Tile(6, 7)]
    bad = tmp_path / "bad.txt"
    bad.write_text("5 5 5\n")
    with pytest.raises(ValueError):
        load_layout(bad)
