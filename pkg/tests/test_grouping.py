import pytest

from tilecast.grouping import (
    Group,
    GroupingResult,
    Stream,
    bg_group,
    min_groups_search,
    mlmsg_group,
    validate_grouping,
    write_grouping_csv,
)
from tilecast.tiling import Grid, Tile, decompose_lattices, make_viewport

GRID = Grid.from_size(12, 12)


def rect_viewport(vid, anchor, w, h):
    """Viewport whose predictive set is exactly the w x h rectangle at anchor."""
    center = Tile(anchor[0] + (w - 1) // 2, anchor[1] + (h - 1) // 2)
    return make_viewport(vid, center, (w, h), (w, h), GRID, w * h)


def fmvc_layout(w, h, region_w, region_h):
    """All viewport anchors of the full-MVC rectangle layout."""
    vps = []
    vid = 1
    for b in range(region_h - h + 1):
        for a in range(region_w - w + 1):
            vps.append(rect_viewport(vid, (a, b), w, h))
            vid += 1
    return vps


def one_user_each(vps):
    return {v.id: (v.id,) for v in vps}


def run_mlmsg(vps, users=None):
    users = users or one_user_each(vps)
    pieces = decompose_lattices(vps[0].tiles)
    return mlmsg_group(pieces, vps, users, GRID)


# ------------------------------------------------------------------- MLMSG

def test_mlmsg_fmvc_group_of_origin_tile():
    # 6x5 full-MVC layout of 4x3 viewports: the combination of tile (0,0)
    # is {(0,0),(4,0),(0,3),(4,3)} and there are exactly h*v = 12 groups
    vps = fmvc_layout(4, 3, 6, 5)
    result = run_mlmsg(vps)
    assert len(result.groups) == 12
    origin = next(g for g in result.groups if any(s.tile == Tile(0, 0) for s in g.streams))
    assert {(s.tile.x, s.tile.y) for s in origin.streams} == {(0, 0), (4, 0), (0, 3), (4, 3)}


def test_mlmsg_rectangular_viewports_group_count():
    vps = [rect_viewport(1, (0, 0), 4, 3), rect_viewport(2, (3, 2), 4, 3)]
    result = run_mlmsg(vps)
    assert len(result.groups) == 12  # Proposition-1 count h*v


def test_mlmsg_single_viewport_gives_singleton_streams():
    vps = [rect_viewport(1, (2, 2), 5, 4)]
    result = run_mlmsg(vps)
    assert len(result.groups) == 20
    assert all(len(g.streams) == 1 for g in result.groups)


def test_mlmsg_sigma_equals_stream_count():
    vps = fmvc_layout(3, 2, 5, 4)
    result = run_mlmsg(vps)
    for g in result.groups:
        assert g.sigma == len(g.streams)


def test_mlmsg_total_groups_equals_np_for_ragged_shape():
    vps = [
        make_viewport(1, Tile(4, 4), (5, 4), (6, 5), GRID, 23),
        make_viewport(2, Tile(6, 5), (5, 4), (6, 5), GRID, 23),
        make_viewport(3, Tile(5, 6), (5, 4), (6, 5), GRID, 23),
    ]
    result = run_mlmsg(vps)
    assert len(result.groups) == 23
    assert sum(span.count for span in result.spans) == 23
    diag = validate_grouping(result, vps)
    assert diag.ok


def test_mlmsg_stream_users_union_of_owners():
    vps = [rect_viewport(1, (2, 2), 3, 2), rect_viewport(2, (2, 2), 3, 2)]
    users = {1: (10, 11), 2: (20,)}
    result = run_mlmsg(vps, users)
    assert len(result.groups) == 6
    for g in result.groups:
        (stream,) = g.streams  # identical viewports merge into one stream
        assert stream.viewports == (1, 2)
        assert stream.users == (10, 11, 20)


def test_mlmsg_rejects_heterogeneous_shapes():
    vps = [rect_viewport(1, (0, 0), 4, 3), rect_viewport(2, (5, 5), 3, 4)]
    pieces = decompose_lattices(vps[0].tiles)
    with pytest.raises(ValueError):
        mlmsg_group(pieces, vps, one_user_each(vps), GRID)


def test_mlmsg_disjoint_cover_per_viewport():
    vps = [
        make_viewport(i + 1, c, (5, 4), (6, 5), GRID, 26)
        for i, c in enumerate([Tile(3, 3), Tile(6, 4), Tile(5, 7)])
    ]
    result = run_mlmsg(vps)
    per_viewport = {v.id: 0 for v in vps}
    for g in result.groups:
        for s in g.streams:
            for vid in s.viewports:
                per_viewport[vid] += 1
    assert all(count == 26 for count in per_viewport.values())


# ---------------------------------------------------------------------- BG

def test_bg_disjoint_viewports():
    vps = [rect_viewport(1, (0, 0), 5, 4), rect_viewport(2, (6, 6), 5, 4)]
    result = bg_group(vps, one_user_each(vps))
    assert len(result.groups) == 40
    assert all(g.sigma == 1 for g in result.groups)


def test_bg_identical_viewports_share_groups():
    vps = [rect_viewport(1, (2, 2), 5, 4), rect_viewport(2, (2, 2), 5, 4)]
    result = bg_group(vps, {1: (1, 2), 2: (3,)})
    assert len(result.groups) == 20
    for g in result.groups:
        assert g.streams[0].users == (1, 2, 3)


def test_bg_fmvc_layout_counts_union():
    vps = fmvc_layout(4, 3, 6, 5)
    result = bg_group(vps, one_user_each(vps))
    assert len(result.groups) == 30  # |union of viewport tiles| on the 6x5 region


# ------------------------------------------------------------------ validate

def test_validate_clean_mlmsg():
    vps = fmvc_layout(4, 3, 6, 5)
    diag = validate_grouping(run_mlmsg(vps), vps)
    assert diag.ok
    assert diag.all_complete  # every FMVC group is complete


def test_validate_flags_viewport_conflict():
    vps = [rect_viewport(1, (0, 0), 2, 1)]
    bad = GroupingResult(
        groups=(
            Group(
                id=0,
                streams=(
                    Stream(Tile(0, 0), (1,), (1,)),
                    Stream(Tile(1, 0), (1,), (1,)),
                ),
            ),
        ),
        mode="mlmsg",
    )
    diag = validate_grouping(bad, vps)
    assert diag.viewport_conflicts == [(0, 1)]
    assert diag.user_conflicts == [(0, 1)]
    assert not diag.ok


def test_validate_flags_missing_and_duplicate_pairs():
    vps = [rect_viewport(1, (0, 0), 2, 1)]
    partial = GroupingResult(
        groups=(
            Group(id=0, streams=(Stream(Tile(0, 0), (1,), (1,)),)),
            Group(id=1, streams=(Stream(Tile(0, 0), (1,), (1,)),)),
        ),
        mode="bg",
    )
    diag = validate_grouping(partial, vps)
    assert (Tile(1, 0), 1) in diag.missing_pairs
    assert (Tile(0, 0), 1) in diag.duplicate_pairs


# ------------------------------------------------------------------ minimality

def test_min_groups_search_certifies_lower_bound():
    vps = [rect_viewport(1, (0, 0), 3, 2), rect_viewport(2, (2, 1), 3, 2)]
    assert not min_groups_search(vps, 5)
    assert min_groups_search(vps, 6)


def test_min_groups_search_three_viewports():
    vps = [
        rect_viewport(1, (0, 0), 2, 2),
        rect_viewport(2, (1, 1), 2, 2),
        rect_viewport(3, (2, 2), 2, 2),
    ]
    assert not min_groups_search(vps, 3)
    assert min_groups_search(vps, 4)


# ------------------------------------------------------------------------ csv

def test_grouping_csv(tmp_path):
    vps = [rect_viewport(1, (2, 2), 3, 2), rect_viewport(2, (3, 2), 3, 2)]
    result = run_mlmsg(vps, {1: (0, 1), 2: (2,)})
    path = tmp_path / "groups.csv"
    write_grouping_csv(result, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "group_id,stream_index,tile_x,tile_y,viewport_id,user_count"
    pairs = {(line.split(",")[2], line.split(",")[3], line.split(",")[4]) for line in lines[1:]}
    assert len(pairs) == 12  # 6 tiles per viewport, one row per (tile, owner)
