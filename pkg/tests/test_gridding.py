import math

import numpy as np
import pytest

from rapidkrig.errors import DomainError, InternalError
from rapidkrig.gridding import (build_padded_grid, fill_distance,
                                fill_distance_empirical, neighborhood)

UNIT = (0.0, 1.0, 0.0, 1.0)


def enumerate_required_pads(domain, dims, L, obs):
    """Brute-force oracle: smallest per-side pads keeping every block in-grid."""
    x0, x1, y0, y1 = domain
    m1, m2 = dims
    hx, hy = (x1 - x0) / (m1 - 1), (y1 - y0) / (m2 - 1)
    left = right = bottom = top = 0
    for (x, y) in obs:
        tx, ty = (x - x0) / hx, (y - y0) / hy
        cx = round(tx) if abs(tx - round(tx)) < 1e-9 else math.floor(tx)
        cy = round(ty) if abs(ty - round(ty)) < 1e-9 else math.floor(ty)
        left = max(left, (L - 1) - cx)
        right = max(right, cx + L - (m1 - 1))
        bottom = max(bottom, (L - 1) - cy)
        top = max(top, cy + L - (m2 - 1))
    return left, right, bottom, top


def test_interior_grid_covers_domain_inclusively():
    grid = build_padded_grid((0, 2, 1, 4), (5, 7), 1, [])
    assert grid.spacing == (0.5, 0.5)
    assert grid.interior_xs()[0] == 0.0 and grid.interior_xs()[-1] == 2.0
    assert grid.interior_ys()[0] == 1.0 and grid.interior_ys()[-1] == 4.0


def test_zero_padding_when_L1_and_interior_observations():
    rng = np.random.default_rng(0)
    obs = rng.uniform(0.15, 0.85, size=(30, 2))
    grid = build_padded_grid(UNIT, (10, 10), 1, obs)
    assert grid.pad == (0, 0, 0, 0)
    assert grid.total_dims == (10, 10)


def test_single_center_observation_odd_grid_symmetric_pads():
    grid = build_padded_grid(UNIT, (9, 9), 4, [(0.5, 0.5)])
    oracle = enumerate_required_pads(UNIT, (9, 9), 4, [(0.5, 0.5)])
    assert grid.pad == oracle
    left, right, bottom, top = grid.pad
    assert left == right and bottom == top


@pytest.mark.parametrize("seed", [1, 2, 3])
@pytest.mark.parametrize("L", [1, 2, 4])
def test_padding_matches_enumeration_oracle(seed, L):
    rng = np.random.default_rng(seed)
    obs = rng.uniform(0, 1, size=(30, 2))
    # force edge pressure: pin a few observations onto the boundary
    obs[0] = (0.0, 0.5)
    obs[1] = (1.0, 0.5)
    obs[2] = (0.5, 0.0)
    obs[3] = (0.5, 1.0)
    grid = build_padded_grid(UNIT, (20, 20), L, obs)
    assert grid.pad == enumerate_required_pads(UNIT, (20, 20), L, obs)


def test_padding_minimality_every_side():
    # one observation in each extreme cell so every side needs padding
    obs = [(0.01, 0.5), (0.99, 0.5), (0.5, 0.01), (0.5, 0.99)]
    L = 4
    grid = build_padded_grid(UNIT, (20, 20), L, obs)
    left, right, bottom, top = grid.pad
    assert all(p > 0 for p in grid.pad)
    # every block stays in range, and some block touches each extreme row and
    # column, so removing one pad row/column from any side would break it
    m1_tot, m2_tot = grid.total_dims
    blocks = [neighborhood(grid, loc, L).indices for loc in obs]
    for idx in blocks:
        assert idx.min() >= 0 and idx.max() < m1_tot * m2_tot
    assert any((idx % m1_tot == 0).any() for idx in blocks)
    assert any((idx % m1_tot == m1_tot - 1).any() for idx in blocks)
    assert any((idx // m1_tot == 0).any() for idx in blocks)
    assert any((idx // m1_tot == m2_tot - 1).any() for idx in blocks)


def test_observation_outside_domain_rejected():
    with pytest.raises(DomainError):
        build_padded_grid(UNIT, (10, 10), 2, [(1.2, 0.5)])


def test_dims_smaller_than_2L_rejected():
    with pytest.raises(DomainError):
        build_padded_grid(UNIT, (7, 10), 4, [(0.5, 0.5)])


def test_index_roundtrip():
    grid = build_padded_grid(UNIT, (8, 6), 2, [(0.02, 0.02), (0.98, 0.98)])
    m1_tot, m2_tot = grid.total_dims
    idx = np.arange(m1_tot * m2_tot)
    x, y = grid.to_coords(idx)
    px0, py0 = grid.padded_origin
    ix = np.rint((x - px0) / grid.spacing[0]).astype(int)
    iy = np.rint((y - py0) / grid.spacing[1]).astype(int)
    assert np.array_equal(grid.to_index(ix, iy), idx)


def test_neighborhood_block_size_and_uniqueness():
    rng = np.random.default_rng(7)
    obs = rng.uniform(0, 1, size=(20, 2))
    for L in (1, 2, 4):
        grid = build_padded_grid(UNIT, (12, 12), L, obs)
        for i, loc in enumerate(obs):
            nb = neighborhood(grid, loc, L, center_obs=i)
            assert nb.center_obs == i
            assert len(nb.indices) == (2 * L) ** 2
            assert len(np.unique(nb.indices)) == (2 * L) ** 2
            assert nb.indices.max() < grid.n_total


def test_neighborhood_L4_has_64_points():
    grid = build_padded_grid(UNIT, (20, 20), 4, [(0.51, 0.47)])
    nb = neighborhood(grid, (0.51, 0.47), 4)
    assert len(nb.indices) == 64


def test_neighborhood_on_node_tie_rule():
    # observation exactly on a grid node: floor convention puts the node at
    # block position (L-1, L-1), i.e. the lower-left corner of the central box
    grid = build_padded_grid(UNIT, (9, 9), 2, [(0.5, 0.5)])
    nb = neighborhood(grid, (0.5, 0.5), 2)
    assert len(nb.indices) == 16
    assert nb.local_offset == (0.0, 0.0)
    node_x, node_y = grid.to_coords(nb.indices[(2 - 1) * 4 + (2 - 1)])
    assert (node_x, node_y) == (0.5, 0.5)


def test_neighborhood_centered_matches_nearest_block_oracle():
    # observation at a cell center: the block is symmetric about the cell and
    # equals the (2L)^2 nearest grid points found by brute force
    grid = build_padded_grid(UNIT, (11, 11), 2, [(0.45, 0.45)])
    loc = (0.45, 0.45)
    nb = neighborhood(grid, loc, 2)
    all_nodes = np.column_stack(grid.to_coords(np.arange(grid.n_total)))
    d = np.hypot(all_nodes[:, 0] - loc[0], all_nodes[:, 1] - loc[1])
    nearest16 = set(np.argsort(d, kind="stable")[:16].tolist())
    assert set(nb.indices.tolist()) == nearest16


def test_neighborhood_outside_coverage():
    grid = build_padded_grid(UNIT, (10, 10), 2, [(0.5, 0.5)])
    with pytest.raises(DomainError):
        neighborhood(grid, (5.0, 5.0), 2)
    # inside the padded coverage but too close to the padded edge for a block
    with pytest.raises(InternalError):
        neighborhood(grid, (0.01, 0.01), 2)


def test_fill_distance_closed_form_and_scaling():
    assert fill_distance(0.1) == pytest.approx(0.1 * math.sqrt(2) / 2, abs=1e-15)
    assert fill_distance(0.05) == pytest.approx(fill_distance(0.1) / 2, rel=1e-12)
    with pytest.raises(DomainError):
        fill_distance(0.0)


def test_fill_distance_empirical_matches_half_diagonal():
    # nodes of a square grid: the farthest interior point is a cell center
    h = 0.1
    xs = np.arange(0.0, 1.0 + 1e-12, h)
    gx, gy = np.meshgrid(xs, xs)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    delta = fill_distance_empirical(nodes, (0, 1, 0, 1), n_sweep=201)
    assert delta == pytest.approx(fill_distance(h), rel=1e-2)
