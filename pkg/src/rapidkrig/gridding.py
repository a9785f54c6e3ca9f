"""Regular prediction grids with padding and neighborhood lookup.

The interior grid covers the requested rectangle inclusively on both ends,
so the spacing along x is ``width / (m1 - 1)``.  The grid is then padded
outward just enough that every observation owns a full ``2L x 2L`` block of
grid points whose central box contains it.  Grid points are indexed row
major with x varying fastest: ``index = iy * M1 + ix`` over the padded
dimensions ``(M1, M2)``.

An observation lying exactly on a grid line belongs to the cell for which
it is the lower/left boundary (floor convention); on-node detection uses a
relative tolerance of 1e-9 of the spacing so constructed coordinates land
deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalError

__all__ = [
    "PaddedGrid",
    "Neighborhood",
    "build_padded_grid",
    "neighborhood",
    "fill_distance",
    "fill_distance_empirical",
]

# relative tolerance (in spacing units) for treating a coordinate as on-node
NODE_SNAP_TOL = 1.0e-9


@dataclass(frozen=True)
class PaddedGrid:
    """A regular grid plus the padding bookkeeping.

    ``origin`` and ``interior_dims`` describe the requested (interior) grid;
    ``pad`` holds the (left, right, bottom, top) pad counts.
    """

    origin: tuple[float, float]
    spacing: tuple[float, float]
    interior_dims: tuple[int, int]
    pad: tuple[int, int, int, int]

    @property
    def total_dims(self) -> tuple[int, int]:
        m1, m2 = self.interior_dims
        left, right, bottom, top = self.pad
        return m1 + left + right, m2 + bottom + top

    @property
    def padded_origin(self) -> tuple[float, float]:
        left, _, bottom, _ = self.pad
        return (self.origin[0] - left * self.spacing[0],
                self.origin[1] - bottom * self.spacing[1])

    @property
    def n_total(self) -> int:
        a, b = self.total_dims
        return a * b

    @property
    def n_interior(self) -> int:
        return self.interior_dims[0] * self.interior_dims[1]

    def to_index(self, ix, iy):
        """Flat padded index from padded column/row indices."""
        return np.asarray(iy) * self.total_dims[0] + np.asarray(ix)

    def to_coords(self, index):
        """(x, y) coordinates of a flat padded index."""
        m1_tot = self.total_dims[0]
        index = np.asarray(index)
        ix = index % m1_tot
        iy = index // m1_tot
        px0, py0 = self.padded_origin
        return px0 + ix * self.spacing[0], py0 + iy * self.spacing[1]

    def node_xs(self) -> np.ndarray:
        """Padded x coordinates, length M1."""
        px0, _ = self.padded_origin
        return px0 + self.spacing[0] * np.arange(self.total_dims[0])

    def node_ys(self) -> np.ndarray:
        px0, py0 = self.padded_origin
        return py0 + self.spacing[1] * np.arange(self.total_dims[1])

    def interior_view(self, field: np.ndarray) -> np.ndarray:
        """Slice an (M2, M1) padded field down to the (m2, m1) interior."""
        left, _, bottom, _ = self.pad
        m1, m2 = self.interior_dims
        return field[bottom:bottom + m2, left:left + m1]

    def interior_xs(self) -> np.ndarray:
        return self.origin[0] + self.spacing[0] * np.arange(self.interior_dims[0])

    def interior_ys(self) -> np.ndarray:
        return self.origin[1] + self.spacing[1] * np.arange(self.interior_dims[1])

    def interior_nodes(self) -> np.ndarray:
        """(n_interior, 2) coordinates of interior nodes, x fastest."""
        xs = self.interior_xs()
        ys = self.interior_ys()
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class Neighborhood:
    """The 2L x 2L block of padded-grid indices owning one observation."""

    center_obs: int
    indices: np.ndarray  # (2L)^2 flat padded indices, row major over the block
    local_offset: tuple[float, float]  # position in the central box, units of spacing


def _cells(t: np.ndarray) -> np.ndarray:
    """Cell index from a grid-relative coordinate with the floor tie rule."""
    nearest = np.rint(t)
    on_node = np.abs(t - nearest) <= NODE_SNAP_TOL
    return np.where(on_node, nearest, np.floor(t)).astype(int)


def build_padded_grid(domain, dims, L: int, obs_locs) -> PaddedGrid:
    """Build the interior grid over ``domain`` and pad it for ``obs_locs``.

    Parameters
    ----------
    domain : (x0, x1, y0, y1)
        Rectangle covered inclusively by the interior grid.
    dims : (m1, m2)
        Interior grid point counts along x and y; each must be >= max(2, 2L).
    L : int
        Neighbor order; every observation gets a full (2L)^2 block.
    obs_locs : (n, 2) array or empty
        Observation locations, all inside the domain rectangle.

    The padding is minimal: each side is extended exactly far enough for the
    most demanding observation.
    """
    x0, x1, y0, y1 = map(float, domain)
    m1, m2 = int(dims[0]), int(dims[1])
    if L < 1:
        raise DomainError(f"neighbor order L must be >= 1, got {L}")
    if m1 < max(2, 2 * L) or m2 < max(2, 2 * L):
        raise DomainError(
            f"grid dims {dims} too small for neighbor order L={L}; need >= {2 * L}")
    if not (x1 > x0 and y1 > y0):
        raise DomainError(f"degenerate domain rectangle {domain}")
    hx = (x1 - x0) / (m1 - 1)
    hy = (y1 - y0) / (m2 - 1)

    obs = np.asarray(obs_locs, dtype=float).reshape(-1, 2)
    if obs.shape[0] == 0:
        return PaddedGrid((x0, y0), (hx, hy), (m1, m2), (0, 0, 0, 0))

    eps_x, eps_y = NODE_SNAP_TOL * hx, NODE_SNAP_TOL * hy
    inside = ((obs[:, 0] >= x0 - eps_x) & (obs[:, 0] <= x1 + eps_x)
              & (obs[:, 1] >= y0 - eps_y) & (obs[:, 1] <= y1 + eps_y))
    if not np.all(inside):
        bad = int(np.argmin(inside))
        raise DomainError(
            f"observation {bad} at {tuple(obs[bad])} lies outside the domain {domain}")

    cx = _cells((obs[:, 0] - x0) / hx)
    cy = _cells((obs[:, 1] - y0) / hy)
    # block columns run cx-(L-1) .. cx+L; same for rows
    left = max(0, int(np.max((L - 1) - cx)))
    right = max(0, int(np.max(cx + L - (m1 - 1))))
    bottom = max(0, int(np.max((L - 1) - cy)))
    top = max(0, int(np.max(cy + L - (m2 - 1))))
    return PaddedGrid((x0, y0), (hx, hy), (m1, m2), (left, right, bottom, top))


def neighborhood(grid: PaddedGrid, obs_loc, L: int, center_obs: int = -1) -> Neighborhood:
    """The (2L)^2 block whose central box contains ``obs_loc``.

    Indices are row major over the block (y outer, x inner), the same
    canonical ordering for every observation.
    """
    x, y = float(obs_loc[0]), float(obs_loc[1])
    px0, py0 = grid.padded_origin
    hx, hy = grid.spacing
    m1_tot, m2_tot = grid.total_dims
    tx = (x - px0) / hx
    ty = (y - py0) / hy
    if not (-NODE_SNAP_TOL <= tx <= m1_tot - 1 + NODE_SNAP_TOL
            and -NODE_SNAP_TOL <= ty <= m2_tot - 1 + NODE_SNAP_TOL):
        raise DomainError(f"location ({x}, {y}) outside padded grid coverage")
    cx = int(_cells(np.asarray(tx)))
    cy = int(_cells(np.asarray(ty)))
    x_lo, y_lo = cx - (L - 1), cy - (L - 1)
    if x_lo < 0 or y_lo < 0 or cx + L > m1_tot - 1 or cy + L > m2_tot - 1:
        raise InternalError(
            f"neighborhood of ({x}, {y}) exits the padded grid; padding contract violated")
    cols = np.arange(x_lo, x_lo + 2 * L)
    rows = np.arange(y_lo, y_lo + 2 * L)
    indices = (rows[:, None] * m1_tot + cols[None, :]).ravel()
    return Neighborhood(center_obs, indices, (tx - cx, ty - cy))


def fill_distance(h: float) -> float:
    """Fill distance of a square grid with spacing h: the half cell diagonal."""
    if not h > 0:
        raise DomainError(f"spacing must be positive, got {h}")
    return h * math.sqrt(2.0) / 2.0


def fill_distance_empirical(nodes, region, n_sweep: int = 200) -> float:
    """Sup-min distance from a dense candidate sweep of ``region`` to ``nodes``.

    ``region`` is (x0, x1, y0, y1); the candidate set is an
    ``n_sweep x n_sweep`` lattice.  Complexity O(n_sweep^2 * len(nodes)).
    """
    nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
    x0, x1, y0, y1 = map(float, region)
    xs = np.linspace(x0, x1, n_sweep)
    ys = np.linspace(y0, y1, n_sweep)
    gx, gy = np.meshgrid(xs, ys)
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    best = np.full(cand.shape[0], np.inf)
    for chunk in np.array_split(nodes, max(1, len(nodes) // 512)):
        d2 = ((cand[:, None, :] - chunk[None, :, :]) ** 2).sum(axis=2)
        best = np.minimum(best, d2.min(axis=1))
    return float(np.sqrt(best.max()))
