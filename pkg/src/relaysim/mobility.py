"""Disk geometry with M equal-area vertical strips and the reflecting random walk.

The source sits at (-R, 0) and the destination at (R, 0), the two ends of the
horizontal diameter. Relays hop between adjacent strips with probability q per
frame (reflecting at the ends) and their exact coordinates are redrawn uniformly
within the current strip on every transition, self-transitions included, so
position is memoryless given the region index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiskGeometry:
    radius: float
    n_regions: int
    boundaries: tuple  # x_0 = -R < x_1 < ... < x_M = R

    @property
    def source(self):
        return (-self.radius, 0.0)

    @property
    def destination(self):
        return (self.radius, 0.0)


@dataclass(frozen=True)
class RelayPosition:
    region: int
    coords: tuple  # (x, y) inside the disk and inside the region's strip


def _area_left_of(x: float, radius: float) -> float:
    """Area of the disk slice left of the vertical line at abscissa x."""
    return x * math.sqrt(radius * radius - x * x) + radius * radius * (
        math.asin(x / radius) + math.pi / 2.0)


def build_geometry(radius: float, n_regions: int, tol: float = 1e-12) -> DiskGeometry:
    """Solve the equal-area strip boundaries by bisection on the segment area.

    tol is the area tolerance relative to the disk area; bisection that fails to
    reach it within 200 iterations raises (degenerate tol).
    """
    if radius <= 0.0 or n_regions < 2:
        raise ValueError(f"need radius > 0 and n_regions >= 2, got {(radius, n_regions)}")
    total = math.pi * radius * radius
    abs_tol = tol * total
    bounds = [-radius]
    for i in range(1, n_regions):
        target = total * i / n_regions
        lo, hi = -radius, radius
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            err = _area_left_of(mid, radius) - target
            if abs(err) <= abs_tol:
                break
            if err < 0.0:
                lo = mid
            else:
                hi = mid
        else:
            raise RuntimeError(
                f"equal-area bisection did not reach tol {tol} in 200 iterations")
        bounds.append(mid)
    bounds.append(radius)
    return DiskGeometry(radius=float(radius), n_regions=n_regions,
                        boundaries=tuple(bounds))


def region_of(geom: DiskGeometry, x: float) -> int:
    """Region index 1..M of the strip containing abscissa x."""
    # interior boundaries only; right-closed strips except the last
    idx = int(np.searchsorted(np.asarray(geom.boundaries[1:-1]), x, side="right"))
    return idx + 1


def strip_area(geom: DiskGeometry, region: int) -> float:
    x0, x1 = geom.boundaries[region - 1], geom.boundaries[region]
    return _area_left_of(x1, geom.radius) - _area_left_of(x0, geom.radius)


def step_region(current: int, n_regions: int, q: float, rng: np.random.Generator) -> int:
    """One reflecting-walk transition: to i +/- 1 with probability q each.

    At regions 1 and M the blocked move reflects into a stay, so the boundary
    stay probability is 1 - q, matching the transition matrix rows.
    """
    u = rng.random()
    proposal = current + (1 if u < q else (-1 if u < 2.0 * q else 0))
    return min(max(proposal, 1), n_regions)


def step_regions(regions: np.ndarray, n_regions: int, q: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Vectorized step_region over a whole relay population."""
    u = rng.random(regions.size)
    delta = (u < q).astype(np.int64) - ((u >= q) & (u < 2.0 * q))
    return np.clip(regions + delta, 1, n_regions)


def transition_matrix(n_regions: int, q: float) -> np.ndarray:
    """The M x M region-transition matrix Q; symmetric, hence doubly stochastic."""
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"need 0 <= q <= 1/2, got {q}")
    Q = np.zeros((n_regions, n_regions))
    for i in range(n_regions):
        if i > 0:
            Q[i, i - 1] = q
        if i < n_regions - 1:
            Q[i, i + 1] = q
        Q[i, i] = 1.0 - Q[i].sum()
    return Q


def sample_positions_in_region(geom: DiskGeometry, region: int, count: int,
                               rng: np.random.Generator):
    """`count` uniform points over strip-and-disk, by bounding-box rejection."""
    x0, x1 = geom.boundaries[region - 1], geom.boundaries[region]
    R = geom.radius
    if x0 < 0.0 < x1:
        ymax = R
    else:
        ymax = math.sqrt(R * R - min(x0 * x0, x1 * x1))
    xs = np.empty(count)
    ys = np.empty(count)
    filled = 0
    while filled < count:
        m = count - filled
        batch = m + (m >> 1) + 8
        cx = rng.uniform(x0, x1, batch)
        cy = rng.uniform(-ymax, ymax, batch)
        ok = np.flatnonzero(cx * cx + cy * cy <= R * R)[:m]
        xs[filled:filled + ok.size] = cx[ok]
        ys[filled:filled + ok.size] = cy[ok]
        filled += ok.size
    return xs, ys


def sample_position_in_region(geom: DiskGeometry, region: int,
                              rng: np.random.Generator) -> RelayPosition:
    """One uniform position within the region's strip."""
    if not 1 <= region <= geom.n_regions:
        raise ValueError(f"region must be in 1..{geom.n_regions}, got {region}")
    xs, ys = sample_positions_in_region(geom, region, 1, rng)
    return RelayPosition(region=region, coords=(float(xs[0]), float(ys[0])))


def _uniform_disk(radius: float, count: int, rng: np.random.Generator):
    xs = np.empty(count)
    ys = np.empty(count)
    filled = 0
    while filled < count:
        m = count - filled
        batch = m + (m >> 1) + 8
        cx = rng.uniform(-radius, radius, batch)
        cy = rng.uniform(-radius, radius, batch)
        ok = np.flatnonzero(cx * cx + cy * cy <= radius * radius)[:m]
        xs[filled:filled + ok.size] = cx[ok]
        ys[filled:filled + ok.size] = cy[ok]
        filled += ok.size
    return xs, ys


def init_relays(geom: DiskGeometry, n_relays: int, rng: np.random.Generator):
    """K i.i.d. uniform positions on the disk, region derived from x."""
    if n_relays < 1:
        raise ValueError(f"need at least one relay, got {n_relays}")
    xs, ys = _uniform_disk(geom.radius, n_relays, rng)
    interior = np.asarray(geom.boundaries[1:-1])
    regions = np.searchsorted(interior, xs, side="right") + 1
    return [RelayPosition(region=int(r), coords=(float(x), float(y)))
            for r, x, y in zip(regions, xs, ys)]


def init_regions(geom: DiskGeometry, n_relays: int, rng: np.random.Generator) -> np.ndarray:
    """Region indices of a fresh uniform-on-disk population (coords discarded)."""
    xs, _ = _uniform_disk(geom.radius, n_relays, rng)
    interior = np.asarray(geom.boundaries[1:-1])
    return (np.searchsorted(interior, xs, side="right") + 1).astype(np.int64)


def distance_to_source(geom: DiskGeometry, pos: RelayPosition) -> float:
    x, y = pos.coords
    return math.hypot(x + geom.radius, y)


def distance_to_destination(geom: DiskGeometry, pos: RelayPosition) -> float:
    x, y = pos.coords
    return math.hypot(x - geom.radius, y)


def coverage_window(geom: DiskGeometry, radius_cov: float):
    """Static strip windows that a coverage disk can reach.

    Returns (src_max_region, dest_min_region): strips 1..src_max_region are the
    only ones that can intersect the source disk, strips dest_min_region..M the
    only ones that can intersect the destination disk.
    """
    b = geom.boundaries
    M = geom.n_regions
    src_max = 1
    for i in range(2, M + 1):
        if b[i - 1] <= -geom.radius + radius_cov:
            src_max = i
        else:
            break
    dest_min = M
    for i in range(M - 1, 0, -1):
        if b[i] >= geom.radius - radius_cov:
            dest_min = i
        else:
            break
    return src_max, dest_min
