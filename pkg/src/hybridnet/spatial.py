"""Poisson point processes, nearest-BS association and mobile placement.

All sampling is driven by an explicit ``numpy.random.Generator``; nothing here
touches global random state.  The typical base station sits at the origin
(index 0) and every cell, including the typical one, holds exactly one mobile
drawn uniformly from the part of the cell inside the simulation window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.spatial import cKDTree

from hybridnet import _cells
from hybridnet.errors import InvalidParameterError, SamplingError

if TYPE_CHECKING:
    from hybridnet.propagation import DeploymentParams, SystemParams

DEFAULT_TRUNCATION = 20.0
MIN_TRUNCATION = 10.0
# candidates per cell before placement is declared failed
PLACEMENT_BUDGET = 200


@dataclass(frozen=True)
class SimWindow:
    """Disk of radius ``radius`` centred at the origin.

    ``truncation_factor`` expresses window radii in units of the mean
    inter-point spacing, ``density**-0.5``; it also sizes the beacon disk.
    """

    radius: float
    truncation_factor: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidParameterError(f"window radius must be positive, got {self.radius}")
        if not self.truncation_factor >= MIN_TRUNCATION:
            raise InvalidParameterError(
                f"truncation_factor must be >= {MIN_TRUNCATION}, got {self.truncation_factor}")

    @classmethod
    def for_density(cls, density: float, truncation_factor: float = DEFAULT_TRUNCATION) -> SimWindow:
        if not density > 0:
            raise InvalidParameterError(f"density must be positive, got {density}")
        return cls(truncation_factor / math.sqrt(density), truncation_factor)

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class NetworkRealization:
    """One snapshot of the hybrid network.

    Attributes:
        bs_points: (n, 2) base stations; row 0 is the typical BS at the origin.
        mobiles: (n, 2) active mobiles; ``mobiles[i]`` is served by ``bs_points[i]``.
        pb_points: (m, 2) power beacons.
        nearest_pb_of_typical: index of the beacon closest to ``mobiles[0]``,
            or ``None`` when there are no beacons.
        window: window the BS process was sampled in.
        pb_radius: radius of the origin-centred disk holding the beacons.
    """

    bs_points: np.ndarray
    mobiles: np.ndarray
    pb_points: np.ndarray
    nearest_pb_of_typical: Optional[int]
    window: SimWindow
    pb_radius: float

    @property
    def typical_mobile(self) -> np.ndarray:
        return self.mobiles[0]


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``, e.g. one per trial index."""
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


def _uniform_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    # compiled so that Python-side and kernel-side sampling consume the stream alike
    return _cells.uniform_disk(rng, int(n), float(radius))


def sample_ppp(density: float, window: SimWindow, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the window disk, as an (n, 2) array."""
    if density < 0 or not math.isfinite(density):
        raise InvalidParameterError(f"density must be finite and >= 0, got {density}")
    if density == 0:
        return np.empty((0, 2))
    n = rng.poisson(density * window.area)
    return _uniform_disk(n, window.radius, rng)


def nearest_index(points, x) -> tuple[int, float]:
    """Index of the point closest to ``x`` and its distance; ties go to the lowest index."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise InvalidParameterError("nearest_index needs at least one point")
    d = np.hypot(pts[:, 0] - x[0], pts[:, 1] - x[1])
    i = int(np.argmin(d))  # argmin returns the first minimum
    return i, float(d[i])


def placement_error(failed_cell: int, n_cells: int) -> SamplingError:
    return SamplingError(
        f"cell {failed_cell} of {n_cells} not filled within {PLACEMENT_BUDGET} candidates",
        n_cells=n_cells, failed_cell=failed_cell, budget=PLACEMENT_BUDGET)


def place_mobiles(bs_points: np.ndarray, window: SimWindow, rng: np.random.Generator) -> np.ndarray:
    """One uniform mobile per Voronoi cell (restricted to the window).

    Each cell is built exactly by half-plane clipping and sampled directly,
    which gives the same law as feeding window-uniform candidates and keeping
    the first one landing in each cell.
    """
    bs = np.ascontiguousarray(bs_points, dtype=float)
    mobiles, failed = _cells.place_mobiles(bs, float(window.radius), rng, PLACEMENT_BUDGET)
    if failed >= 0:
        raise placement_error(int(failed), len(bs))
    return mobiles


def place_mobiles_sequential(bs_points: np.ndarray, window: SimWindow,
                             rng: np.random.Generator, batch: int = 4096) -> np.ndarray:
    """Reference placement: uniform candidates over the window, first hit per cell wins.

    Much slower than :func:`place_mobiles`; kept as an independent check of it.
    """
    bs = np.asarray(bs_points, dtype=float)
    n = len(bs)
    tree = cKDTree(bs)
    mobiles = np.empty((n, 2))
    filled = np.zeros(n, dtype=bool)
    remaining = n
    budget = PLACEMENT_BUDGET * n
    used = 0
    while remaining:
        if used >= budget:
            failed = int(np.flatnonzero(~filled)[0])
            raise SamplingError(
                f"{remaining} of {n} cells empty after {used} candidates",
                n_cells=n, failed_cell=failed, budget=PLACEMENT_BUDGET)
        cand = _uniform_disk(batch, window.radius, rng)
        used += batch
        _, owner = tree.query(cand)
        cells, first = np.unique(owner, return_index=True)
        fresh = ~filled[cells]
        mobiles[cells[fresh]] = cand[first[fresh]]
        filled[cells[fresh]] = True
        remaining -= int(fresh.sum())
    return mobiles


def pb_disk_radius(window: SimWindow, lambda_p: float) -> float:
    # at least the BS window, and at least truncation_factor beacon spacings
    if lambda_p <= 0:
        return window.radius
    return max(window.radius, window.truncation_factor / math.sqrt(lambda_p))


def sample_cells(lambda_b: float, window: SimWindow, rng: np.random.Generator,
                 placement: str = "cellwise") -> tuple[np.ndarray, np.ndarray]:
    """BS process with the typical BS prepended at the origin, and one mobile per cell.

    ``placement="sequential"`` uses the slow reference placement.
    """
    if not (lambda_b > 0 and math.isfinite(lambda_b)):
        raise InvalidParameterError(f"lambda_b must be positive, got {lambda_b}")
    if placement == "cellwise":
        bs, mobiles, failed = _cells.sample_cells(rng, float(lambda_b), float(window.radius),
                                                  PLACEMENT_BUDGET)
        if failed >= 0:
            raise placement_error(int(failed), len(bs))
        return bs, mobiles
    bs = np.vstack((np.zeros((1, 2)), sample_ppp(lambda_b, window, rng)))
    if placement == "sequential":
        mobiles = place_mobiles_sequential(bs, window, rng)
    else:
        raise InvalidParameterError(f"unknown placement {placement!r}")
    return bs, mobiles


def sample_realization(deployment: DeploymentParams, system: SystemParams,
                       window: SimWindow, rng: np.random.Generator,
                       placement: str = "cellwise") -> NetworkRealization:
    """Sample BSs (typical one at the origin), one mobile per cell, and beacons."""
    bs, mobiles = sample_cells(deployment.lambda_b, window, rng, placement)
    pb_radius = pb_disk_radius(window, deployment.lambda_p)
    pbs = sample_ppp(deployment.lambda_p, SimWindow(pb_radius, window.truncation_factor), rng)
    nearest = nearest_index(pbs, mobiles[0])[0] if len(pbs) else None
    return NetworkRealization(bs, mobiles, pbs, nearest, window, pb_radius)
