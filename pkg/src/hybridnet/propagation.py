"""Path gains, uplink interference and received microwave power."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hybridnet import _cells
from hybridnet.errors import InvalidParameterError, NoBeaconError, SingularityError
from hybridnet.spatial import NetworkRealization


@dataclass(frozen=True)
class SystemParams:
    """Physical and model constants.

    ``p_t`` is the raw-power threshold of a mobile; ``None`` means "use the
    mobile transmit power" which is how the small-storage regions are built.
    """

    alpha: float = 4.0
    beta: float = 3.0
    nu: float = 1.5
    theta: float = 2.0
    sigma2: float = 1.0
    omega: float = 0.5
    z_m: float = 100.0
    z_s: float = 0.01
    K: int = 8
    epsilon: float = 0.3
    eta: float = 0.2
    delta: float = 0.2
    p_b: float = 10.0
    p_t: Optional[float] = None

    def __post_init__(self):
        checks = [
            (self.alpha > 2, "alpha must exceed 2"),
            (self.beta > 2, "beta must exceed 2"),
            (self.nu > 1, "nu must exceed 1"),
            (self.theta > 0, "theta must be positive"),
            (self.sigma2 >= 0, "sigma2 must be nonnegative"),
            (0 < self.omega <= 1, "omega must lie in (0, 1]"),
            (self.z_m >= self.z_s > 0, "need z_m >= z_s > 0"),
            (isinstance(self.K, (int, np.integer)) and self.K >= 0, "K must be a nonnegative integer"),
            (0 < self.epsilon < 1, "epsilon must lie in (0, 1)"),
            (0 < self.eta < 1, "eta must lie in (0, 1)"),
            (0 < self.delta < 1, "delta must lie in (0, 1)"),
            (self.p_b > 0, "p_b must be positive"),
            (self.p_t is None or self.p_t >= 0, "p_t must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidParameterError(msg)
        for name in ("alpha", "beta", "nu", "theta", "sigma2", "z_m", "z_s", "p_b"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")


@dataclass(frozen=True)
class DeploymentParams:
    """Mobile power ``p``, beacon power ``q`` and the BS / beacon densities."""

    p: float = 1.0
    q: float = 1.0
    lambda_b: float = 1.0
    lambda_p: float = 0.0

    def __post_init__(self):
        for name in ("p", "q", "lambda_b", "lambda_p"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")


def data_path_gain(d, alpha: float):
    """Path gain ``d**-alpha`` of a data link."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise SingularityError("data link of zero length")
    out = d ** -alpha
    return float(out) if out.ndim == 0 else out


def mpt_path_gain(d, beta: float, nu: float):
    """Microwave path gain ``max(d, nu)**-beta``; never exceeds ``nu**-beta``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise InvalidParameterError("distance must be nonnegative")
    out = np.maximum(d, nu) ** -beta
    return float(out) if out.ndim == 0 else out


def unit_interference(mobiles: np.ndarray, K: int, alpha: float) -> float:
    """Interference at the origin from ``mobiles[1:]`` at unit power with the K nearest removed.

    Mobiles are ranked by distance to the origin; equal distances keep index order.
    """
    mob = np.ascontiguousarray(mobiles, dtype=float).reshape(-1, 2)
    total = float(_cells.unit_interference(mob, int(K), float(alpha)))
    if math.isinf(total):
        raise SingularityError("uncancelled interfering mobile at the origin")
    return total


def interference_at_typical(r: NetworkRealization, p: float, K: int, alpha: float) -> float:
    """Uplink interference at the typical BS after cancelling the K nearest interferers."""
    return p * unit_interference(r.mobiles, K, alpha)


def _pb_distances(r: NetworkRealization) -> np.ndarray:
    u0 = r.mobiles[0]
    pts = np.asarray(r.pb_points, dtype=float).reshape(-1, 2)
    return np.hypot(pts[:, 0] - u0[0], pts[:, 1] - u0[1])


def raw_power_isotropic(r: NetworkRealization, q: float, beta: float, nu: float) -> float:
    """Raw power at the typical mobile when every beacon radiates isotropically."""
    d = _pb_distances(r)
    if len(d) == 0:
        return 0.0
    return float(q * np.sum(np.maximum(d, nu) ** -beta))


def raw_power_directed(r: NetworkRealization, q: float, z_m: float, z_s: float,
                       beta: float, nu: float) -> float:
    """Raw power at the typical mobile when its nearest beacon points the main lobe at it."""
    d = _pb_distances(r)
    if len(d) == 0:
        raise NoBeaconError("directed power transfer needs at least one beacon")
    g = np.maximum(d, nu) ** -beta
    t0 = r.nearest_pb_of_typical
    if t0 is None:
        t0 = int(np.argmin(d))
    # z_s on every beacon plus the main-lobe excess on the nearest one
    return float(q * (z_s * np.sum(g) + (z_m - z_s) * g[t0]))
