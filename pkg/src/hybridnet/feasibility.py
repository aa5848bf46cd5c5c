"""Feasibility regions of the cellular and hybrid networks.

Every region reduces to a threshold on ``p * lambda_b**(alpha/2)``: the right-hand
side is ``sigma2 / mu`` with noise, or ``1 / mu_tilde`` when the network is
interference limited.  Hybrid regions then ask how many power beacons it takes
to give mobiles that transmit power.  Infeasible points are reported as
``math.inf`` rather than raised, so boundary curves can carry vertical asymptotes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from hybridnet.errors import InvalidParameterError
from hybridnet.montecarlo import (DEFAULT_TRUNCATION, Estimate, PowerField,
                                  estimate_signal_shortfall, outage_indicator, sample_link_gains)
from hybridnet.propagation import DeploymentParams, SystemParams

INFEASIBLE = math.inf
# relative slack when testing membership on the boundary itself
BOUNDARY_RTOL = 1e-12

NETWORKS = ("cellular", "hybrid")
NOISE = ("nonzero", "interference_limited")
MPT = ("none", "isotropic", "directed")
STORAGE = ("large", "small")
MU_SOURCES = ("monte_carlo", "mu_tilde")


@dataclass(frozen=True)
class RegionConfig:
    """Which feasibility region to evaluate.

    ``mu_source="monte_carlo"`` means the threshold passed alongside is the
    simulated ``mu``; ``"mu_tilde"`` means it is the interference-limited
    closed form.  The two go with nonzero noise and zero noise respectively.
    """

    network: str = "cellular"
    noise: str = "nonzero"
    mpt: str = "none"
    storage: Optional[str] = None
    mu_source: str = "monte_carlo"

    def __post_init__(self):
        for name, allowed in (("network", NETWORKS), ("noise", NOISE), ("mpt", MPT),
                              ("mu_source", MU_SOURCES)):
            if getattr(self, name) not in allowed:
                raise InvalidParameterError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.network == "cellular" and (self.mpt != "none" or self.storage is not None):
            raise InvalidParameterError("cellular regions have no power transfer or storage")
        if self.network == "hybrid" and (self.mpt == "none" or self.storage not in STORAGE):
            raise InvalidParameterError("hybrid regions need mpt in (isotropic, directed) and a storage size")
        if (self.noise == "interference_limited") != (self.mu_source == "mu_tilde"):
            raise InvalidParameterError("interference-limited regions use mu_tilde, noisy ones the simulated mu")

    @classmethod
    def cellular(cls, interference_limited: bool = False) -> RegionConfig:
        if interference_limited:
            return cls("cellular", "interference_limited", "none", None, "mu_tilde")
        return cls()

    @classmethod
    def hybrid(cls, mpt: str, storage: str, interference_limited: bool = False) -> RegionConfig:
        if interference_limited:
            return cls("hybrid", "interference_limited", mpt, storage, "mu_tilde")
        return cls("hybrid", "nonzero", mpt, storage, "monte_carlo")

    @property
    def interference_limited(self) -> bool:
        return self.noise == "interference_limited"

    @property
    def label(self) -> str:
        if self.network == "cellular":
            return f"cellular/{self.noise}"
        return f"{self.mpt}/{self.storage}/{self.noise}"


@dataclass(frozen=True)
class BoundaryCurve:
    """Minimal co-parameter along a grid of BS densities.

    The co-parameter is the mobile power ``p`` for cellular regions and the
    beacon density for hybrid regions (at beacon power ``q``).
    """

    config: RegionConfig
    lambda_b_grid: np.ndarray
    min_co_param: np.ndarray
    infeasible_mask: np.ndarray
    q: Optional[float] = None
    mu_threshold: float = float("nan")

    def __post_init__(self):
        if not len(self.lambda_b_grid) == len(self.min_co_param) == len(self.infeasible_mask):
            raise InvalidParameterError("boundary arrays must have equal length")


def power_threshold(system: SystemParams, mu_threshold: float, config: RegionConfig) -> float:
    """Right-hand side ``c`` of ``p * lambda_b**(alpha/2) >= c``."""
    if not mu_threshold > 0:
        raise InvalidParameterError(f"mu threshold must be positive, got {mu_threshold}")
    return 1.0 / mu_threshold if config.interference_limited else system.sigma2 / mu_threshold


def cellular_min_power(lambda_b: float, mu_threshold: float, sigma2: float, alpha: float,
                       interference_limited: bool = False) -> float:
    """Smallest mobile power meeting the cellular constraint at BS density ``lambda_b``.

    With ``interference_limited`` the threshold is ``mu_tilde`` and ``sigma2`` is unused.
    """
    if not mu_threshold > 0:
        raise InvalidParameterError(f"mu threshold must be positive, got {mu_threshold}")
    if lambda_b < 0:
        raise InvalidParameterError("lambda_b must be nonnegative")
    if lambda_b == 0:
        return INFEASIBLE
    rhs = 1.0 / mu_threshold if interference_limited else sigma2 / mu_threshold
    return rhs / lambda_b ** (alpha / 2)


def hybrid_min_pb_density(lambda_b: float, q: float, system: SystemParams, mu_threshold: float,
                          config: RegionConfig) -> float:
    """Smallest beacon density (inner bound where applicable); ``math.inf`` if none exists."""
    if config.network != "hybrid":
        raise InvalidParameterError("hybrid_min_pb_density needs a hybrid region")
    if not (lambda_b > 0 and q > 0):
        raise InvalidParameterError("lambda_b and q must be positive")
    c = power_threshold(system, mu_threshold, config)
    a, b, nu = system.alpha, system.beta, system.nu
    lb = lambda_b ** (a / 2)
    gain = system.z_m if config.mpt == "directed" else 1.0
    if config.storage == "large":
        if config.mpt == "isotropic":
            return (1 - 2 / b) * c * system.omega * nu ** (b - 2) / (math.pi * q * lb)
        x = gain * q * lb
        k = system.omega * c * nu ** b
        if x <= k:
            return INFEASIBLE
        return -math.log1p(-k / x) / (math.pi * nu * nu)
    # small storage: the nearest-beacon bound has to apply at the needed power
    if gain * q * lb < c * nu ** b:
        return INFEASIBLE
    return math.log(1 / system.delta) / math.pi * c ** (2 / b) * (gain * q) ** (-2 / b) \
        * lambda_b ** (-a / b)


def min_co_param(lambda_b: float, system: SystemParams, mu_threshold: float,
                 config: RegionConfig, q: Optional[float] = None) -> float:
    if config.network == "cellular":
        return cellular_min_power(lambda_b, mu_threshold, system.sigma2, system.alpha,
                                  config.interference_limited)
    if q is None:
        raise InvalidParameterError("hybrid regions need the beacon power q")
    return hybrid_min_pb_density(lambda_b, q, system, mu_threshold, config)


def region_contains(point: DeploymentParams, system: SystemParams, mu_threshold: float,
                    config: RegionConfig) -> bool:
    """Membership in the region (its inner bound for the bounded cases).

    Cellular regions test ``point.p``; hybrid regions test ``point.lambda_p``
    at the point's ``q`` and ``lambda_b``.
    """
    if point.lambda_b == 0:
        return False
    if config.network == "cellular":
        need, have = min_co_param(point.lambda_b, system, mu_threshold, config), point.p
    else:
        if point.q == 0:
            return False
        need, have = min_co_param(point.lambda_b, system, mu_threshold, config, point.q), point.lambda_p
    if math.isinf(need):
        return False
    return have >= need * (1 - BOUNDARY_RTOL)


def trace_boundary(config: RegionConfig, system: SystemParams, mu_threshold: float,
                   lambda_b_grid: Sequence[float], q: Optional[float] = None) -> BoundaryCurve:
    """Boundary of the region over an ascending grid of BS densities."""
    grid = np.asarray(lambda_b_grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("lambda_b grid must be positive and strictly ascending")
    vals = np.array([min_co_param(lb, system, mu_threshold, config, q) for lb in grid])
    return BoundaryCurve(config, grid, vals, np.isinf(vals), q, mu_threshold)


# ---------------------------------------------------------------- simulation

def supported_power(power: np.ndarray, system: SystemParams, storage: str) -> float:
    """Mobile transmit power sustained by the sampled raw power.

    Large storage: the average harvest spread over the transmit duty cycle.
    Small storage: the largest ``p`` with ``Pr(raw power < p) <= delta``.
    """
    if storage == "large":
        return float(np.mean(power)) / system.omega
    return float(np.quantile(power, system.delta, method="inverted_cdf"))


def simulate_min_pb_density(config: RegionConfig, system: SystemParams, mu_threshold: float,
                            lambda_b: float, q: float, field: PowerField,
                            lambda_lo: Optional[float] = None, rtol: float = 1e-4) -> float:
    """Smallest beacon density whose simulated power supports the cellular minimum power.

    Uses the common-random-number samples in ``field`` (searching up to its
    ``lambda_max``) so the criterion is monotone and bisection is exact for the
    sample.  Returns ``math.inf`` when ``field.lambda_max`` is not enough.
    """
    if config.network != "hybrid":
        raise InvalidParameterError("simulated boundaries are for hybrid regions")
    p_min = cellular_min_power(lambda_b, mu_threshold, system.sigma2, system.alpha,
                               config.interference_limited)

    def ok(lam):
        return supported_power(field.power_for(system, lam, q, config.mpt), system, config.storage) >= p_min

    hi = field.lambda_max
    if not ok(hi):
        return INFEASIBLE
    lo = lambda_lo if lambda_lo is not None else hi * 1e-9
    if ok(lo):
        return lo
    while hi / lo > 1 + rtol:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class VerificationPoint:
    lambda_b: float
    factor: float
    co_param: float
    p: float
    outcome: Estimate
    target: float
    passed: bool
    criterion: str


@dataclass
class VerificationReport:
    config: RegionConfig
    points: list = field(default_factory=list)

    def by_factor(self, factor: float) -> list:
        return [pt for pt in self.points if pt.factor == factor]

    def all_pass(self, factor: float) -> bool:
        return all(pt.passed for pt in self.by_factor(factor))

    def all_fail(self, factor: float) -> bool:
        return not any(pt.passed for pt in self.by_factor(factor))


def verify_boundary_by_simulation(curve: BoundaryCurve, system: SystemParams, trials: int,
                                  seed: int, factors: Sequence[float] = (2.0, 1.0, 0.1),
                                  indices: Optional[Sequence[int]] = None,
                                  power_trials: Optional[int] = None,
                                  truncation_factor: float = DEFAULT_TRUNCATION,
                                  workers: Optional[int] = None) -> VerificationReport:
    """Run the full pipeline at boundary points scaled by ``factors``.

    Hybrid points: simulate the raw power at ``factor * boundary`` beacon
    density, turn it into a mobile power (mean over the duty cycle for large
    storage, the ``delta`` quantile for small storage), then estimate outage
    at that power.  Cellular points use ``factor * boundary`` power directly.
    With noise the outage must be at most ``epsilon + 3 stderr``; interference
    limited regions check the received-signal shortfall against ``eta`` instead,
    since their outage does not depend on power.
    """
    cfg = curve.config
    if indices is None:
        indices = [i for i in range(len(curve.lambda_b_grid)) if not curve.infeasible_mask[i]]
    report = VerificationReport(cfg)
    for n, i in enumerate(indices):
        lambda_b = float(curve.lambda_b_grid[i])
        bound = float(curve.min_co_param[i])
        if not math.isfinite(bound):
            raise InvalidParameterError(f"boundary is infinite at lambda_b={lambda_b}")
        point_seed = seed + 1000 * n
        # one set of link gains per BS density, shared by every factor
        gains = sample_link_gains(system, lambda_b, trials, point_seed, truncation_factor, workers)
        for factor in factors:
            co = factor * bound
            if cfg.network == "cellular":
                p = co
            else:
                if co == 0:
                    power = np.zeros(1)
                else:
                    pf = PowerField.sample(co, system.beta, system.nu, power_trials or trials,
                                           point_seed + 1, truncation_factor)
                    power = pf.power_for(system, co, curve.q, cfg.mpt)
                p = supported_power(power, system, cfg.storage)
            deployment = DeploymentParams(p=p, q=curve.q or 0.0, lambda_b=lambda_b,
                                          lambda_p=co if cfg.network == "hybrid" else 0.0)
            if cfg.interference_limited:
                est = estimate_signal_shortfall(system, deployment, gains=gains)
                target, crit = system.eta, "signal_shortfall"
            else:
                est = _outage_from_gains(gains, p, system)
                target, crit = system.epsilon, "outage"
            passed = est.value <= target + 3 * est.stderr
            report.points.append(VerificationPoint(lambda_b, factor, co, p, est, target, passed, crit))
    return report


def _outage_from_gains(gains: np.ndarray, p: float, system: SystemParams) -> Estimate:
    hits = int(np.count_nonzero(outage_indicator(gains, p, system.theta, system.sigma2)))
    return Estimate.proportion(hits, len(gains))

