"""Seeded Monte Carlo estimators for outage, the scale-free threshold, and raw power.

Every trial draws from its own generator derived from ``(seed, tag, trial)``,
so results do not depend on how trials are spread over worker threads.  The
compiled kernels release the GIL, which lets a thread pool run them in parallel.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from hybridnet import _cells
from hybridnet.analytic import MODES
from hybridnet.errors import InfeasibleEpsilonError, InvalidParameterError
from hybridnet.propagation import DeploymentParams, SystemParams
from hybridnet.spatial import (DEFAULT_TRUNCATION, PLACEMENT_BUDGET, SimWindow,
                               placement_error, stream)

THREADS_ENV = "HYBRIDNET_THREADS"
DEFAULT_TRIALS = 100_000
DEFAULT_MU_TRIALS = 200_000
BOOTSTRAP_RESAMPLES = 500
Z95 = 1.959963984540054

# stream tags keep the estimators' random numbers apart for a shared seed
TAG_OUTAGE = 1
TAG_POWER = 2
TAG_BOOTSTRAP = 3

_CHUNK = 256


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its standard error and a normal 95% interval."""

    value: float
    stderr: float
    trials: int
    ci95: tuple[float, float]

    @classmethod
    def from_samples(cls, x: np.ndarray) -> Estimate:
        x = np.asarray(x, dtype=float)
        n = len(x)
        if n == 0:
            raise InvalidParameterError("no samples")
        value = float(np.mean(x))
        se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(value, se, n, (value - Z95 * se, value + Z95 * se))

    @classmethod
    def proportion(cls, hits: int, n: int) -> Estimate:
        if n < 1:
            raise InvalidParameterError("no samples")
        value = hits / n
        se = math.sqrt(value * (1 - value) / n)
        return cls(value, se, n, (max(0.0, value - Z95 * se), min(1.0, value + Z95 * se)))

    def within(self, other: Estimate) -> bool:
        """True when the two values differ by at most the sum of the CI half-widths."""
        half = Z95 * (self.stderr + other.stderr)
        return abs(self.value - other.value) <= half


@dataclass(frozen=True)
class MuEstimate:
    """Scale-free threshold with a bootstrap percentile interval."""

    mu: float
    epsilon: float
    ci: tuple[float, float]
    trials: int


def worker_count(workers: Optional[int] = None) -> int:
    """Threads to use: explicit argument, else ``HYBRIDNET_THREADS``, else the CPU count."""
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise InvalidParameterError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise InvalidParameterError(f"worker count must be >= 1, got {workers}")
    return workers


def run_trials(trial: Callable[[np.random.Generator], Sequence[float]], trials: int, seed: int,
               tag: int, width: int, workers: Optional[int] = None) -> np.ndarray:
    """Run ``trial`` once per index and return a (trials, width) array in index order."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    out = np.empty((trials, width))

    def chunk(lo: int):
        for t in range(lo, min(lo + _CHUNK, trials)):
            out[t] = trial(stream(seed, tag, t))

    starts = range(0, trials, _CHUNK)
    n = worker_count(workers)
    if n == 1 or trials <= _CHUNK:
        for lo in starts:
            chunk(lo)
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            for f in [pool.submit(chunk, lo) for lo in starts]:
                f.result()
    return out


# ---------------------------------------------------------------- outage

def sample_link_gains(system: SystemParams, lambda_b: float, trials: int, seed: int,
                      truncation_factor: float = DEFAULT_TRUNCATION,
                      workers: Optional[int] = None) -> np.ndarray:
    """Per-trial ``|U_0|**-alpha`` and unit-power residual interference, shape (trials, 2)."""
    window = SimWindow.for_density(lambda_b, truncation_factor)
    radius = float(window.radius)
    K = int(system.K)
    alpha = float(system.alpha)

    def trial(rng):
        signal, interference, failed, n = _cells.outage_trial(
            rng, float(lambda_b), radius, PLACEMENT_BUDGET, K, alpha)
        if failed >= 0:
            raise placement_error(int(failed), int(n))
        return signal, interference

    return run_trials(trial, trials, seed, TAG_OUTAGE, 2, workers)


def outage_indicator(gains: np.ndarray, p: float, theta: float, sigma2: float) -> np.ndarray:
    """Boolean outage per trial: ``p*signal / (p*interference + sigma2) < theta``."""
    if p == 0:
        return np.ones(len(gains), dtype=bool)
    return p * gains[:, 0] < theta * (p * gains[:, 1] + sigma2)


def estimate_outage(system: SystemParams, deployment: DeploymentParams,
                    trials: int = DEFAULT_TRIALS, seed: int = 0,
                    truncation_factor: float = DEFAULT_TRUNCATION,
                    workers: Optional[int] = None) -> Estimate:
    """Probability that the typical uplink SINR falls below ``theta``."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if not deployment.lambda_b > 0:
        raise InvalidParameterError("lambda_b must be positive")
    if deployment.p == 0:
        # no signal at all: every trial is in outage
        return Estimate.proportion(trials, trials)
    gains = sample_link_gains(system, deployment.lambda_b, trials, seed, truncation_factor, workers)
    hits = int(np.count_nonzero(outage_indicator(gains, deployment.p, system.theta, system.sigma2)))
    return Estimate.proportion(hits, trials)


def estimate_signal_shortfall(system: SystemParams, deployment: DeploymentParams,
                              trials: int = DEFAULT_TRIALS, seed: int = 0,
                              truncation_factor: float = DEFAULT_TRUNCATION,
                              workers: Optional[int] = None,
                              gains: Optional[np.ndarray] = None) -> Estimate:
    """Probability that the typical BS receives less than ``p_b`` from its own mobile."""
    if gains is None:
        gains = sample_link_gains(system, deployment.lambda_b, trials, seed, truncation_factor, workers)
    hits = int(np.count_nonzero(deployment.p * gains[:, 0] < system.p_b))
    return Estimate.proportion(hits, len(gains))


def sample_outage_statistic(system: SystemParams, trials: int = DEFAULT_MU_TRIALS, seed: int = 0,
                            truncation_factor: float = DEFAULT_TRUNCATION,
                            workers: Optional[int] = None) -> np.ndarray:
    """Samples of ``I - |U_0|**-alpha / theta`` on the unit-density network.

    The typical link is in outage at power ``p`` exactly when this plus
    ``sigma2 / p`` is positive (for unit BS density).
    """
    gains = sample_link_gains(system, 1.0, trials, seed, truncation_factor, workers)
    return gains[:, 1] - gains[:, 0] / system.theta


def outage_curve(samples: np.ndarray, mu_grid: Sequence[float]) -> list[Estimate]:
    """Outage probability ``Pr(S + mu > 0)`` for every ``mu`` from one sample set."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    out = []
    for mu in mu_grid:
        hits = n - int(np.searchsorted(s, -mu, side="right"))
        out.append(Estimate.proportion(hits, n))
    return out


def mu_from_samples(samples: np.ndarray, epsilon: float, seed: int = 0,
                    resamples: int = BOOTSTRAP_RESAMPLES) -> MuEstimate:
    """Threshold ``mu`` with ``Pr(S + mu > 0) = epsilon`` plus a bootstrap interval."""
    if not 0 < epsilon < 1:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    s = np.asarray(samples, dtype=float)
    n = len(s)
    floor = float(np.mean(s > 0))
    mu = -float(np.quantile(s, 1 - epsilon))
    if not mu > 0:
        raise InfeasibleEpsilonError(
            f"epsilon={epsilon} is not above the interference-limited outage {floor:.4g}",
            epsilon=epsilon, floor=floor)
    rng = stream(seed, TAG_BOOTSTRAP)
    boot = np.empty(resamples)
    for b in range(resamples):
        boot[b] = -np.quantile(s[rng.integers(0, n, n)], 1 - epsilon)
    lo, hi = np.quantile(boot, [0.025, 0.975])
    return MuEstimate(mu, epsilon, (min(float(lo), mu), max(float(hi), mu)), n)


def estimate_mu(system: SystemParams, epsilon: Optional[float] = None,
                trials: int = DEFAULT_MU_TRIALS, seed: int = 0,
                truncation_factor: float = DEFAULT_TRUNCATION,
                workers: Optional[int] = None,
                resamples: int = BOOTSTRAP_RESAMPLES) -> MuEstimate:
    """Scale-free threshold for target outage ``epsilon`` (defaults to ``system.epsilon``).

    ``mu`` is minus the empirical ``(1 - epsilon)`` quantile of the unit-density
    outage statistic; a cellular deployment meets the target iff
    ``p * lambda_b**(alpha/2) >= sigma2 / mu``.
    """
    eps = system.epsilon if epsilon is None else epsilon
    samples = sample_outage_statistic(system, trials, seed, truncation_factor, workers)
    return mu_from_samples(samples, eps, seed, resamples)


# ---------------------------------------------------------------- raw power

def transmit_probability(mean_power: float, omega: float, p: float) -> float:
    """Fraction of slots a mobile with stored energy can transmit at power ``p``."""
    if not p > 0:
        raise InvalidParameterError(f"p must be positive, got {p}")
    if not 0 < omega <= 1:
        raise InvalidParameterError(f"omega must lie in (0, 1], got {omega}")
    if mean_power < 0:
        raise InvalidParameterError("mean_power must be nonnegative")
    return 1.0 if mean_power >= omega * p else mean_power / (omega * p)


class PowerField:
    """Beacon samples around a typical mobile, reusable across beacon densities.

    Each trial holds a unit-density PPP of beacon distances on a disk of radius
    ``unit_radius``; at density ``lam`` the distances shrink by ``lam**-0.5``,
    so every trial's received power is nondecreasing in ``lam``.  Beacons with
    unit distance below ``nu * sqrt(lambda_max)`` are stored individually (the
    cut-off can bind for them); the rest are kept as one aggregate of
    ``d**-beta``.  Beacons beyond the disk are replaced by their mean
    contribution, which is what the bias of truncation would otherwise remove.
    The mobile sits at the origin: the beacon process is stationary and
    independent of the cells, so this has the law of the typical mobile's power.
    """

    def __init__(self, near: np.ndarray, offsets: np.ndarray, far_sum: np.ndarray,
                 nearest: np.ndarray, unit_radius: float, lambda_max: float,
                 beta: float, nu: float):
        self.near = near
        self.offsets = offsets
        self.far_sum = far_sum
        self.nearest = nearest
        self.unit_radius = unit_radius
        self.lambda_max = lambda_max
        self.beta = beta
        self.nu = nu
        self.trials = len(far_sum)
        self._owner = np.repeat(np.arange(self.trials), np.diff(offsets))

    @classmethod
    def sample(cls, lambda_max: float, beta: float, nu: float, trials: int, seed: int,
               truncation_factor: float = DEFAULT_TRUNCATION) -> PowerField:
        if not lambda_max > 0:
            raise InvalidParameterError("lambda_max must be positive")
        if trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {trials}")
        rho = nu * math.sqrt(lambda_max)
        unit_radius = max(float(truncation_factor), 2.0 * rho)
        mean_count = math.pi * unit_radius ** 2
        near_parts = []
        far_sum = np.empty(trials)
        nearest = np.empty(trials)
        for t in range(trials):
            rng = stream(seed, TAG_POWER, t)
            n = rng.poisson(mean_count)
            d = unit_radius * np.sqrt(rng.random(n))
            is_near = d < rho
            near_parts.append(d[is_near])
            far_sum[t] = np.sum(d[~is_near] ** -beta)
            nearest[t] = d.min() if n else np.inf
        counts = np.fromiter((len(x) for x in near_parts), dtype=np.int64, count=trials)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        near = np.concatenate(near_parts) if trials else np.empty(0)
        return cls(near, offsets, far_sum, nearest, unit_radius, lambda_max, beta, nu)

    def _check(self, lam):
        if lam < 0 or lam > self.lambda_max * (1 + 1e-12):
            raise InvalidParameterError(f"density {lam} outside [0, {self.lambda_max}]")

    def power(self, lam: float, q: float, mode: str = "isotropic",
              z_m: float = 1.0, z_s: float = 1.0) -> np.ndarray:
        """Raw power of every trial at beacon density ``lam``."""
        if mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
        self._check(lam)
        if lam == 0:
            return np.zeros(self.trials)
        b = self.beta
        cut = self.nu * math.sqrt(lam)
        scale = lam ** (b / 2)
        # gain max(d / sqrt(lam), nu)**-beta = scale * max(d, nu*sqrt(lam))**-beta
        near_gain = np.bincount(self._owner, weights=np.maximum(self.near, cut) ** -b,
                                minlength=self.trials)
        tail = 2 * math.pi * self.unit_radius ** (2 - b) / (b - 2)
        total = scale * (near_gain + self.far_sum + tail)
        if mode == "isotropic":
            return q * total
        g0 = scale * np.maximum(self.nearest, cut) ** -b
        g0[~np.isfinite(self.nearest)] = 0.0
        return q * (z_s * total + (z_m - z_s) * g0)

    def power_for(self, system: SystemParams, lam: float, q: float, mode: str) -> np.ndarray:
        return self.power(lam, q, mode, system.z_m, system.z_s)


def estimate_mean_raw_power(system: SystemParams, deployment: DeploymentParams,
                            mode: str = "isotropic", trials: int = DEFAULT_TRIALS, seed: int = 0,
                            truncation_factor: float = DEFAULT_TRUNCATION) -> Estimate:
    """Sample mean of the typical mobile's raw power."""
    if deployment.lambda_p == 0:
        return Estimate.from_samples(np.zeros(trials))
    field = PowerField.sample(deployment.lambda_p, system.beta, system.nu, trials, seed,
                              truncation_factor)
    return Estimate.from_samples(field.power_for(system, deployment.lambda_p, deployment.q, mode))


def estimate_power_outage(system: SystemParams, deployment: DeploymentParams, threshold: float,
                          mode: str = "isotropic", trials: int = DEFAULT_TRIALS, seed: int = 0,
                          truncation_factor: float = DEFAULT_TRUNCATION) -> Estimate:
    """Probability that the typical mobile's raw power is below ``threshold``."""
    if threshold < 0:
        raise InvalidParameterError("threshold must be nonnegative")
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if deployment.lambda_p == 0:
        return Estimate.proportion(trials if threshold > 0 else 0, trials)
    field = PowerField.sample(deployment.lambda_p, system.beta, system.nu, trials, seed,
                              truncation_factor)
    power = field.power_for(system, deployment.lambda_p, deployment.q, mode)
    return Estimate.proportion(int(np.count_nonzero(power < threshold)), trials)
