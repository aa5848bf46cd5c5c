"""Experiment drivers that turn a config into one CSV table."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from hybridnet import analytic, feasibility, montecarlo
from hybridnet.config import ExperimentConfig
from hybridnet.errors import BoundInapplicableError, InvalidParameterError
from hybridnet.feasibility import RegionConfig
from hybridnet.montecarlo import PowerField
from hybridnet.propagation import DeploymentParams

SCHEMAS = {
    "outage": ("lambda_b", "p", "q", "lambda_p", "p_out", "stderr"),
    "mu-curve": ("mu", "epsilon", "stderr"),
    "mpt-power": ("lambda_p", "mode", "mean_power", "stderr", "analytic"),
    "power-outage": ("lambda_p", "mode", "threshold", "p_out", "stderr", "bound"),
    "feasibility": ("lambda_b", "min_co_param", "infeasible"),
    "fig3": ("mu", "epsilon", "stderr"),
    "fig4": ("lambda_b", "min_p_noise", "min_p_intlim"),
    "fig5": ("lambda_p", "p_iso_large", "p_dir_large", "p_iso_small", "p_dir_small"),
    "fig6": ("lambda_b", "min_lambda_p_sim", "min_lambda_p_bound", "mode", "storage"),
}

# Default sweeps
MU_GRID = tuple(0.25 * i for i in range(41))
LAMBDA_B_GRID = tuple(float(x) for x in np.geomspace(1e-2, 1.0, 21))
LAMBDA_P_GRID = tuple(2.0 ** k for k in range(-10, 4))
DEFAULT_POWER_TRIALS = 20_000
DEFAULT_LAMBDA_P_MAX = 10.0

SMALL_STORAGE_NOTE = ("small-storage power threshold p_t is set to the mobile transmit power p "
                      "(the quantile of raw power at level delta)")


@dataclass
class Table:
    """Rows of one experiment with notes for the manifest."""

    experiment: str
    rows: list
    notes: dict = field(default_factory=dict)

    @property
    def header(self) -> tuple:
        return SCHEMAS[self.experiment]


def format_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if v is None:
        return ""
    return repr(float(v))


def sub_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for one sweep point."""
    ss = np.random.SeedSequence([seed, *keys])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _trials(cfg: ExperimentConfig, default: int) -> int:
    return cfg.trials if cfg.trials is not None else default


def _grid(cfg: ExperimentConfig, name: str, default) -> list:
    g = cfg.sweep.get(name)
    return list(default if g is None else g)


# ---------------------------------------------------------------- estimators

def run_outage(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    dep = cfg.deployment
    grid = _grid(cfg, "lambda_b", [dep.lambda_b])
    trials = _trials(cfg, montecarlo.DEFAULT_TRIALS)
    rows = []
    for i, lb in enumerate(grid):
        point = DeploymentParams(dep.p, dep.q, lb, dep.lambda_p)
        est = montecarlo.estimate_outage(cfg.system, point, trials, sub_seed(cfg.seed, 1, i),
                                         cfg.truncation_factor, workers)
        rows.append((lb, dep.p, dep.q, dep.lambda_p, est.value, est.stderr))
    return Table("outage", rows)


def _mu_curve(cfg: ExperimentConfig, name: str, workers: Optional[int]) -> Table:
    trials = _trials(cfg, montecarlo.DEFAULT_MU_TRIALS)
    samples = montecarlo.sample_outage_statistic(cfg.system, trials, cfg.seed,
                                                 cfg.truncation_factor, workers)
    grid = _grid(cfg, "mu", MU_GRID)
    rows = [(mu, e.value, e.stderr) for mu, e in zip(grid, montecarlo.outage_curve(samples, grid))]
    notes = {"epsilon_floor": float(np.mean(samples > 0))}
    try:
        m = montecarlo.mu_from_samples(samples, cfg.system.epsilon, cfg.seed)
        notes.update(mu=m.mu, mu_ci95=list(m.ci), epsilon=m.epsilon)
    except InvalidParameterError as exc:
        notes["mu_error"] = str(exc)
    return Table(name, rows, notes)


def run_mu_curve(cfg, workers=None):
    return _mu_curve(cfg, "mu-curve", workers)


def run_mpt_power(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    s, dep = cfg.system, cfg.deployment
    grid = _grid(cfg, "lambda_p", [dep.lambda_p])
    trials = _trials(cfg, montecarlo.DEFAULT_TRIALS)
    rows = []
    for i, lp in enumerate(grid):
        point = DeploymentParams(dep.p, dep.q, dep.lambda_b, lp)
        iso = analytic.mean_power_isotropic(dep.q, lp, s.nu, s.beta)
        dire = analytic.mean_power_directed(dep.q, lp, s.nu, s.beta, s.z_m, s.z_s)
        for mode, exact in (("isotropic", iso), ("directed", dire)):
            est = montecarlo.estimate_mean_raw_power(s, point, mode, trials, sub_seed(cfg.seed, 2, i),
                                                     cfg.truncation_factor)
            rows.append((lp, mode, est.value, est.stderr, exact))
    return Table("mpt-power", rows)


def run_power_outage(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    s, dep = cfg.system, cfg.deployment
    grid = _grid(cfg, "lambda_p", [dep.lambda_p])
    thr = cfg.threshold if cfg.threshold is not None else dep.p
    trials = _trials(cfg, montecarlo.DEFAULT_TRIALS)
    rows = []
    for i, lp in enumerate(grid):
        point = DeploymentParams(dep.p, dep.q, dep.lambda_b, lp)
        for mode in analytic.MODES:
            est = montecarlo.estimate_power_outage(s, point, thr, mode, trials,
                                                   sub_seed(cfg.seed, 3, i), cfg.truncation_factor)
            try:
                bound = analytic.power_outage_bound(thr, dep.q, lp, s.beta, s.nu, mode, s.z_m)
            except (BoundInapplicableError, InvalidParameterError):
                bound = None
            rows.append((lp, mode, thr, est.value, est.stderr, bound))
    return Table("power-outage", rows)


def _threshold(cfg: ExperimentConfig, interference_limited: bool, workers, notes: dict) -> float:
    s = cfg.system
    if interference_limited:
        mt = analytic.mu_tilde(s.p_b, s.eta, s.alpha)
        notes["mu_tilde"] = mt
        return mt
    m = montecarlo.estimate_mu(s, None, _trials(cfg, montecarlo.DEFAULT_MU_TRIALS), cfg.seed,
                               cfg.truncation_factor, workers)
    notes.update(mu=m.mu, mu_ci95=list(m.ci), epsilon=m.epsilon)
    return m.mu


def run_feasibility(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    il = cfg.noise == "interference_limited"
    if cfg.region == "cellular":
        region = RegionConfig.cellular(il)
    else:
        region = RegionConfig.hybrid(cfg.mode, cfg.storage, il)
    notes = {"region": region.label, "bound": region.network == "hybrid"}
    if region.network == "hybrid" and region.storage == "small":
        notes["p_t"] = SMALL_STORAGE_NOTE
    thr = _threshold(cfg, il, workers, notes)
    grid = _grid(cfg, "lambda_b", LAMBDA_B_GRID)
    curve = feasibility.trace_boundary(region, cfg.system, thr, grid, cfg.deployment.q)
    rows = [(lb, v, bool(m)) for lb, v, m in zip(curve.lambda_b_grid, curve.min_co_param,
                                                 curve.infeasible_mask)]
    return Table("feasibility", rows, notes)


# ---------------------------------------------------------------- figures

def run_fig3(cfg, workers=None):
    return _mu_curve(cfg, "fig3", workers)


def run_fig4(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    notes: dict = {}
    mu = _threshold(cfg, False, workers, notes)
    mt = _threshold(cfg, True, workers, notes)
    grid = _grid(cfg, "lambda_b", LAMBDA_B_GRID)
    noisy = feasibility.trace_boundary(RegionConfig.cellular(False), cfg.system, mu, grid)
    intlim = feasibility.trace_boundary(RegionConfig.cellular(True), cfg.system, mt, grid)
    rows = list(zip(grid, noisy.min_co_param, intlim.min_co_param))
    return Table("fig4", rows, notes)


def _small_storage_power(field: PowerField, cfg: ExperimentConfig, lp: float, mode: str) -> float:
    return feasibility.supported_power(field.power_for(cfg.system, lp, cfg.deployment.q, mode),
                                       cfg.system, "small")


def run_fig5(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    s, q = cfg.system, cfg.deployment.q
    grid = _grid(cfg, "lambda_p", LAMBDA_P_GRID)
    trials = cfg.power_trials or _trials(cfg, DEFAULT_POWER_TRIALS)
    field = PowerField.sample(max(grid), s.beta, s.nu, trials, cfg.seed, cfg.truncation_factor)
    rows = []
    for lp in grid:
        iso = analytic.mean_power_isotropic(q, lp, s.nu, s.beta) / s.omega
        dire = analytic.mean_power_directed(q, lp, s.nu, s.beta, s.z_m, s.z_s) / s.omega
        rows.append((lp, iso, dire, _small_storage_power(field, cfg, lp, "isotropic"),
                     _small_storage_power(field, cfg, lp, "directed")))
    notes = {"p_t": SMALL_STORAGE_NOTE, "large_storage": "closed-form mean power / omega",
             "small_storage": "simulated", "power_trials": trials}
    return Table("fig5", rows, notes)


def run_fig6(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    s, q = cfg.system, cfg.deployment.q
    il = cfg.noise == "interference_limited"
    notes: dict = {"p_t": SMALL_STORAGE_NOTE}
    thr = _threshold(cfg, il, workers, notes)
    grid = _grid(cfg, "lambda_b", LAMBDA_B_GRID)
    lam_max = cfg.lambda_p_max or DEFAULT_LAMBDA_P_MAX
    trials = cfg.power_trials or DEFAULT_POWER_TRIALS
    field = PowerField.sample(lam_max, s.beta, s.nu, trials, sub_seed(cfg.seed, 6),
                              cfg.truncation_factor)
    rows = []
    for mode in analytic.MODES:
        for storage in feasibility.STORAGE:
            region = RegionConfig.hybrid(mode, storage, il)
            curve = feasibility.trace_boundary(region, s, thr, grid, q)
            for lb, bound in zip(grid, curve.min_co_param):
                sim = feasibility.simulate_min_pb_density(region, s, thr, lb, q, field)
                rows.append((lb, sim, bound, mode, storage))
    notes.update(lambda_p_max=lam_max, power_trials=trials,
                 infeasible="inf marks no beacon density up to lambda_p_max (simulated) "
                            "or no finite inner bound")
    return Table("fig6", rows, notes)


RUNNERS: dict[str, Callable[..., Table]] = {
    "outage": run_outage,
    "mu-curve": run_mu_curve,
    "mpt-power": run_mpt_power,
    "power-outage": run_power_outage,
    "feasibility": run_feasibility,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "fig6": run_fig6,
}


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    if cfg.experiment not in RUNNERS:
        raise InvalidParameterError(f"unknown experiment {cfg.experiment!r}")
    return RUNNERS[cfg.experiment](cfg, workers)
