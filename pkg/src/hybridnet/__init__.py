"""Outage, power transfer and feasibility analysis for cellular networks powered by beacons."""

from hybridnet.analytic import (mean_power_directed, mean_power_isotropic, mu_tilde, psi,
                                power_outage_bound, upper_incomplete_gamma)
from hybridnet.errors import (BoundInapplicableError, DivergentIntegralError, DomainError,
                              HybridNetError, InfeasibleEpsilonError, InvalidParameterError,
                              NoBeaconError, SamplingError, SingularityError)
from hybridnet.feasibility import (BoundaryCurve, RegionConfig, cellular_min_power,
                                   hybrid_min_pb_density, region_contains, trace_boundary,
                                   verify_boundary_by_simulation)
from hybridnet.montecarlo import (Estimate, MuEstimate, PowerField, estimate_mean_raw_power,
                                  estimate_mu, estimate_outage, estimate_power_outage)
from hybridnet.propagation import DeploymentParams, SystemParams
from hybridnet.spatial import NetworkRealization, SimWindow, sample_ppp, sample_realization

__version__ = "0.1.0"
