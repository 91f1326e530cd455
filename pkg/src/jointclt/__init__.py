"""Joint time-series / cross-section estimation with serially correlated shocks.

Simulation, estimation, HAC long-run variance, plug-in Wald inference and
Monte Carlo checks of the conditional, stable and joint limit theorems.
"""

from .dgp import CrossSectionSpec, JointSample, PanelSample, conditional_moments, generate_joint, generate_panel
from .errors import DatasetParseError, DegenerateDesignError, DegenerateVarianceError, ParameterDomainError
from .estimate import (
    EstimateSet,
    estimate_all,
    estimate_beta,
    estimate_phi,
    estimate_pi1,
    estimate_pi_at,
    estimate_sigma_u2,
)
from .infer import InferenceResult, counterfactual_inference, gaussian_quantile, limit_variance, wald
from .lrv import LrvConfig, LrvEstimate, auto_bandwidth, hac
from .process import (
    ProcessSpec,
    ShockPath,
    autocovariance,
    check_condition2,
    generate_shocks,
    long_run_variance_true,
    mixingale_coefficient_true,
)
from .verify import McConfig, McReport, ks_distance, run_mc

__version__ = "0.1.0"
