"""Conformal Laplacians and Q-curvatures on metrics and hypersurface embeddings.

The package evaluates the intrinsic operators P2, P4 and their extrinsic
counterparts P2, P3, P4 on user-specified Riemannian metrics and embedded
hypersurfaces, and ships a verification harness that checks the conformal
transformation laws, Gauss-Bonnet sums, and pointwise invariants numerically.
"""

from .jets import (
    Jet,
    JetError,
    DegreeExhaustedError,
    SingularFieldError,
    jet_space,
)
from .scenarios import list_scenarios, parse_scenario
from .verify import ConfigError, VerifyConfig, load_config, run_suite

__version__ = "0.1.0"

__all__ = [
    "Jet",
    "JetError",
    "DegreeExhaustedError",
    "SingularFieldError",
    "jet_space",
    "list_scenarios",
    "parse_scenario",
    "ConfigError",
    "VerifyConfig",
    "load_config",
    "run_suite",
    "__version__",
]
