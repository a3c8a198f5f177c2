"""Dimensioning toolkit for NR RedCap devices and networks.

Modules: ``model`` (profiles, carriers, requirements), ``datarate``,
``power``, ``linkbudget``, ``bwp``, ``access``, ``capacity``, ``scenario``
and ``cli``. ``kernels.BACKEND`` tells whether the compiled kernels loaded.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .model import (CapabilityProfile, CarrierConfig, DeploymentScenario,  # noqa: E402
                    ProfileKind, UseCaseRequirement, builtin_profile, check_requirements)
from .scenario import ScenarioFile, load_scenario, parse_scenario, serialize_scenario  # noqa: E402

__all__ = [
    "BACKEND", "CapabilityProfile", "CarrierConfig", "DeploymentScenario", "ProfileKind",
    "ScenarioFile", "UseCaseRequirement", "builtin_profile", "check_requirements",
    "load_scenario", "parse_scenario", "serialize_scenario", "__version__",
]
