# src/__init__.py

"""
Damped-wave resolvent laboratory package.

This package contains the computational modules:
- geometry: Warped surfaces of revolution and coefficient profiles
- discretize: Finite-volume mode operators on the profile curve
- resolvent: Resolvent norms, scaling fits and transfer checks
- dynamics: Geodesic flow, control time, monodromy and pressure
- dwe: Damped wave evolution and the resolvent-to-decay calculus
- experiment: Configuration, presets and run manifests
- report: Text, CSV and Excel reports of run manifests
"""

# Version info
__version__ = "1.0.0"
__author__ = "Resolvent Lab"

# Import main classes for easy access
from .geometry import ProfileSet, WarpedSurface, build_profile_set, build_surface
from .discretize import ModeOperator, build_mode_operator
from .resolvent import ResolventScanner, ScalingFit, ScanSettings, fit_scaling
from .dynamics import GeodesicState, gcc_time, monodromy, pressure
from .dwe import assemble_generator, evolve, rate_from_resolvent
from .experiment import ExperimentConfig, RunManifest, load_config, run_preset
from .report import ReportGenerator, emit_report

__all__ = [
    "ProfileSet",
    "WarpedSurface",
    "build_profile_set",
    "build_surface",
    "ModeOperator",
    "build_mode_operator",
    "ResolventScanner",
    "ScalingFit",
    "ScanSettings",
    "fit_scaling",
    "GeodesicState",
    "gcc_time",
    "monodromy",
    "pressure",
    "assemble_generator",
    "evolve",
    "rate_from_resolvent",
    "ExperimentConfig",
    "RunManifest",
    "load_config",
    "run_preset",
    "ReportGenerator",
    "emit_report",
]
