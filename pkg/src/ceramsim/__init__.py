"""Thermo-visco-plastic compaction and sintering model for ceramic powder bodies."""
from .integrator import (IntegratorSettings, LoadSegment, NonConvergenceError, StepResult,
                         drive_program, return_map_step, stress_step)
from .matmodel import MaterialParams, MaterialState
from .micromech import HardeningState, hardening_bundle

__version__ = "0.1.0"

__all__ = ["IntegratorSettings", "LoadSegment", "MaterialParams", "MaterialState",
           "HardeningState", "NonConvergenceError", "StepResult", "drive_program",
           "hardening_bundle", "return_map_step", "stress_step"]
