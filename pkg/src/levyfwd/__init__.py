"""Levy-driven multiple-curve forward price model: caplet pricing by Fourier
inversion, Monte Carlo validation and calibration."""

from .errors import LevyFwdError
from .fourier_pricing import CapletSpec, DampingConfig, price_caplet, price_surface
from .levy_driver import NigParams, cumulant, phi_XT
from .model_core import ModelInstance, VolStructure, assemble_model
from .tenor_curves import CurveSet, TenorGrid, load_curves

__all__ = [
    "CapletSpec",
    "CurveSet",
    "DampingConfig",
    "LevyFwdError",
    "ModelInstance",
    "NigParams",
    "TenorGrid",
    "VolStructure",
    "assemble_model",
    "cumulant",
    "load_curves",
    "phi_XT",
    "price_caplet",
    "price_surface",
]
