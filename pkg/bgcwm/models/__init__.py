"""Models module exports."""

from bgcwm.models.schemas import BnbParams, Hyperparams, InferenceMode, RunConfig, SimSpec, Summary
from bgcwm.models.state import ComponentParams, Dataset, DrawArchive, MixtureState

__all__ = [
    "BnbParams",
    "Hyperparams",
    "InferenceMode",
    "RunConfig",
    "SimSpec",
    "Summary",
    "ComponentParams",
    "Dataset",
    "DrawArchive",
    "MixtureState",
]
