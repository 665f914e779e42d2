"""Services module exports."""

from bgcwm.services.criteria import evaluate_criteria
from bgcwm.services.postprocess import summarize
from bgcwm.services.rngdist import RngStream
from bgcwm.services.runner import run_chain, run_multichain
from bgcwm.services.simulate import gen_dataset

__all__ = [
    "RngStream",
    "run_chain",
    "run_multichain",
    "summarize",
    "evaluate_criteria",
    "gen_dataset",
]
