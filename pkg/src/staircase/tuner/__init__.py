"""Autotuner: budgeted search over tile sizes and unroll factors."""
from staircase.tuner.log import load, persist
from staircase.tuner.search import default_pipeline, evaluate, search
from staircase.tuner.space import ParamSpace, Trial

__all__ = [
    "ParamSpace",
    "Trial",
    "default_pipeline",
    "evaluate",
    "search",
    "persist",
    "load",
]
