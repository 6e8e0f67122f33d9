"""Reference interpreter: buffers, tapes, execution modes, cost metering."""
from staircase.interp.buffer import Buffer, buffer_from_json, buffer_to_json
from staircase.interp.stats import DEFAULT_WEIGHTS, ExecStats, cost

__all__ = [
    "Buffer",
    "buffer_from_json",
    "buffer_to_json",
    "ExecStats",
    "DEFAULT_WEIGHTS",
    "cost",
    "run",
    "run_worksharing",
    "check_races",
    "ExecMode",
    "ENGINE_NAME",
]


def __getattr__(name):
    if name in ("run", "run_worksharing", "ExecMode", "ENGINE_NAME"):
        from staircase.interp import machine

        return getattr(machine, name)
    if name == "check_races":
        from staircase.interp.races import check_races

        return check_races
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
