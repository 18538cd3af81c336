"""Python bindings for the nnmass C++ core."""

import json

from . import _core
from ._core import (
    NnmassError,
    afrb_search,
    collapse_trial,
    cost,
    count_regions,
    mass,
    pareto,
    preset_json,
    preset_names,
    restructure,
    run_cli,
    scan,
    select,
    validate_arch,
)


def ldi(**kwargs):
    """Layerwise dynamical isometry report as a dict."""
    return json.loads(_core.ldi(**kwargs))


__all__ = [
    "NnmassError",
    "afrb_search",
    "collapse_trial",
    "cost",
    "count_regions",
    "ldi",
    "mass",
    "pareto",
    "preset_json",
    "preset_names",
    "restructure",
    "run_cli",
    "scan",
    "select",
    "validate_arch",
]
