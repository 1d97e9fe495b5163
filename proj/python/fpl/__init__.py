"""Follow the Perturbed Leader experiments from Python."""

import csv
import io
import json

from ._core import (
    ExpertClass,
    FormatError,
    InvalidState,
    Predictor,
    Unsupported,
    bound_value,
    config_reference,
    high_probability_envelope,
    select_leader,
    selection_probabilities,
    selection_probabilities_mc,
    shifted_exp_max_estimate,
)
from . import _core

__all__ = [
    "ExpertClass",
    "FormatError",
    "InvalidState",
    "Predictor",
    "Unsupported",
    "bound_value",
    "config_reference",
    "high_probability_envelope",
    "run",
    "select_leader",
    "selection_probabilities",
    "selection_probabilities_mc",
    "shifted_exp_max_estimate",
    "sweep",
]


def _entries(config, overrides):
    entries = {str(k): str(v) for k, v in (config or {}).items()}
    entries.update({k.replace("__", "."): str(v) for k, v in overrides.items()})
    return entries


def run(config=None, **overrides):
    """Run one experiment.

    Keys are configuration keys such as ``"run.horizon"``; keyword arguments
    may spell the dot as a double underscore (``run__horizon=100``). Returns
    ``(summary, trace)`` with the summary as a dict and the trace as a list of
    row dicts (missing values are ``None``).
    """
    summary_text, trace_text = _core.run_experiment(_entries(config, overrides))
    lines = [line for line in trace_text.splitlines() if not line.startswith("#")]
    rows = []
    for row in csv.DictReader(io.StringIO("\n".join(lines))):
        rows.append({k: (None if v == "" else (int(v) if k in ("t", "chosen") else float(v))) for k, v in row.items()})
    return json.loads(summary_text), rows


def sweep(config=None, **overrides):
    """Seed sweep; returns the report as a dict."""
    return json.loads(_core.sweep(_entries(config, overrides)))
