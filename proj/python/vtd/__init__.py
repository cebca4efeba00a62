# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The vtd Authors
"""Keyword-trigger detection with a multi-task biLSTM acoustic model."""

import json as _json

from ._vtd import (
    ConfigError,
    DataError,
    EmptyInputError,
    Error,
    Model,
    NumericError,
    ShapeError,
    StateError,
    blank_only_loss,
    compute_features,
    count_parameters,
    ctc_grad,
    ctc_loss,
    det_curve,
    fr_at_fa,
    score_discriminative,
    score_keyword,
    stack_and_subsample,
)
from ._vtd import run_demo as _run_demo


def run_demo(config=None):
    """Runs the five-model comparison. `config` is a dict in the JSON
    experiment-config layout; missing keys keep their defaults."""
    return _run_demo(_json.dumps(config) if config else "")


__all__ = [
    "ConfigError",
    "DataError",
    "EmptyInputError",
    "Error",
    "Model",
    "NumericError",
    "ShapeError",
    "StateError",
    "blank_only_loss",
    "compute_features",
    "count_parameters",
    "ctc_grad",
    "ctc_loss",
    "det_curve",
    "fr_at_fa",
    "run_demo",
    "score_discriminative",
    "score_keyword",
    "stack_and_subsample",
]
