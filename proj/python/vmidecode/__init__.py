"""Visual-imagery EEG decoding toolkit."""

import json
import os

from ._core import (
    ConfigError,
    CspLda,
    DataError,
    NumericError,
    ShapeError,
    VmiError,
    __version__,
    analytic_signal,
    bandpass,
    derive_seed,
    fft,
    format_cell,
    permutation_test,
    plv_matrix,
    shape_trace,
    synth_epochs,
    welch_psd,
)
from ._core import _run_pipeline


def run_pipeline(config, out_dir, threads=1):
    """Run the full pipeline for a config dict or JSON file; returns the summary."""
    if isinstance(config, (str, os.PathLike)):
        with open(config) as f:
            config = json.load(f)
    return json.loads(_run_pipeline(json.dumps(config), os.fspath(out_dir), threads))


__all__ = [
    "ConfigError",
    "CspLda",
    "DataError",
    "NumericError",
    "ShapeError",
    "VmiError",
    "analytic_signal",
    "bandpass",
    "derive_seed",
    "fft",
    "format_cell",
    "permutation_test",
    "plv_matrix",
    "run_pipeline",
    "shape_trace",
    "synth_epochs",
    "welch_psd",
]
