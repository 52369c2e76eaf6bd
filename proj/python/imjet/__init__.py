"""Inertial-manifold charts, jets and extensions (Python front end of the C++ core)."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import __version__, run_experiment as _run_experiment


def run(config, out_dir=""):
    """Run an experiment config (dict or JSON text); returns the exit code."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _run_experiment(text, out_dir)
