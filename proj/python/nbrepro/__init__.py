"""Reproducibility measurement for Jupyter notebook repositories.

Thin Python layer over the native core: pure helpers are re-exported as is,
pipeline stages take keyword options and return decoded dictionaries.
"""

import json as _json

from ._core import (
    ConfigError,
    NbreproError,
    PrerequisiteError,
    classify_error,
    detect_nondeterminism,
    extract_imports,
    filter_standard_library,
    generate_dockerfile,
    is_stdlib_module,
    map_import_to_distribution,
    nondeterminism_patterns,
    normalize_distribution_name,
    resolution_rate,
    roundtrip_notebook,
    version,
)
from . import _core

__version__ = version()

__all__ = [
    "ConfigError",
    "NbreproError",
    "PrerequisiteError",
    "classify",
    "classify_error",
    "compare",
    "compare_notebooks",
    "detect_nondeterminism",
    "execute",
    "extract_imports",
    "filter_standard_library",
    "generate_dockerfile",
    "infer",
    "is_stdlib_module",
    "map_import_to_distribution",
    "nondeterminism_patterns",
    "normalize_distribution_name",
    "report",
    "resolution_rate",
    "roundtrip_notebook",
    "run",
    "version",
]


def _config(inputs=None, **options):
    cfg = {k: (str(v) if hasattr(v, "__fspath__") else v) for k, v in options.items() if v is not None}
    if inputs is not None:
        cfg["inputs"] = [inputs] if isinstance(inputs, str) else [str(i) for i in inputs]
    return _json.dumps(cfg)


def compare_notebooks(original, executed):
    """Cell-level comparison of two notebook documents (JSON text or dicts)."""
    as_text = lambda nb: nb if isinstance(nb, str) else _json.dumps(nb)
    return _json.loads(_core.compare_notebooks(as_text(original), as_text(executed)))


def run(inputs, **options):
    """Acquire, infer, build, execute, compare and report. Options mirror the CLI flags."""
    return _json.loads(_core.run_stage("run", _config(inputs, **options)))


def infer(inputs, **options):
    return _json.loads(_core.run_stage("infer", _config(inputs, **options)))


def execute(**options):
    return _json.loads(_core.run_stage("execute", _config(**options)))


def compare(**options):
    return _json.loads(_core.run_stage("compare", _config(**options)))


def report(**options):
    return _json.loads(_core.write_report(_config(**options)))


def classify(baseline, **options):
    return _json.loads(_core.classify(_config(**options), str(baseline)))
