"""Manifold polynomial chaos expansion (m-PCE).

High-dimensional stochastic input fields are compressed with one of
thirteen dimension-reduction methods and mapped to PDE solution fields by
polynomial chaos surrogates fitted on the reduced coordinates. The package
bundles the field samplers, reducers, PCE machinery, benchmark solvers,
error metrics, and an experiment pipeline with a command-line front end.
"""

from . import dataio, fields, grid, metrics, pce, pipeline, reducers, solvers

__version__ = "0.1.0"

__all__ = [
    "dataio",
    "fields",
    "grid",
    "metrics",
    "pce",
    "pipeline",
    "reducers",
    "solvers",
    "__version__",
]
