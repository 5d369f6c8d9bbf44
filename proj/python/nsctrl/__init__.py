"""Python interface to the control-experiment core.

The compiled module lives inside this package when installed from a wheel,
and next to it on ``PYTHONPATH`` when used straight from a build tree.
"""

try:
    from . import _nsctrl as _impl
except ImportError:  # build-tree layout
    import _nsctrl as _impl

ConfigError = _impl.ConfigError
SolverError = _impl.SolverError
validate_config = _impl.validate_config
run = _impl.run
solve_hum = _impl.solve_hum
audit = _impl.audit
__version__ = _impl.__version__

__all__ = [
    "ConfigError",
    "SolverError",
    "validate_config",
    "run",
    "solve_hum",
    "audit",
    "__version__",
]
