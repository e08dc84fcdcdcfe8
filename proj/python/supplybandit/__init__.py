"""Inventory-constrained recommendation simulator."""

try:
    from . import _supplybandit as _core
except ImportError:
    import _supplybandit as _core

ConfigError = _core.ConfigError
__version__ = _core.__version__

validate_config = _core.validate_config
default_demo_config = _core.default_demo_config
compute = _core.compute
run = _core.run
demo = _core.demo
greedy_value = _core.greedy_value
greedy_value_closed_form = _core.greedy_value_closed_form
optimal_assignment = _core.optimal_assignment
lower_bound = _core.lower_bound

__all__ = [
    "ConfigError",
    "validate_config",
    "default_demo_config",
    "compute",
    "run",
    "demo",
    "greedy_value",
    "greedy_value_closed_form",
    "optimal_assignment",
    "lower_bound",
]
