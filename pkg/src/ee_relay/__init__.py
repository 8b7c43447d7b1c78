"""Energy efficiency of a massive-MIMO two-way relay serving IoT device pairs.

Layers: ``core`` (config, topology, power model), ``analytic`` (closed-form
rates and bounds), ``simlab`` (Monte-Carlo link simulation), ``optimizer``
(power, antenna and pair allocation) and ``experiments``/``cli``.
"""

from .core import ConfigError, SystemConfig, load_config

__version__ = "0.1.0"
__all__ = ["ConfigError", "SystemConfig", "load_config", "__version__"]
