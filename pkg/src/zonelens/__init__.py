"""Five-zone mm-wave radar monitoring platform, simulated end to end.

Subsystems: gradient-index lens synthesis (`lens`), GRIN ray tracing
(`raytrace`), angular-coverage analysis (`coverage`), FMCW radar simulation
(`fmcw`), calibrated multi-radar fusion (`fusion`), the fall-detection state
machine (`tracker`), and the streaming service + CLI (`service`, `cli`).
"""

__version__ = "0.1.0"
