"""Green metrics, Martin kernels, entropy and escape rates of random walks on groups."""

from .groups import Element, GroupSpec, parse_group
from .measures import StepMeasure, parse_measure

__all__ = ["Element", "GroupSpec", "StepMeasure", "parse_group", "parse_measure"]
__version__ = "0.1.0"
