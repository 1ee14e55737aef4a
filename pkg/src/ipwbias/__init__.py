"""Large-sample bias of IPW and doubly robust estimators under misspecified models."""

from . import bias_lab, dgp, estimators, glm, randgen
from .randgen import SeedSpec

__all__ = ["bias_lab", "dgp", "estimators", "glm", "randgen", "SeedSpec"]
__version__ = "0.1.0"
