"""PAM-6 / QAM-32 modulation design for RIN-limited IM-DD links."""
__version__ = "0.1.0"

from ._backend import available_backends  # noqa: E402
from .constellation import Constellation, RemovalSet, cross_qam32, optimized_qam32, qam36, reference_qam32  # noqa: E402
from .labeling import Labeling, builtin_labelings  # noqa: E402
from .model import ChannelParams, NoiseModel, Observation2D, Point2D  # noqa: E402

__all__ = [
    "available_backends", "Constellation", "RemovalSet", "cross_qam32", "optimized_qam32", "qam36",
    "reference_qam32", "Labeling", "builtin_labelings", "ChannelParams", "NoiseModel", "Observation2D", "Point2D",
]
