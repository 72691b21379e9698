"""
rarl-kit: realizable abstractions for tabular MDPs.

Ground MDPs, second-order abstract models, F-relative options, the
realizability / admissibility checks that tie them together, an occupancy-LP
realizer and the RARL learning loop.
"""

__version__ = "0.1.0"

from .abstraction import (  # noqa: E402
    AbstractionPair,
    BlockMdp,
    FRelativeOption,
    Mapping,
    PolicyOfOptions,
    check_admissible,
    check_realizable_from,
    check_realizable_tuple,
    tilde_targets,
)
from .errors import RarlKitError  # noqa: E402
from .mdp import GroundMdp, SecondOrderMdp  # noqa: E402
from .rarl import RarlConfig, run  # noqa: E402
from .realizer import OnlineRealizer, realize_exact  # noqa: E402

__all__ = [
    "AbstractionPair",
    "BlockMdp",
    "FRelativeOption",
    "GroundMdp",
    "Mapping",
    "OnlineRealizer",
    "PolicyOfOptions",
    "RarlConfig",
    "RarlKitError",
    "SecondOrderMdp",
    "check_admissible",
    "check_realizable_from",
    "check_realizable_tuple",
    "realize_exact",
    "run",
    "tilde_targets",
]
