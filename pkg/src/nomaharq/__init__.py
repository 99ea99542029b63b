"""Error-constrained uplink NOMA with HARQ under the finite-blocklength
normal approximation: error model, rate/power allocation, fading averages
and a Monte Carlo protocol simulator."""

from importlib.metadata import PackageNotFoundError, version

from .allocation import InfeasibleError, Scheme
from .errormodel import CodeParams, fbl_error
from .fading import ChannelDraw, FadingParams, LinkConfig
from .simengine import Adaptation, SchemePolicy, run_batch, run_trial

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "Adaptation",
    "ChannelDraw",
    "CodeParams",
    "FadingParams",
    "InfeasibleError",
    "LinkConfig",
    "Scheme",
    "SchemePolicy",
    "fbl_error",
    "run_batch",
    "run_trial",
]
