"""Finite-section numerics for interpolating sequences in complete Pick spaces."""

from importlib.metadata import PackageNotFoundError, version as _version

from . import errors, grammian, kernels, pick, realization, sequences
from ._backend import NAME as BACKEND
from .errors import CnpickError
from .kernels import KernelSpec
from .pick import PickProblem, PickResult
from .sequences import SeqSpec

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CnpickError",
    "KernelSpec",
    "PickProblem",
    "PickResult",
    "SeqSpec",
    "errors",
    "grammian",
    "kernels",
    "pick",
    "realization",
    "sequences",
]
