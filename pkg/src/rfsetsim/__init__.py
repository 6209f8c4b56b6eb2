"""rfsetsim: CMOS kinetic-inductance resonator + rf-SET readout simulator."""

from . import (config, constants, films, fitting, readout, resonator,
               set_device, sweeps)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["config", "constants", "films", "fitting", "readout", "resonator",
           "set_device", "sweeps", "KERNEL_BACKEND", "__version__"]
