"""Configuration, sweeps, scaling fits and the command line front end."""

from .config import SweepConfig, load_config
from .runner import RunRecord, run_single, run_sweep
from .fitting import ScalingFit, fit_scaling
from .kernelcheck import kernel_check
