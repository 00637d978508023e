"""qflip: pulse design and robustness benchmarking for single-qubit flips.

Submodules
----------
dynamics     two-level propagation (exact unitary steps, dephasing RK4)
sta          invariant-engineered detuning ramps robust to drive errors
rl_env       fixed-step pulse-programming environment for policy training
ppo          numpy implementation of clipped PPO with a Beta policy
measurement  thresholded fluorescence readout and population estimation
bench        strategy comparisons: error sweeps, dephasing, feedback
waveform     phase-continuous IF waveform synthesis from pulse tables
cli          command-line entry points (``qflip ...``)
"""

from ._kernels import BACKEND_NAME as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND"]
__version__ = "0.1.0"
