"""Real-time estimation of amplitudes, phases, and fundamental frequency of
arbitrarily distorted single-phase signals.

Building blocks:

  signals        distorted test signal and its internal-model ground truth
  observer       parallelized second-order-generalized-integrator observer
  placement      analytical observer gains from a prescribed pole set
  fll            frequency-locked loop (plain / normalized / safeguarded)
  extraction     amplitude/phase extraction and settling metrics
  steady_state   closed-form frequency-response oracle
  scenario       scenario files, simulation driver, CSV export, comparison

The simulation hot loop runs on a compiled extension when available and on
a pure-numpy fallback otherwise (`harmest._core.BACKEND` names the active
one).
"""
__version__ = "0.1.0"

from ._core import BACKEND  # noqa: F401
