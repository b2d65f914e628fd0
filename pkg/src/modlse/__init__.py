"""modlse: modulo-ADC (unlimited sensing) line-spectral estimation.

Signal synthesis and folding, acquisition simulation, and three
recovery algorithms (higher-order differences + OMP, robust sparse
recovery via SBL, and a MILP solved by an in-house branch-and-bound
engine), with a Monte Carlo evaluation harness and CLI.
"""

__version__ = "0.1.0"
