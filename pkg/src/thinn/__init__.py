"""Entropy-dissipation training for small PDE networks.

Core pieces: taped reverse-mode autodiff over forward-mode jets (`tape`,
`jets`), tanh networks on a flat parameter vector (`network`), problem and
field definitions (`problems`), collocation schemes (`quadrature`), loss
functionals (`losses`), full-batch Adam (`optimizer`), ground-truth solvers
(`reference`), metrics and diagnostics (`metrics`), and the experiment
runner with its CLI (`config`, `runner`, `cli`).
"""

from .problems import ProblemSpec
from .network import MLP

__all__ = ["ProblemSpec", "MLP"]
__version__ = "0.1.0"
