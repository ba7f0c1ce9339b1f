"""glassmem: associative memory in driven atom-cavity spin networks.

Submodules:

  spins          configurations, couplings, energies, serialization
  dynamics       zero-temperature relaxation (MH / SD / SD_RATE)
  hopfield       Hebbian networks and pattern capacity
  sk             Sherrington-Kirkpatrick minima and memory capacity
  cavity         confocal-cavity coupling kernel, stimulus fields
  semiclassical  driven-dissipative spin-network simulation
  pipeline       attractor sampling, clustering, basin and capacity estimation
  cli            command-line entry points
"""

from . import cavity, dynamics, hopfield, pipeline, semiclassical, sk, spins
from .cavity import CavityParams, SitePlan, coupling_matrix, j1_plan
from .dynamics import MH, SD, SD_RATE, DynamicsKind
from .pipeline import RelaxOracle, SemiclassicalOracle, capacity
from .semiclassical import NoiseModel, SimParams, run_recall_trial

__version__ = "0.1.0"

__all__ = [
    "MH",
    "SD",
    "SD_RATE",
    "CavityParams",
    "DynamicsKind",
    "NoiseModel",
    "SimParams",
    "SitePlan",
    "cavity",
    "coupling_matrix",
    "dynamics",
    "RelaxOracle",
    "SemiclassicalOracle",
    "capacity",
    "hopfield",
    "j1_plan",
    "pipeline",
    "run_recall_trial",
    "semiclassical",
    "sk",
    "spins",
    "__version__",
]
