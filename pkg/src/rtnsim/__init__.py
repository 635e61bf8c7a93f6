"""Two-qubit entanglement dynamics under random telegraph noise."""
from .noise import QubitSpec, RtnSource, rtn_transfer, two_qubit_transfer
from .entanglement import Family, InitialState, Model, concurrence_analytic, concurrence_wootters, esd_times
from .montecarlo import ensemble_average
from .phase import classify

__version__ = "0.1.0"

__all__ = [
    "QubitSpec",
    "RtnSource",
    "rtn_transfer",
    "two_qubit_transfer",
    "Family",
    "InitialState",
    "Model",
    "concurrence_analytic",
    "concurrence_wootters",
    "esd_times",
    "ensemble_average",
    "classify",
]
