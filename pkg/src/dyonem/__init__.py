"""Two-potential electrodynamics with electric and magnetic charges."""
from .tensor import FieldState, FourVector, hodge_dual, run_identity_suite
from .dynamics import DyonState, lorentz_force_3, lorentz_force_covariant, push_dyon

__version__ = "0.1.0"

__all__ = [
    "FieldState",
    "FourVector",
    "hodge_dual",
    "run_identity_suite",
    "DyonState",
    "lorentz_force_3",
    "lorentz_force_covariant",
    "push_dyon",
    "__version__",
]
