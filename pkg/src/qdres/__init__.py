"""Complex-frequency Rayleigh-Ritz solver for bound and autoionizing states of
two electrons in a quasi-one-dimensional Gaussian quantum dot, with
entanglement measures of the resulting (possibly non-Hermitian) states."""

__version__ = "0.1.0"

from ._accel import backend  # noqa: E402
from .basis import BasisSpec  # noqa: E402
from .hamiltonian import ModelParams  # noqa: E402

__all__ = ["__version__", "backend", "BasisSpec", "ModelParams"]
