"""
End-to-end drivers: PP(d)-GMRES(m) for linear systems and polynomial
preconditioned Arnoldi for interior eigenvalues.
"""

from .eigen import pp_arnoldi_interior
from .models import EigenConfig, EigenPair, EigenResult, ExperimentConfig, PPGmresConfig
from .solver import PreparedPolynomial, pp_gmres, prepare_polynomial

__all__ = [
    'EigenConfig',
    'EigenPair',
    'EigenResult',
    'ExperimentConfig',
    'PPGmresConfig',
    'PreparedPolynomial',
    'pp_arnoldi_interior',
    'pp_gmres',
    'prepare_polynomial',
]
