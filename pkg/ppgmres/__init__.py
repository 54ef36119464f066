"""
ppgmres - Polynomial preconditioned GMRES and Arnoldi for indefinite problems
"""

__version__ = "0.1.0"
__author__ = "Invictus"

REPORT_SCHEMA = 1
