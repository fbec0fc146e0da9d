"""Faber and Bergman polynomials on piecewise-analytic curves, with an exact
engine for the two-arc lens and high-precision numerics for everything else."""

from .asymptotics import SequenceReport, extrapolate, lens_limit_check, limit_sweep
from .bergman import AlphaRow, OrthoBasis, alpha_decomposition, alpha_table, build_basis
from .exact import PiLinear, a_seq, b_seq, g_poly, i_diag_closed
from .faber import ExteriorMap, capacity, e_tail, faber
from .quadrature import BoundaryPath, QuadratureRule, area_moment, green_deriv_norm

__version__ = "0.1.0"
