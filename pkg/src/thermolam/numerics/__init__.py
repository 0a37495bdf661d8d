"""Extended-precision dense linear algebra for small complex matrices."""

from .charpoly import CharPoly8, faddeev_leverrier, palindromic_reduce, solve_quartic, z_to_lambda
from .cmatrix import CMatrix, CScalar, to_acb
from .eigen import EigenSolution, eigen8
from .expm import eigenpairs, expm, mat_exp_eig, mat_exp_series
from .precision import LEVELS, PrecisionPolicy, level_bits, working_precision

__all__ = [
    "CMatrix",
    "CScalar",
    "to_acb",
    "CharPoly8",
    "faddeev_leverrier",
    "palindromic_reduce",
    "solve_quartic",
    "z_to_lambda",
    "EigenSolution",
    "eigen8",
    "eigenpairs",
    "expm",
    "mat_exp_eig",
    "mat_exp_series",
    "LEVELS",
    "PrecisionPolicy",
    "level_bits",
    "working_precision",
]
