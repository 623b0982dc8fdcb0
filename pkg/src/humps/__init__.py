"""Positive solutions of u'' + c u' + (lambda a+ - mu a-) g(u) = 0 with indefinite weight."""

from .bvp import AtlasEntry, SymbolCode, Windows, build_atlas, solve_code, subharmonic_solve
from .integrate import Params, integrate_ivp
from .nonlinearity import make_nonlinearity
from .weight import Weight, sine_weight, stepwise_weight

__all__ = [
    "AtlasEntry",
    "Params",
    "SymbolCode",
    "Weight",
    "Windows",
    "build_atlas",
    "integrate_ivp",
    "make_nonlinearity",
    "sine_weight",
    "solve_code",
    "stepwise_weight",
    "subharmonic_solve",
]
