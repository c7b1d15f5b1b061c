"""Time-optimal bang-bang control solved through commutator-series propagation.

Modules: ``expr`` (symbolic core), ``opalg`` (operator algebra), ``lieprop``
(truncated series), ``pmp`` (Pontryagin reduction and hit times), ``iom``
(integrals of motion and error windows), ``oracle`` (reference integrator),
``problems`` (problem files) and ``cli``.
"""
from .expr import Equality, Expr, equal_canonical, evaluate, parse, to_text
from .lieprop import LieSeries, VectorField, series
from .pmp import ControlProblem, bang_branches

__version__ = "0.1.0"

__all__ = [
    "ControlProblem",
    "Equality",
    "Expr",
    "LieSeries",
    "VectorField",
    "bang_branches",
    "equal_canonical",
    "evaluate",
    "parse",
    "series",
    "to_text",
]
