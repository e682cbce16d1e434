"""Probabilistic logic programs under the stable-model distribution semantics."""

from .errors import (
    GraphError,
    GroundingError,
    GuardExceeded,
    ImpossibleEvidenceError,
    InconsistentProgramError,
    LearningError,
    ProgramSyntaxError,
    SmplpError,
    UnknownAtomError,
)
from .syntax import desugar, format_program, parse_program
from .ground import dependency_info, ground
from .circuit import check_ddnnf, compile_program, enumerate_models, model_count_map, wmc
from .infer import Engine, total_choice_prob

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "GraphError",
    "GroundingError",
    "GuardExceeded",
    "ImpossibleEvidenceError",
    "InconsistentProgramError",
    "LearningError",
    "ProgramSyntaxError",
    "SmplpError",
    "UnknownAtomError",
    "check_ddnnf",
    "compile_program",
    "dependency_info",
    "desugar",
    "enumerate_models",
    "format_program",
    "ground",
    "model_count_map",
    "parse_program",
    "total_choice_prob",
    "wmc",
]
