"""Termination checking for higher-order rewriting with sized types in the successor algebra."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .parser import ParseError, load_system, parse_constraints, parse_system, parse_term, print_system
from .solver import Unsat, mgs, satisfiable
from .termination import check_rule, check_system

__version__ = "0.1.0"


def corpus_path(name: str = "") -> Path:
    """Location of the bundled example files."""
    root = Path(str(resources.files(__package__) / "corpus"))
    return root / name if name else root


__all__ = [
    "ParseError",
    "Unsat",
    "check_rule",
    "check_system",
    "corpus_path",
    "load_system",
    "mgs",
    "parse_constraints",
    "parse_system",
    "parse_term",
    "print_system",
    "satisfiable",
]
