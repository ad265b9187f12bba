"""Taint analysis for a small activity-based bytecode language: parser,
concrete semantics, abstract domains, Horn clause generation, a saturation
engine and an SMT-LIB backend."""

from .domains import ConstSet, TaintOnly, parse_domain
from .parser import ParseError, parse_program, pretty_print
from .taint import LEAK, NO_LEAK, UNKNOWN, SourceSinkDB, analyze, load_db, parse_db
from .wellformed import IllFormed, check_well_formed, ensure_well_formed

__version__ = "0.1.0"

__all__ = ["ConstSet", "TaintOnly", "parse_domain", "ParseError", "parse_program", "pretty_print",
           "LEAK", "NO_LEAK", "UNKNOWN", "SourceSinkDB", "analyze", "load_db", "parse_db",
           "IllFormed", "check_well_formed", "ensure_well_formed"]
