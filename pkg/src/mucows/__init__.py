"""muCOWS interpreter and state-space explorer."""
from .assertions import Assertion, Filter, Report, check, parse_assertions
from .ast import alpha_equal, apply_substitution, canonicalize, free_identifiers
from .explorer import Lts, Stepper, Trace, explore, random_run
from .parser import ParseError, SourceUnit, parse, pretty
from .scenario import ScenarioSpec, generate, reference_assertions
from .semantics import State, enabled, match, step

__all__ = [
    "Assertion", "Filter", "Lts", "ParseError", "Report", "ScenarioSpec", "SourceUnit", "State", "Stepper",
    "Trace", "alpha_equal", "apply_substitution", "canonicalize", "check", "enabled", "explore",
    "free_identifiers", "generate", "match", "parse", "parse_assertions", "pretty", "random_run",
    "reference_assertions", "step",
]
