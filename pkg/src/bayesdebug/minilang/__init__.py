"""A small deterministic imperative language used as the repair testbed."""

from .ast import Program, SourceLocation
from .edits import StaleEditError, apply_edit
from .interp import Fault, Limits, Marker, Probe, ProbeSet, TraceEvent
from .lexer import MiniSyntaxError
from .parser import parse, parse_expr, parse_program, parse_stmt
from .render import render_expr, render_program
from .testing import (
    ManifestError,
    SuiteRun,
    TestCase,
    TestRun,
    coverage_matrix,
    load_manifest,
    parse_manifest,
    run_suite,
    run_test,
)
from .values import values_equal

__all__ = [
    "Fault",
    "Limits",
    "ManifestError",
    "Marker",
    "MiniSyntaxError",
    "Probe",
    "ProbeSet",
    "Program",
    "SourceLocation",
    "StaleEditError",
    "SuiteRun",
    "TestCase",
    "TestRun",
    "TraceEvent",
    "apply_edit",
    "coverage_matrix",
    "load_manifest",
    "parse",
    "parse_expr",
    "parse_manifest",
    "parse_program",
    "parse_stmt",
    "render_expr",
    "render_program",
    "run_suite",
    "run_test",
    "values_equal",
]
