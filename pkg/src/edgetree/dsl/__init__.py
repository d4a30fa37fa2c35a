from . import ast
from .checker import (
    Blocked,
    Diagnostic,
    EvaluationError,
    NodeContext,
    Ready,
    check_source,
    evaluate_condition,
    evaluate_gate,
    logger_value,
    validate_program,
)
from .parser import DslError, parse_program
from .printer import format_expr, format_program

__all__ = [
    "ast", "Blocked", "Diagnostic", "DslError", "EvaluationError", "NodeContext", "Ready",
    "check_source", "evaluate_condition", "evaluate_gate", "format_expr", "format_program",
    "logger_value", "parse_program", "validate_program",
]
