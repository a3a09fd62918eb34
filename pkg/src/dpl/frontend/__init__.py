"""Concrete syntax: parsing, printing and the command-line driver."""

from dpl.frontend.lexer import ParseError
from dpl.frontend.parser import SourceFile, parse, parse_bool, parse_file, parse_term, parse_type
from dpl.frontend.printer import format_number, print_bool, print_term, print_trace, print_type

__all__ = [
    "ParseError",
    "SourceFile",
    "parse",
    "parse_bool",
    "parse_file",
    "parse_term",
    "parse_type",
    "print_term",
    "print_trace",
    "print_type",
    "print_bool",
    "format_number",
]
