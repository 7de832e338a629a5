from .expression import CompositionSyntaxError, UnknownService, parse_composition_expr
from .options import RunOptions, load_options, parse_options
from .semantics import CompositionError, CompositionResult, SeqOptions, compose, compose_along_flow, seq_compose

__all__ = [
    "CompositionError",
    "CompositionResult",
    "CompositionSyntaxError",
    "RunOptions",
    "SeqOptions",
    "UnknownService",
    "compose",
    "compose_along_flow",
    "load_options",
    "parse_composition_expr",
    "parse_options",
    "seq_compose",
]
