"""Composition and verification of services with context-dependent contracts.

Services are described in a small YAML spec format, composed with process
operators, flattened into sequential flows, translated into a network of
timed automata (exportable as UPPAAL files) and checked by a built-in
explicit-state model checker.
"""

from .checker import Compiled, Trace, Verdict, check_all, check_query, init_state, replay, successors
from .composition import CompositionResult, SeqOptions, compose, compose_along_flow, parse_composition_expr, seq_compose
from .flatten import Flow, FlowStep, flatten, flow_signature
from .model import ConfiguredService, ContextInfo
from .oracle import brute_force_oracle, oracle_verdicts
from .specfile import load_catalog, parse_service_spec, serialize_service
from .tagen import Network, Query, build_network, gen_queries
from .uppaal import export_model, export_queries, read_model, read_queries
from .validate import validate_service

__version__ = "0.1.0"

__all__ = [
    "Compiled",
    "CompositionResult",
    "ConfiguredService",
    "ContextInfo",
    "Flow",
    "FlowStep",
    "Network",
    "Query",
    "SeqOptions",
    "Trace",
    "Verdict",
    "brute_force_oracle",
    "build_network",
    "check_all",
    "check_query",
    "compose",
    "compose_along_flow",
    "export_model",
    "export_queries",
    "flatten",
    "flow_signature",
    "gen_queries",
    "init_state",
    "load_catalog",
    "oracle_verdicts",
    "parse_composition_expr",
    "parse_service_spec",
    "read_model",
    "read_queries",
    "replay",
    "seq_compose",
    "serialize_service",
    "successors",
    "validate_service",
]
