"""Deterministic simulator for randomized multi-robot dispersion on
port-labeled graphs, with trace checkers for the protocol's structural
guarantees."""

from .engine import (
    Outcome,
    ParsedTrace,
    RunSummary,
    SimulationConfig,
    SimulationResult,
    TraceLevel,
    parse_trace,
    run,
)
from .graph import (
    PortLabeledGraph,
    build,
    gen_complete,
    gen_path,
    gen_random_connected,
    gen_ring,
    gen_worstcase,
    parse_graph,
    write_graph,
)
from .checkers import CHECKER_NAMES, Verdict, oracle_dfs, run_all

__version__ = "0.1.0"

__all__ = [
    "CHECKER_NAMES",
    "Outcome",
    "ParsedTrace",
    "PortLabeledGraph",
    "RunSummary",
    "SimulationConfig",
    "SimulationResult",
    "TraceLevel",
    "Verdict",
    "build",
    "gen_complete",
    "gen_path",
    "gen_random_connected",
    "gen_ring",
    "gen_worstcase",
    "oracle_dfs",
    "parse_graph",
    "parse_trace",
    "run",
    "run_all",
    "write_graph",
    "__version__",
]
