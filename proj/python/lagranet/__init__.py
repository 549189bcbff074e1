"""Linearized method of multipliers for network consensus and economic dispatch."""

from ._core import (  # noqa: F401
    AlgoParams,
    DispatchProblem,
    GeneratorCost,
    LagranetError,
    LocalProblem,
    Network,
    OracleSolution,
    Scenario,
    SpectralData,
    build_network,
    certify_kkt,
    gen_ieee118,
    load_scenario,
    parse_network_json,
    parse_scenario,
    prox_step,
    run_consensus,
    run_dispatch,
    run_scenario,
    solve_consensus,
    solve_dispatch_bisection,
    spectral,
    suggest_eta,
    validate_params,
)

__version__ = "0.1.0"
