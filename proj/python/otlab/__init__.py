"""Semi-discrete optimal transport and isolated singularity lab."""

from ._core import (
    Cost,
    OtlabError,
    Report,
    Scenario,
    Verdict,
    load_scenario,
    parse_scenario,
    run,
    solve,
    verify_cost,
)

__all__ = [
    "Cost",
    "OtlabError",
    "Report",
    "Scenario",
    "Verdict",
    "load_scenario",
    "parse_scenario",
    "run",
    "solve",
    "verify_cost",
]
