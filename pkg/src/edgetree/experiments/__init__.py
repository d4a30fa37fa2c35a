from .common import ScenarioError, ScenarioResult, cdf_points, emit_results, summarize
from .failover import audit_loggers, run_failover_scenario
from .parking import run_parking_scenario
from .push import run_parallel_push
from .selective import run_selective_logging
from .turnaround import SCENARIOS as TURNAROUND_SCENARIOS
from .turnaround import run_turnaround

EXPERIMENTS = ("turnaround", "push", "selective", "failover", "parking")


def run_experiment(name: str, config: dict | None = None) -> list[ScenarioResult]:
    """Run a named experiment; multi-part experiments return several results."""
    cfg = dict(config or {})
    if name == "turnaround":
        wanted = cfg.pop("scenarios", list(TURNAROUND_SCENARIOS))
        return [run_turnaround(s, cfg) for s in wanted]
    if name == "push":
        counts = cfg.pop("fog_counts", [cfg.pop("fogs", 2)])
        return [run_parallel_push(dict(cfg, fogs=k)) for k in counts]
    if name == "selective":
        return list(run_selective_logging(cfg))
    if name == "failover":
        return [run_failover_scenario(cfg)]
    if name == "parking":
        return [run_parking_scenario(cfg)]
    raise ScenarioError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")


__all__ = [
    "EXPERIMENTS", "ScenarioError", "ScenarioResult", "TURNAROUND_SCENARIOS", "audit_loggers",
    "cdf_points", "emit_results", "run_experiment", "run_failover_scenario",
    "run_parallel_push", "run_parking_scenario", "run_selective_logging", "run_turnaround",
    "summarize",
]
