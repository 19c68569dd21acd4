"""Round-based simulator for region-based energy-balanced clustering (RBEBP) and LEACH."""

__version__ = "0.1.0"

from .engine import SimConfig, run_simulation, table1_preset  # noqa: E402
from .metrics import LifetimeSummary, RoundRecord, summarize  # noqa: E402

__all__ = ["SimConfig", "run_simulation", "table1_preset", "LifetimeSummary", "RoundRecord", "summarize"]
