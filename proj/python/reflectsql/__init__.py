"""Reflection triggers for collaborative SQL optimization sessions.

Thin wrapper over the C++ core: classify SQL submissions, run the full
trigger/generation/scheduling pipeline per session, and replay event logs
for firing-interval analysis.
"""

from ._reflectsql import (
    Engine,
    Error,
    classify,
    interval_histogram,
    replay_log,
    synthetic_log,
)

__all__ = [
    "Engine",
    "Error",
    "classify",
    "interval_histogram",
    "replay_log",
    "synthetic_log",
]
