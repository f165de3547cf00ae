"""Interdependent privacy loss in third-party cloud app ecosystems.

Builds collaboration networks, replays app adoption under user decision
models and tracks Vendors File Coverage (VFC) metrics.
"""

__version__ = "0.1.0"
