"""Resilient multi-agent bandit simulator with temporal-epistemic
monitoring: formula evaluation over Kripke traces, recovery/durability
metrics with a bounded-horizon monitor, change sensing with evidence
ledgers, gossip networking, five learning modes, and an experiment
harness."""

from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
