"""Instruction-driven virtual try-on orchestration.

The package wires a function-calling chat front end, an embedding-based
garment matcher, and a mask-conditioned localized editor into one service.
All neural models sit behind pluggable backends: deterministic in-process
mocks for offline use, or HTTP clients against live model servers.
"""

__version__ = "0.1.0"
