"""Distributed simulation-training host for ab-initio ATC courses.

Deterministic radar simulation, scenario authoring and validation,
session/rotation planning, a versioned wire protocol with picture
mirroring and remote-control grants, an authoritative exercise host with
event-sourced recording and replay, and operator command-line tools.
"""

__version__ = "0.1.0"
