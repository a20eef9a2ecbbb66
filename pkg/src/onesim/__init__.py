"""Event-driven multi-agent social simulator.

Scenarios are declarative behavior graphs executed by an asynchronous event
bus, with agent decisions routed through pluggable backends (deterministic
rules or a remote chat-completions model). Runs scale from a single process
to local master/worker deployments over a length-prefixed wire protocol.
"""
__version__ = "0.1.0"
