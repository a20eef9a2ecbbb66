"""Operator control: the HTTP command surface, stream fan-out, and
command-log replay."""
from .replay import replay_commands
from .service import COMMAND_KINDS, ControlService, ManagedRun, create_app
from .streams import CHANNELS, StreamHub

__all__ = [
    "CHANNELS",
    "COMMAND_KINDS",
    "ControlService",
    "ManagedRun",
    "StreamHub",
    "create_app",
    "replay_commands",
]
