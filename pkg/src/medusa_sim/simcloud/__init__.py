"""Discrete-event multi-cloud simulator: clock, message queue, clouds, faults."""
from .cloud import BackgroundLoad, CloudProfile, SimCloud, simulate_processing
from .engine import EventLoop, Trace, event_seed
from .faults import FaultInjection, FaultInjector, FaultKind, FaultModelViolation, check_fault_model
from .mq import MessageQueue, enqueue_message
from .system import Simulation

__all__ = [
    "BackgroundLoad", "CloudProfile", "SimCloud", "simulate_processing",
    "EventLoop", "Trace", "event_seed",
    "FaultInjection", "FaultInjector", "FaultKind", "FaultModelViolation", "check_fault_model",
    "MessageQueue", "enqueue_message", "Simulation",
]
