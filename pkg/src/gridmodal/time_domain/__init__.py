"""Stiff time-domain simulation with an event schedule."""

from .simulation import (EVENT_GRAMMAR, Event, SimOptions, StepAbsolute, StepRelative, TimeSeries,
                         apply_event, parse_event, simulate, speed_envelope)
from .trbdf2 import IterationMatrix, trbdf2_step

__all__ = ["EVENT_GRAMMAR", "Event", "parse_event", "SimOptions", "StepAbsolute", "StepRelative", "TimeSeries",
           "apply_event", "simulate", "speed_envelope", "IterationMatrix", "trbdf2_step"]
