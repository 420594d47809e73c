"""Case schema, parser, static loads, line models and network admittance."""

from .case import (LONG_LINE_KM, Branch, Bus, BusKind, GeneratingUnit, LineModel,
                   LoadModel, PowerSystemCase, SystemBase, line_model_for, parse_case,
                   parse_case_text)
from .network import (PiSection, branch_from_physical, branch_pi, branch_to_physical,
                      build_ybus, effective_impedance, load_power, long_line_to_pi, z_base)

__all__ = [
    "LONG_LINE_KM", "Branch", "Bus", "BusKind", "GeneratingUnit", "LineModel", "LoadModel",
    "PowerSystemCase", "SystemBase", "line_model_for", "parse_case", "parse_case_text",
    "PiSection", "branch_from_physical", "branch_pi", "branch_to_physical", "build_ybus",
    "effective_impedance", "load_power", "long_line_to_pi", "z_base",
]
