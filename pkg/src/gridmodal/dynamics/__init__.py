"""Machine, controller and DAE assembly models."""

from .controls import (exciter_derivatives, gas_derivatives, hydro_derivatives,
                       pss_derivatives, smooth_clamp)
from .machine import (MachineState, electrical_torque, flux_coefficients,
                      machine_derivatives, stator_algebraic)
from .params import (ExciterST1A, GasGovernor, HydroGovernor, MachineParams, NoExciter,
                     NoGovernor, PssMB)

__all__ = [
    "DynamicSystem", "assemble", "init_dynamics", "exciter_derivatives", "gas_derivatives",
    "hydro_derivatives", "pss_derivatives", "smooth_clamp", "MachineState",
    "electrical_torque", "flux_coefficients", "machine_derivatives", "stator_algebraic",
    "ExciterST1A", "GasGovernor", "HydroGovernor", "MachineParams", "NoExciter",
    "NoGovernor", "PssMB",
]


def __getattr__(name):
    # assembly depends on power_flow, which depends on system_model, which
    # imports the parameter blocks from here; resolve it lazily
    if name in ("DynamicSystem", "assemble", "init_dynamics"):
        from . import assembly
        return getattr(assembly, name)
    raise AttributeError(name)
