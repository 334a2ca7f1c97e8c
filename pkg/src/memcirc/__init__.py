"""Circuit-level models of discharge lamps, memristive elements and power-law
resistor networks, with periodic-waveform tools and a batch CLI."""

from .errors import (ChatteringError, ConvergenceError, CurrentPauseError, InvalidArgument,
                     InvalidNetwork, MemcircError, NoAsymptoteError, ResonanceError,
                     SimulationAborted)
from .fields import CylindricalConductor, poynting_inflow
from .lamp import (HardlimiterLamp, HysteresisLamp, RationalAdmittance, SeriesBallast, SolverOptions,
                   SourceSpec, affine_check, asymptotic_inductance, simulate_lamp_circuit,
                   zerocrossing_sweep)
from .memristive import (ChargeControlledModel, FluxControlledModel, GenericMemristiveSystem,
                         pinched_loop_check, simulate_current_driven, simulate_voltage_driven)
from .powerlaw import (EyeElement, OnePortNetwork, PowerLawElement, approximate_superposition,
                       effective_coefficient, eye_v, fractal_expand, return_point, solve_dc)
from .signals import (PeriodicWaveform, find_zerocrossings, loop_metrics, signed_loop_area,
                      synth_square)
from .switched import (LevelCrossing, NoSwitching, Schedule, SwitchedLinearSystem, classify_system,
                       simulate_switched)

__version__ = "0.1.0"
