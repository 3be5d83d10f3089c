# chirow/__init__.py
__version__ = "0.1.0"

from .errors import (
    ChirowError,
    ConfigValidationError,
    InvalidParameterError,
    NumericalFailureError,
)
from .model.params import PhysicalParams, TightBindingParams, derive_tight_binding, derived_losses
from .model.lattice import Supermode, EdgeFlag, finite_hamiltonian, diagonalize, band_structure
from .transport.scattering import transmission_spectrum, chain_transfer, port_transmissions
from .device.circulator import circulator_report, bandwidth, find_windows, tunneling_report
from .io.preset_manager import PresetManager

__all__ = [
    '__version__',
    'ChirowError',
    'ConfigValidationError',
    'InvalidParameterError',
    'NumericalFailureError',
    'PhysicalParams',
    'TightBindingParams',
    'derive_tight_binding',
    'derived_losses',
    'Supermode',
    'EdgeFlag',
    'finite_hamiltonian',
    'diagonalize',
    'band_structure',
    'transmission_spectrum',
    'chain_transfer',
    'port_transmissions',
    'circulator_report',
    'bandwidth',
    'find_windows',
    'tunneling_report',
    'PresetManager',
]
