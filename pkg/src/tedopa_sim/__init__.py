"""Chain-mapped open-system dynamics on a qubit register.

A bosonic bath described by a spectral density is mapped onto a
nearest-neighbour oscillator chain, encoded as Pauli sums, Trotterized into a
circuit and simulated on a dense statevector next to an exact propagator.
"""

__version__ = "0.1.0"

from tedopa_sim.errors import (
    ConfigError,
    InvalidInputError,
    NumericalError,
    UnsupportedSizeError,
)

__all__ = [
    "ConfigError",
    "InvalidInputError",
    "NumericalError",
    "UnsupportedSizeError",
    "__version__",
]
