"""Classical cavity-mode entanglement toolkit.

A two-axis envelope field in a parabolic planar cavity carries a
non-factorizable superposition formally identical to a two-qubit entangled
state.  This package builds that state over Hermite-Gaussian mode products,
evolves it, evaluates Bell (CHSH) correlators three ways (exact mode
algebra, plane integrals on a grid, and least-squares fits to scattered
detector readings), and simulates parity-feedback collapse.
"""

from . import antenna, cavity, cli, field, fock, modes

__all__ = ["antenna", "cavity", "cli", "field", "fock", "modes"]
__version__ = "0.1.0"
