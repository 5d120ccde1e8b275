"""Simulators and statistics for counting weighted ground states of classical spin Hamiltonians."""

__version__ = "0.1.0"
