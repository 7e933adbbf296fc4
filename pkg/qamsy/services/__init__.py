"""qamsy services."""

from . import builder, capacity, experiments, hilbert, lindblad, presets, quantum, seeding, trajectories
