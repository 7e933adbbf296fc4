"""Concrete associative-memory systems."""

from . import damping, hopfield, resonator, walk
