"""qamsy models."""

from . import capacity, channel, config, dynamics, hilbert, patterns, states, systems
from .channel import KrausChannel
from .hilbert import SpaceLayout
from .patterns import PatternSet
from .states import DensityOperator, Povm
