"""Simulation of quantum-optics primitives for robot networking.

Single photons and polarization optics, Mach-Zehnder interference, SPDC pair
sources with coincidence counting, BB84 key distribution with an optional
intercept-resend eavesdropper, and a robot world whose commands are keyed by
the distributed bits.
"""
from .errors import QRoboNetError
from .interferometer import MachZehnderConfig, OutcomeCounts, OutcomeDistribution, detection_probability, simulate_stream
from .kernels import BACKEND
from .photonics import Photon, PolarizationState, Port, ProbabilityAmplitude, compose_probability, malus_probability
from .qkd import Basis, QkdSessionReport, SessionConfig, run_session
from .rng import RandomStream
from .robotnet import Agent, Halt, MoveConstantVelocity, Task, World, combined_scenario
from .spdc import (
    CoincidenceWindow, DetectionEvent, DetectorSpec, EntangledPair, PumpSource, detect_pairs, find_coincidences,
    generate_pairs,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Agent", "Basis", "CoincidenceWindow", "DetectionEvent", "DetectorSpec", "EntangledPair", "Halt",
    "MachZehnderConfig", "MoveConstantVelocity", "OutcomeCounts", "OutcomeDistribution", "Photon",
    "PolarizationState", "Port", "ProbabilityAmplitude", "PumpSource", "QRoboNetError", "QkdSessionReport",
    "RandomStream", "SessionConfig", "Task", "World", "combined_scenario", "compose_probability", "detect_pairs",
    "detection_probability", "find_coincidences", "generate_pairs", "malus_probability", "run_session",
    "simulate_stream",
]
