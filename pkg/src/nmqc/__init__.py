"""Simulation and verification of non-adaptive measurement-based quantum
computation (NMQC) games on GHZ states."""

from .boolfn import BooleanFunction, closest_affine, is_bent, make_hk, named, nonlinearity, walsh_spectrum
from .game import NmqcGame, bell_coefficients, check_deterministic, classical_bound, ghz_value, standard_game
from .mitigation import GlobalReadoutMitigator, LocalReadoutMitigator, project_simplex
from .sim import CountsTable, NoiseModel, ghz_circuit, prepare_ghz
from .topology import CouplingGraph, enumerate_configs, load_graph, select_root

__version__ = "0.1.0"
