"""Simulator and verification harness for the kindness interacting-particle system."""
from .dynamics import Params, State, StopRule, init_constant, init_uniform, run, step
from .graph import Graph, GraphSpec, generate, parse_edge_list
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Graph",
    "GraphSpec",
    "Params",
    "State",
    "StopRule",
    "generate",
    "init_constant",
    "init_uniform",
    "parse_edge_list",
    "run",
    "step",
]
