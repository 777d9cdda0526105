from .graph import Graph, GradReport, backward, forward, gradient_check
from .params import load_params, save_params

__all__ = [
    "Graph",
    "GradReport",
    "forward",
    "backward",
    "gradient_check",
    "save_params",
    "load_params",
]
