"""Finite-scale coarse geometry: cone-offs, de-electrification, factor
systems, subgroup closure and hierarchical hyperbolicity checks."""
from ._config import get_threads, set_threads
from ._kernels import BACKEND
from .graph_core import MetricGraph, VPath, HypReport, distances, geodesic, geodesic_interval, \
    hyperbolicity, hausdorff

__version__ = "0.1.0"
