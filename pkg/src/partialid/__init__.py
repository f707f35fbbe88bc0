"""Partial identification of causal effects: bounds on the ATE and the PNS."""

from .core import BinaryJoint, BoundFailure, Dataset, Interval, IvJoint, Query

__all__ = ["BinaryJoint", "BoundFailure", "Dataset", "Interval", "IvJoint", "Query"]
__version__ = "0.1.0"
