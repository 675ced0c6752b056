"""Spin-torque dynamics of a levitated librator coupled to an NV ensemble."""

__version__ = "0.1.0"
