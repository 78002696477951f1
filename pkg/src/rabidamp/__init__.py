"""Driving-dependent damping of Rabi oscillations in a dephasing two-level system."""
