"""Acquisition performance toolkit: closed-form detection and false-alarm
probabilities for threshold-based serial search over a code-phase/Doppler
grid, an exact enumeration oracle, and Monte Carlo simulators at metric and
waveform fidelity."""

__version__ = "0.1.0"
