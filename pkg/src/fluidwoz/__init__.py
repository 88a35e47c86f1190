"""fluidwoz: a Wizard-of-Oz teleoperation platform built around four
testable properties: preemptible goal control, pollable progress, measured
latency, and deterministic time-accurate replay."""

__version__ = "0.1.0"
