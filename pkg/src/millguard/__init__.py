"""Telemetry anomaly detection and risk attribution for a machining center.

The package ingests 1 Hz multichannel telemetry (temperature, three-phase
current, triaxial acceleration, process context), evaluates ten expert rule
criteria over sliding windows, derives labeled datasets, trains tree-ensemble
classifiers from scratch, attributes firings to plant risks through a
criteria-to-risk matrix, and ships a plant simulator plus an HTTP service
and CLI around the whole pipeline.
"""

__version__ = "0.1.0"
