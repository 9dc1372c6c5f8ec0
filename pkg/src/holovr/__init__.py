"""Latency-minimizing simulator for RHS-assisted THz multi-user VR delivery.

Subpackages cover the downlink physics (channel, surface), the VR service
economics (latency), the offloading solvers (homo, hetero), the projected
gradient beamformer (beamformer), and the scenario harness (scenario,
harness, cli).
"""

__version__ = "0.1.0"
