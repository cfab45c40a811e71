"""Deterministic multi-UAV swarm simulator.

CVT formation guidance, spring-damper inter-vehicle collision avoidance and
FOV-gated planar / 3D obstacle avoidance on double-integrator agents.
"""

__version__ = "0.1.0"
