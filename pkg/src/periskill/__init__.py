"""periskill: periodic manipulation skills from single demonstrations.

Rhythmic movement primitives fitted from waypoints or demos, a Gaussian
process surrogate with UCB acquisition, play-data warm starts, simulated
periodic manipulation tasks, keypoint-based scoring, and an experiment
harness with baselines.
"""

__version__ = "0.1.0"
