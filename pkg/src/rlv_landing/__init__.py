"""Dual-optimization landing guidance for reusable launch vehicles.

Fuel-optimal SCP trajectory planning with coast-phase ignition timing, a
receding-horizon SCP tracking law, an embedded primal-dual conic solver,
and a 6-DOF simulation plus Monte-Carlo harness that validates the closed
guidance loop.
"""

__version__ = "0.1.0"
