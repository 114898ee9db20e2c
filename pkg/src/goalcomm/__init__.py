"""goalcomm: timing, value-of-information and goal-oriented communication simulator."""

__version__ = "0.1.0"
