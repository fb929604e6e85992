"""Desk-scale mirror-test simulator.

A synthetic robot face is rendered as a function of head pose; a generative
appearance model learns to predict it; a novel mark on the face shows up as
variance-weighted prediction error; the detected mark centroid drives a
learned reach posture.
"""

__version__ = "0.1.0"
