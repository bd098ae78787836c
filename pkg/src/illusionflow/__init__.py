"""Benchmark harness for anomalous-motion illusions and optical-flow models.

Renders parametric illusion/control stimuli, simulates viewing conditions as
frame sequences, synthesizes human-percept target flow fields, and scores
predicted optical flow (built-in motion-energy estimator or external flow
files) for alignment with human perception.
"""

__version__ = "0.1.0"

from illusionflow.percept import FlowField, PerceptTarget, behavioral_target, target_flow
from illusionflow.stimgen import StimulusSpec, micropattern, render_control, render_related, render_snakes
from illusionflow.viewsim import (
    FrameSequence,
    ViewingCondition,
    make_onset,
    make_peripheral,
    make_random_slip,
    make_shift,
    make_static,
    make_veridical_rotation,
)

__all__ = [
    "FlowField",
    "PerceptTarget",
    "target_flow",
    "behavioral_target",
    "StimulusSpec",
    "micropattern",
    "render_snakes",
    "render_control",
    "render_related",
    "ViewingCondition",
    "FrameSequence",
    "make_static",
    "make_onset",
    "make_shift",
    "make_random_slip",
    "make_peripheral",
    "make_veridical_rotation",
]
