"""Adapters between external optical-flow models and the benchmark harness.

An adapter reads a harness cell (``frames/frame_*.png`` plus manifest),
reshapes the frames to a model's required input size and frame count, runs
the model, rescales the predicted flow back to the native resolution, and
writes the harness flow wire format.  The harness and the adapters share no
code, only the documented file layout and flow format.
"""

__version__ = "0.1.0"

from flowadapters.adapt import AdapterError, WeightsNotFoundError, adapt, register_runner, shape_frames
from flowadapters.profiles import MODEL_PROFILES, ModelProfile

__all__ = [
    "ModelProfile",
    "MODEL_PROFILES",
    "adapt",
    "shape_frames",
    "register_runner",
    "AdapterError",
    "WeightsNotFoundError",
]
