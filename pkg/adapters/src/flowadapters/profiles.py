"""Published model input profiles.

``input_size`` is (width, height) as published; ``input_size=None`` means the
model consumes frames at their native resolution (used by the identity
adapter).  ``weights_file`` names the artifact expected under the weights
directory; models without one need no local weights.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelProfile:
    name: str
    input_size: tuple[int, int] | None  # (width, height)
    input_frames: int
    flow_scale: float = 1.0  # native flow units per pixel of model input
    weights_file: str | None = None

    def __post_init__(self):
        if self.input_frames < 2:
            raise ValueError(f"input_frames must be >= 2, got {self.input_frames}")
        if self.input_size is not None and (self.input_size[0] <= 0 or self.input_size[1] <= 0):
            raise ValueError(f"input_size must be positive, got {self.input_size}")


MODEL_PROFILES = {
    p.name: p
    for p in (
        ModelProfile("identity", None, 2),
        ModelProfile("pwcnet", (1024, 436), 2, weights_file="pwcnet.pth"),
        ModelProfile("lfn2", (1024, 436), 2, weights_file="lfn2.pth"),
        ModelProfile("raft", (520, 960), 2, weights_file="raft.pth"),
        ModelProfile("ccmr", (512, 512), 2, weights_file="ccmr.pth"),
        ModelProfile("flowdiffuser", (512, 512), 2, weights_file="flowdiffuser.pth"),
        ModelProfile("ffv1mt", (768, 768), 5),
        ModelProfile("dorsalnet", (768, 768), 6, weights_file="dorsalnet.pth"),
        ModelProfile("meattention", (768, 768), 11, weights_file="meattention.pth"),
        ModelProfile("dual", (768, 768), 15, weights_file="dual.pth"),
    )
}
