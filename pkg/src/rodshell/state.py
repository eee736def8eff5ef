"""Kinematic snapshot passed between time steps."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .frames import FrameSet


@dataclass(frozen=True)
class RobotState:
    """Full kinematic state: DOF vector q, velocity u, acceleration a,
    the committed reference frames and the simulation time."""

    q: np.ndarray
    u: np.ndarray
    a: np.ndarray
    frames: FrameSet
    t: float

    def with_(self, **kw) -> "RobotState":
        return replace(self, **kw)
