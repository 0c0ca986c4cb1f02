"""Result container shared by the experiment drivers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ErrorReport:
    """Per-step and aggregate errors of one run.

    ``stable`` is False when the run stopped on an instability, in which case
    ``diverged_step`` holds the failing step index and aggregates cover only
    the completed steps.
    """

    name: str
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    vel_err: list = field(default_factory=list)
    pres_err: list = field(default_factory=list)
    vel_spacetime: float = float("nan")
    pres_spacetime: float = float("nan")
    stable: bool = True
    diverged_step: int | None = None
    runtime: float = 0.0
    extra: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def as_rows(self):
        """(k, t, vel_err, pres_err) rows for errors.csv."""
        return [(int(k), float(t), float(v), float(p))
                for k, t, v, p in zip(self.steps, self.times, self.vel_err, self.pres_err)]

    def summary(self) -> dict:
        out = {"name": self.name, "vel_spacetime": self.vel_spacetime,
               "pres_spacetime": self.pres_spacetime, "stable": self.stable,
               "diverged_step": self.diverged_step, "runtime": self.runtime,
               "steps": len(self.steps)}
        out.update({k: v for k, v in self.extra.items() if np.isscalar(v)})
        return out
