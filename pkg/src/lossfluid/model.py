from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError
from .intensity import IntensitySpec
from .lifetimes import LifetimeDist


@dataclass(frozen=True)
class ModelConfig:
    """One M_t/G/n/n problem instance.

    ``initial_service`` (the law of the remaining work of jobs present at
    time 0) defaults to ``service``. ``n`` is only needed for simulation;
    the fluid equations do not depend on it.
    """

    intensity: IntensitySpec
    service: LifetimeDist
    horizon: float
    r0: float = 0.0
    initial_service: Optional[LifetimeDist] = None
    n: Optional[int] = None

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        if not 0.0 <= self.r0 <= 1.0:
            raise DomainError(f"r0 must lie in [0, 1], got {self.r0}")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise DomainError(f"capacity n must be a positive integer, got {self.n}")
        if self.initial_service is None:
            object.__setattr__(self, "initial_service", self.service)
        if self.intensity.horizon < self.horizon:
            raise DomainError(
                f"intensity is only defined up to {self.intensity.horizon} < horizon {self.horizon}"
            )
        if self.intensity.horizon != self.horizon:
            object.__setattr__(self, "intensity", self.intensity.with_horizon(self.horizon))
        if self.n is not None:
            object.__setattr__(self, "n", int(self.n))

    @property
    def n_initial(self) -> int:
        """Number of jobs present at time 0, round(r0 * n) with halves rounded up."""
        if self.n is None:
            raise DomainError("capacity n is not set")
        return min(int(math.floor(self.r0 * self.n + 0.5)), self.n)

    def with_capacity(self, n: int) -> "ModelConfig":
        return dataclasses.replace(self, n=n)

    def fluid_part(self) -> "ModelConfig":
        """The same instance with the capacity stripped."""
        return dataclasses.replace(self, n=None)
