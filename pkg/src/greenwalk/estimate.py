from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Estimate:
    """A value with its standard error and provenance.

    ``method`` is one of ``"exact"``, ``"closed_form"``, ``"lattice_dp"``,
    ``"fourier_integral"``, ``"series"``, ``"monte_carlo"`` or
    ``"extrapolated"``.  ``bias_note`` flags known one-sided bias.
    """

    value: float
    stderr: float = 0.0
    n_samples: int = 1
    method: str = "exact"
    bias_note: str | None = None

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError(f"stderr must be nonnegative, got {self.stderr}")
        if self.method == "monte_carlo" and self.n_samples < 1:
            raise ValueError("Monte Carlo estimates need at least one sample")

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return asdict(self)


def combined_sigma(*sigmas: float) -> float:
    return math.sqrt(math.fsum(s * s for s in sigmas))
