from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class InterpretableInstance:
    """Interpretable units of one input and a way to rebuild the input from a mask.

    ``units`` is a list of ``(kind, ref)`` pairs; ``realize(z)`` takes a 0/1
    vector with one entry per unit and returns the perturbed model input.
    """

    units: list
    realize: object
    id: str | None = None
    handle: object = None

    def __post_init__(self):
        if not self.units:
            raise ValueError("an interpretable instance needs at least one unit")

    def __len__(self):
        return len(self.units)


@dataclass
class Attribution:
    weights: np.ndarray
    target_class: int
    method: str  # lime | ig
    intercept: float | None = None
    local_fidelity_r2: float | None = None
    completeness_residual: float | None = None
    units: list = field(default_factory=list)
    id: str | None = None
    f_x: float | None = None
    f_baseline: float | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.isfinite(self.weights).all():
            raise ValueError("attribution weights must be finite")
        if self.units and len(self.units) != len(self.weights):
            raise ValueError("one weight per unit required")

    def diagnostics(self) -> dict:
        keys = ("intercept", "local_fidelity_r2", "completeness_residual", "f_x", "f_baseline")
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}


def completeness_check(attribution, f_x: float, f_baseline: float, tol: float) -> bool:
    """True iff the weights sum to ``f_x - f_baseline`` within ``tol``."""
    weights = attribution.weights if isinstance(attribution, Attribution) else np.asarray(attribution)
    return bool(abs(float(np.sum(weights)) - (f_x - f_baseline)) <= tol)
