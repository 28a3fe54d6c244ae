"""Model parameter container."""

import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import ValidationError


@dataclass(frozen=True)
class ModelParams:
    """Inputs of the coupled dual-Fano photoassociation model.

    Linewidths and detunings are in MHz (E/h), fields in gauss, the
    temperature in microkelvin, the background rate in cm^3/s and the
    reference PA intensity in W/cm^2.  ``detuning_1``/``detuning_2`` are
    effective detunings with the static PA light shift folded in.
    """

    gamma_f: float
    gamma_1: float
    gamma_2: float
    q_1: float
    q_2: float
    detuning_1: float
    detuning_2: float
    b0: float
    dmu: float
    temperature: float
    gamma_sp_1: float = 17.0
    gamma_sp_2: float = 17.0
    k_bg: float = 0.0
    intensity_ref: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f.name, f"expected a number, got {value!r}")
            if not math.isfinite(value):
                raise ValidationError(f.name, f"must be finite, got {value}")
            # normalise ints so that hashing/serialisation are stable
            object.__setattr__(self, f.name, float(value))
        if self.gamma_f <= 0:
            raise ValidationError("gamma_f", "must be > 0")
        for name in ("gamma_1", "gamma_2"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "must be >= 0")
        for name in ("gamma_sp_1", "gamma_sp_2", "temperature", "intensity_ref"):
            if getattr(self, name) <= 0:
                raise ValidationError(name, "must be > 0")
        if self.k_bg < 0:
            raise ValidationError("k_bg", "must be >= 0")
        if self.dmu == 0:
            raise ValidationError("dmu", "must be nonzero (degenerate field mapping)")

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            name = sorted(unknown)[0]
            raise ValidationError(name, "unknown model parameter")
        return cls(**data)

    def linewidth(self, n):
        return self.gamma_1 if n == 1 else self.gamma_2

    def spontaneous(self, n):
        return self.gamma_sp_1 if n == 1 else self.gamma_sp_2

    def q(self, n):
        return self.q_1 if n == 1 else self.q_2

    def detuning(self, n):
        return self.detuning_1 if n == 1 else self.detuning_2
