"""Two-body loss dynamics dn/dt = -K n^2 and recovery of K from decay traces."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NegativeRate, ValidationError


@dataclass(frozen=True)
class DecayTrace:
    """Density samples n(t) in cm^-3 at times t in s (starting at 0)."""

    times: np.ndarray
    densities: np.ndarray
    n0: float

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        n = np.array(self.densities, dtype=float).ravel()
        if t.shape != n.shape:
            raise ValidationError("densities", f"length {n.size} != times length {t.size}")
        if t.size == 0:
            raise ValidationError("times", "empty trace")
        if t[0] != 0.0:
            raise ValidationError("times", "must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times", "must be strictly increasing")
        if not np.all(np.isfinite(n)) or np.any(n <= 0):
            raise ValidationError("densities", "must be finite and > 0")
        if not self.n0 > 0:
            raise ValidationError("n0", "must be > 0")
        t.flags.writeable = False
        n.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "densities", n)
        object.__setattr__(self, "n0", float(self.n0))

    def __len__(self):
        return self.times.size


def _check_inputs(n0, times):
    if not n0 > 0:
        raise ValidationError("n0", "must be > 0")
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0 or times[0] != 0.0:
        raise ValidationError("times", "must be non-empty and start at 0")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("times", "must be strictly increasing")
    return times


def integrate_decay(n0, k_av, times):
    """Exact solution n(t) = n0 / (1 + K n0 t) for constant K (cm^3/s)."""
    times = _check_inputs(n0, times)
    if not k_av >= 0:
        raise ValidationError("k_av", "must be >= 0")
    return DecayTrace(times, n0 / (1.0 + k_av * n0 * times), n0)


def integrate_decay_rk4(n0, k_of_t, times, steps=1000):
    """Classical RK4 for dn/dt = -K(t) n^2 with a time-dependent rate.

    About ``steps`` steps span [0, times[-1]].  They are spaced evenly in
    s = log(1 + K(0) n0 t), which keeps h K n roughly constant while
    the density falls; every sample time is hit exactly.
    """
    times = _check_inputs(n0, times)
    if steps < 1:
        raise ValidationError("steps", "must be >= 1")
    if not callable(k_of_t):
        k = float(k_of_t)
        k_of_t = lambda t: k  # noqa: E731

    def rhs(t, n):
        return -k_of_t(t) * n * n

    rate = float(k_of_t(0.0)) * n0
    if rate > 0:
        stretch, unstretch = (lambda t: np.log1p(rate * t)), (lambda s: np.expm1(s) / rate)
    else:
        stretch = unstretch = (lambda t: t)
    s_end = stretch(times[-1])
    out = np.empty(times.size)
    out[0] = n = float(n0)
    for i in range(1, times.size):
        s0, s1 = stretch(times[i - 1]), stretch(times[i])
        m = max(1, int(np.ceil(steps * (s1 - s0) / s_end - 1e-9)))
        nodes = unstretch(np.linspace(s0, s1, m + 1))
        nodes[0], nodes[-1] = times[i - 1], times[i]
        for t, t_next in zip(nodes[:-1], nodes[1:]):
            h = t_next - t
            k1 = rhs(t, n)
            k2 = rhs(t + 0.5 * h, n + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, n + 0.5 * h * k2)
            k4 = rhs(t_next, n + h * k3)
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i] = n
    return DecayTrace(times, out, n0)


def extract_k(trace):
    """Fit 1/n = 1/n0 + K t; returns (K, standard error) in cm^3/s.

    Raises
    ------
    NegativeRate
        If the slope is negative by more than two standard errors.
    """
    if len(trace) < 3:
        raise ValidationError("trace", "need at least 3 points")
    reg = stats.linregress(trace.times, 1.0 / trace.densities)
    k, sigma = float(reg.slope), float(reg.stderr)
    if k < -2.0 * sigma:
        raise NegativeRate(f"fitted K = {k:g} +- {sigma:g} cm^3/s is negative")
    return k, sigma


def synthesize_trace(n0, k_av, times, noise_rel, seed):
    """Exact decay with i.i.d. multiplicative Gaussian scatter of rms ``noise_rel``."""
    if not noise_rel >= 0:
        raise ValidationError("noise_rel", "must be >= 0")
    clean = integrate_decay(n0, k_av, times)
    if noise_rel == 0:
        return clean
    rng = np.random.default_rng(seed)
    factor = 1.0 + noise_rel * rng.standard_normal(clean.densities.size)
    if np.any(factor <= 0):
        raise ValidationError("noise_rel", "noise drove a density non-positive")
    return DecayTrace(clean.times, clean.densities * factor, n0)


def number_to_density(atom_number, volume_cm3):
    """Mean density from an atom number and an effective trap volume."""
    if not volume_cm3 > 0:
        raise ValidationError("volume_cm3", "must be > 0")
    return np.asarray(atom_number, dtype=float) / volume_cm3
