"""Decay S-matrix, energy-resolved and thermally averaged loss rates, sweeps."""

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import kernels
from .constants import CONSTANTS, mhz_to_joule, thermal_energy_mhz, thermal_rate_prefactor
from .errors import (QuadratureNonConvergence, SingularDenominator,
                     UnitarityViolation, ValidationError)
from .model import closed_channel_energy, s_wave_couplings
from .params import ModelParams

UNITARITY_WARN = 1e-9
UNITARITY_ERROR = 1e-6


class UnitarityWarning(RuntimeWarning):
    pass


_ANNOTATABLE = (SingularDenominator, UnitarityViolation, QuadratureNonConvergence)


class AxisKind(str, enum.Enum):
    FIELD = "field"
    DETUNING = "detuning"

    @property
    def column(self):
        return "B_G" if self is AxisKind.FIELD else "delta_MHz"

    @property
    def unit(self):
        return "G" if self is AxisKind.FIELD else "MHz"


@dataclass(frozen=True)
class Spectrum:
    """Sampled loss-rate curve.  ``rates`` are K_av in cm^3/s."""

    axis_kind: AxisKind
    axis: np.ndarray
    rates: np.ndarray
    meta: Optional[ModelParams] = field(default=None, compare=False)

    def __post_init__(self):
        kind = AxisKind(self.axis_kind)
        axis = np.array(self.axis, dtype=float).ravel()
        rates = np.array(self.rates, dtype=float).ravel()
        if axis.shape != rates.shape:
            raise ValidationError("rates", f"length {rates.size} != axis length {axis.size}")
        if axis.size == 0:
            raise ValidationError("axis", "empty spectrum")
        if not np.all(np.isfinite(axis)):
            raise ValidationError("axis", "non-finite value")
        if np.any(np.diff(axis) <= 0):
            raise ValidationError("axis", "must be strictly increasing")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ValidationError("rates", "must be finite and >= 0")
        axis.flags.writeable = False
        rates.flags.writeable = False
        object.__setattr__(self, "axis_kind", kind)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "rates", rates)

    def __len__(self):
        return self.axis.size


@dataclass(frozen=True)
class QuadratureConfig:
    """Discretisation of the Boltzmann energy average.

    ``energy_cutoff`` (in units of k_B T) bounds the adaptive-Simpson
    interval; Gauss-Laguerre integrates the full half line.
    """

    node_count: int = 64
    energy_cutoff: float = 40.0
    scheme: str = "gauss-laguerre"
    tolerance: float = 1e-10
    max_depth: int = 40

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 8:
            raise ValidationError("node_count", "must be an integer >= 8")
        if not self.energy_cutoff >= 5:
            raise ValidationError("energy_cutoff", "must be >= 5")
        if self.scheme not in ("gauss-laguerre", "adaptive-simpson"):
            raise ValidationError("scheme", f"unknown scheme {self.scheme!r}")
        if not self.tolerance > 0:
            raise ValidationError("tolerance", "must be > 0")


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=32)
def laguerre_rule(n):
    x, w = np.polynomial.laguerre.laggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def check_unitarity(prob):
    """Validate |S|^2 values; warn on roundoff excess, raise on real violations."""
    worst = float(np.max(prob)) if np.size(prob) else 0.0
    if worst > 1.0 + UNITARITY_ERROR:
        raise UnitarityViolation(f"|S_decay|^2 = {worst!r} exceeds 1")
    if worst > 1.0 + UNITARITY_WARN:
        warnings.warn(f"|S_decay|^2 = {worst!r} slightly above 1", UnitarityWarning)
    return prob


def s_decay(amps, params):
    """S_decay = -2 pi i sum_n V_art,n A_n for one set of amplitudes."""
    c = s_wave_couplings(params)
    s = -2j * math.pi * (c.v_art_1 * amps.a_1 + c.v_art_2 * amps.a_2)
    check_unitarity(abs(s) ** 2)
    return complex(s)


def _eps(energy, b_field, params):
    return (energy - closed_channel_energy(b_field, params)) / (0.5 * params.gamma_f)


def decay_probability(collision_e, b_field, params):
    """|S_decay|^2 at collision energies (MHz) and fields (G); broadcasts."""
    eps = _eps(collision_e, b_field, params)
    shape = np.broadcast(collision_e, eps).shape
    prob = kernels.decay_probability(collision_e, eps, kernels.pack_params(params))
    return check_unitarity(np.reshape(prob, shape))


def loss_rate_at_energy(collision_e, b_field, params, const=CONSTANTS):
    """Energy-resolved loss rate K_E = (pi hbar / (mu k)) |S|^2 in cm^3/s."""
    if not collision_e > 0:
        raise ValidationError("collision_e", "must be > 0")
    prob = float(decay_probability(collision_e, b_field, params))
    return _velocity_cross_section(collision_e, const) * prob


def _velocity_cross_section(collision_e, const=CONSTANTS):
    # pi hbar / (mu k) with hbar k = sqrt(2 mu E), m^3/s -> cm^3/s
    k = math.sqrt(2.0 * const.reduced_mass * mhz_to_joule(collision_e)) / const.hbar
    return math.pi * const.hbar / (const.reduced_mass * k) * 1e6


def _simpson(f, a, b, tol, max_depth):
    """Adaptive Simpson on [a, b] for a scalar function, absolute tolerance."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = f(0.5 * (a + m)), f(0.5 * (m + b))
        left = (m - a) / 6.0 * (fa + 4.0 * lm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * rm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            raise QuadratureNonConvergence(
                f"adaptive Simpson did not reach tolerance on [{a:g}, {b:g}]"
            )
        else:
            stack.append((m, b, fm, rm, fb, right, 0.5 * eps, depth + 1))
            stack.append((a, m, fa, lm, fm, left, 0.5 * eps, depth + 1))
    return total


def thermal_integral(probability, temperature, quad=DEFAULT_QUADRATURE):
    """Resonant thermal rate for an arbitrary |S|^2(E) callable, cm^3/s.

    Computes 4 pi^2 hbar^2 / (2 pi mu k_B T)^(3/2) * int dE exp(-E/k_B T) |S|^2
    as k_B T / (h Q_T) * int dx exp(-x) |S(x k_B T)|^2.  ``probability``
    takes an array of energies in MHz.
    """
    kt = thermal_energy_mhz(temperature)
    if quad.scheme == "gauss-laguerre":
        x, w = laguerre_rule(int(quad.node_count))
        mean = float(np.sum(np.asarray(probability(x * kt)) * w))
    else:
        def f(x):
            return math.exp(-x) * float(probability(np.array([x * kt]))[0])
        scale = max(abs(f(1.0)), 1e-300)
        mean = _simpson(f, 0.0, quad.energy_cutoff, quad.tolerance * scale, quad.max_depth)
    return thermal_rate_prefactor(temperature) * mean


def _field_means(b_grid, params, quad):
    """Boltzmann-weighted mean |S|^2 at each field, Gauss-Laguerre."""
    kt = thermal_energy_mhz(params.temperature)
    x, w = laguerre_rule(int(quad.node_count))
    energy = x * kt
    eps = (energy[None, :] - closed_channel_energy(b_grid, params)[:, None]) / (0.5 * params.gamma_f)
    pars = kernels.pack_params(params)
    try:
        prob = kernels.decay_probability(np.broadcast_to(energy, eps.shape), eps, pars)
    except SingularDenominator:
        for i in range(eps.shape[0]):
            try:
                kernels.decay_probability(energy, eps[i], pars)
            except SingularDenominator as exc:
                raise SingularDenominator(f"grid index {i}: {exc}") from exc
        raise
    try:
        check_unitarity(prob)
    except UnitarityViolation as exc:
        i = int(np.argmax(np.max(prob, axis=1)))
        raise UnitarityViolation(f"grid index {i}: {exc}") from exc
    return np.sum(prob * w, axis=1)


def _resonant_rates(b_grid, params, quad):
    b_grid = np.atleast_1d(np.asarray(b_grid, dtype=float))
    if quad.scheme == "gauss-laguerre":
        return thermal_rate_prefactor(params.temperature) * _field_means(b_grid, params, quad)
    out = np.empty(b_grid.size)
    for i, b in enumerate(b_grid):
        try:
            out[i] = thermal_integral(lambda e: decay_probability(e, b, params),
                                      params.temperature, quad)
        except _ANNOTATABLE as exc:
            raise type(exc)(f"grid index {i}: {exc}") from exc
    return out


def thermal_average(b_field, params, quad=DEFAULT_QUADRATURE):
    """K_av = K_av^res + k_bg at one field, cm^3/s."""
    return float(_resonant_rates([b_field], params, quad)[0]) + params.k_bg


def approx_thermal(b_field, params, collision_e_eval=None):
    """Slowly-varying-|S|^2 approximation k_B T / (h Q_T) |S(E)|^2 + k_bg.

    |S|^2 is sampled at ``collision_e_eval`` (MHz), default k_B T.
    """
    if collision_e_eval is None:
        collision_e_eval = thermal_energy_mhz(params.temperature)
    if not collision_e_eval > 0:
        raise ValidationError("collision_e_eval", "must be > 0")
    prob = float(decay_probability(collision_e_eval, b_field, params))
    return thermal_rate_prefactor(params.temperature) * prob + params.k_bg


def _check_grid(grid, name):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValidationError(name, "empty grid")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError(name, "must be strictly increasing")
    return grid


def sweep_field(b_grid, params, quad=DEFAULT_QUADRATURE, fixed_detunings=None):
    """K_av versus magnetic field at fixed laser detunings."""
    b_grid = _check_grid(b_grid, "b_grid")
    if fixed_detunings is not None:
        params = params.replace(detuning_1=fixed_detunings[0], detuning_2=fixed_detunings[1])
    rates = _resonant_rates(b_grid, params, quad) + params.k_bg
    return Spectrum(AxisKind.FIELD, b_grid, rates, meta=params)


def sweep_detuning(delta_grid, fixed_b, params, quad=DEFAULT_QUADRATURE):
    """K_av versus a rigid offset added to both laser detunings (MHz)."""
    delta_grid = _check_grid(delta_grid, "delta_grid")
    rates = np.empty(delta_grid.size)
    for i, offset in enumerate(delta_grid):
        shifted = params.replace(detuning_1=params.detuning_1 + offset,
                                 detuning_2=params.detuning_2 + offset)
        try:
            rates[i] = _resonant_rates([fixed_b], shifted, quad)[0]
        except _ANNOTATABLE as exc:
            raise type(exc)(f"grid index {i}: {exc}") from exc
    return Spectrum(AxisKind.DETUNING, delta_grid, rates + params.k_bg, meta=params)
