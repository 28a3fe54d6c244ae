"""Derived observables and inverse problems.

Canonical Fano profile, location of the Fano minimum in field,
Lorentzian peak extraction, PA spectral-shift slope scans and a damped
least-squares fit of the full model to a measured spectrum.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, stats

from .constants import thermal_energy_mhz
from .errors import (DegenerateJacobian, FanoPAError, NonConvergence, NoPeak,
                     ValidationError)
from .params import ModelParams
from .spectrum import DEFAULT_QUADRATURE, AxisKind, sweep_detuning, sweep_field

FITTABLE = ("q_1", "q_2", "gamma_1", "gamma_2", "k_bg",
            "detuning_1", "detuning_2", "dmu", "b0")

DEFAULT_BOUNDS = {
    "q_1": (-1e3, 1e3),
    "q_2": (-1e3, 1e3),
    "gamma_1": (0.0, math.inf),
    "gamma_2": (0.0, math.inf),
    "k_bg": (0.0, math.inf),
    "detuning_1": (-math.inf, math.inf),
    "detuning_2": (-math.inf, math.inf),
    "dmu": (-math.inf, math.inf),
    "b0": (-math.inf, math.inf),
}

# finite-difference step is 1e-6 * max(|value|, floor); the floor only
# matters for parameters sitting at (or near) zero
_STEP_FLOOR = {"q_1": 1.0, "q_2": 1.0, "gamma_1": 1e-3, "gamma_2": 1e-3,
               "detuning_1": 1.0, "detuning_2": 1.0, "dmu": 1e-3, "b0": 1.0}
FD_RELATIVE_STEP = 1e-6


# --------------------------------------------------------------------------
# closed-form profile helpers

def canonical_fano(eps, q):
    """sigma = (eps + q)^2 / (eps^2 + 1)."""
    eps = np.asarray(eps, dtype=float)
    out = (eps + q) ** 2 / (eps * eps + 1.0)
    return float(out) if out.ndim == 0 else out


def eps_to_field(eps, params, collision_e=None):
    """Field at which the reduced energy equals ``eps`` for energy ``collision_e``.

    ``collision_e`` (MHz) defaults to k_B T, the representative energy of
    the Boltzmann average (its mean).
    """
    if collision_e is None:
        collision_e = thermal_energy_mhz(params.temperature)
    eps = np.asarray(eps, dtype=float)
    b = params.b0 + (collision_e - 0.5 * params.gamma_f * eps) / params.dmu
    return float(b) if b.ndim == 0 else b


def field_grid(params, eps_lo, eps_hi, count, collision_e=None):
    """Increasing field grid whose reduced energies span [eps_lo, eps_hi]."""
    if count < 2:
        raise ValidationError("count", "need at least 2 points")
    return np.sort(eps_to_field(np.linspace(eps_lo, eps_hi, count), params, collision_e))


def fano_minimum_field(params, n=1, collision_e=None):
    """Field (G) of the single-resonance Fano minimum, eps = -q_n."""
    return eps_to_field(-params.q(n), params, collision_e)


# --------------------------------------------------------------------------
# Lorentzian peak fit

@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    amplitude: float
    offset: float
    residual_norm: float

    def __call__(self, x):
        return lorentzian(x, self.center, self.fwhm, self.amplitude, self.offset)


def lorentzian(x, center, fwhm, amplitude, offset):
    hw2 = (0.5 * fwhm) ** 2
    x = np.asarray(x, dtype=float)
    return amplitude * hw2 / ((x - center) ** 2 + hw2) + offset


def _peak_basin(y, i):
    """Indices bounding the local basin of the maximum at ``i``."""
    lo = i
    while lo > 0 and y[lo - 1] <= y[lo]:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi + 1] <= y[hi]:
        hi += 1
    return lo, hi


def lorentzian_fit(spec, window=None, max_nfev=2000):
    """Least-squares Lorentzian A (G/2)^2 / ((x - x0)^2 + (G/2)^2) + c.

    Without ``window`` only the basin of the global maximum (bounded by
    the nearest local minima on either side) is fitted, so secondary
    peaks do not pull the center.  ``window=(lo, hi)`` restricts the
    axis explicitly.

    Raises
    ------
    NoPeak
        Monotone or flat spectrum, maximum on the boundary, or fitted
        center outside the fitted range.
    NonConvergence
        The optimiser hit ``max_nfev``.
    """
    x, y = np.asarray(spec.axis), np.asarray(spec.rates)
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, y = x[keep], y[keep]
    if x.size < 5:
        raise NoPeak(f"need at least 5 points, have {x.size}")
    d = np.diff(y)
    if np.all(d >= 0) or np.all(d <= 0):
        raise NoPeak("spectrum is monotone")
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1:
        raise NoPeak("maximum sits on the axis boundary")
    if window is None:
        lo, hi = _peak_basin(y, i)
        x, y, i = x[lo:hi + 1], y[lo:hi + 1], i - lo
        if x.size < 5:
            raise NoPeak(f"peak basin has only {x.size} points")

    # dimensionless working variables
    yscale = float(np.max(np.abs(y))) or 1.0
    x_ref = float(x[i])
    height = float(y[i] - y.min())
    above = np.nonzero(y - y.min() >= 0.5 * height)[0]
    width = float(x[above[-1]] - x[above[0]]) or float(x[-1] - x[0]) / 4.0
    xs = (x - x_ref) / width
    ys = y / yscale

    def residual(p):
        return lorentzian(xs, p[0], p[1], p[2], p[3]) - ys

    p0 = [0.0, 1.0, height / yscale, float(y.min()) / yscale]
    res = optimize.least_squares(
        residual, p0, bounds=([-np.inf, 1e-12, -np.inf, -np.inf], np.inf),
        method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
    )
    if res.status == 0:
        raise NonConvergence(f"Lorentzian fit did not converge in {max_nfev} evaluations")
    center = x_ref + res.x[0] * width
    if not x[0] <= center <= x[-1]:
        raise NoPeak(f"fitted center {center:g} outside the fitted range")
    return LorentzianFit(
        center=float(center),
        fwhm=float(res.x[1] * width),
        amplitude=float(res.x[2] * yscale),
        offset=float(res.x[3] * yscale),
        residual_norm=float(np.linalg.norm(res.fun) * yscale),
    )


# --------------------------------------------------------------------------
# PA spectral shift

@dataclass(frozen=True)
class ShiftScan:
    intensities: Tuple[float, ...]
    peak_positions: Tuple[float, ...]
    slope: float
    slope_sigma: float
    fits: Tuple[LorentzianFit, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if len(self.intensities) != len(self.peak_positions):
            raise ValidationError("peak_positions", "length differs from intensities")
        if np.any(np.diff(self.intensities) <= 0):
            raise ValidationError("intensities", "must be strictly increasing")


RABI_SCALINGS = ("sqrt", "constant")


def params_at_intensity(params, intensity, rabi_scaling="sqrt", omega_share=1.0,
                        light_shift_slope=0.0):
    """Model parameters at PA intensity ``intensity`` (W/cm^2).

    Stimulated widths scale linearly with intensity.  With
    ``rabi_scaling="sqrt"`` the bound-bound Rabi frequency grows as
    sqrt(I) like the free-bound couplings, so q_n is unchanged.  With
    ``"constant"`` the Rabi part of q_n, a fraction ``omega_share`` of
    q_n at the reference intensity, is held fixed and therefore q_n
    picks up a 1/sqrt(I) piece.  ``light_shift_slope`` (MHz per W/cm^2)
    adds an intensity-proportional shift of the excited levels that is
    not produced by the Feshbach coupling.
    """
    if rabi_scaling not in RABI_SCALINGS:
        raise ValidationError("rabi_scaling", f"must be one of {RABI_SCALINGS}")
    if not intensity > 0:
        raise ValidationError("intensities", "must be > 0")
    s = intensity / params.intensity_ref
    changes = dict(gamma_1=params.gamma_1 * s, gamma_2=params.gamma_2 * s)
    if rabi_scaling == "constant":
        factor = omega_share / math.sqrt(s) + (1.0 - omega_share)
        changes.update(q_1=params.q_1 * factor, q_2=params.q_2 * factor)
    shift = light_shift_slope * (intensity - params.intensity_ref)
    changes.update(detuning_1=params.detuning_1 - shift,
                   detuning_2=params.detuning_2 - shift)
    return params.replace(**changes)


def shift_scan(params, intensities, fixed_b, delta_grid, quad=DEFAULT_QUADRATURE,
               rabi_scaling="sqrt", omega_share=1.0, light_shift_slope=0.0,
               window=None):
    """Slope of the PA resonance position against laser intensity at one field.

    For every intensity a detuning spectrum is generated and its peak
    located by ``lorentzian_fit``; the slope and its standard error come
    from a linear regression of the centers on intensity.
    """
    intensities = np.asarray(intensities, dtype=float).ravel()
    if intensities.size < 2:
        raise ValidationError("intensities", "need at least 2 intensities")
    if np.any(intensities <= 0):
        raise ValidationError("intensities", "must be > 0")
    if np.any(np.diff(intensities) <= 0):
        raise ValidationError("intensities", "must be strictly increasing")
    centers, fits = [], []
    for k, intensity in enumerate(intensities):
        p = params_at_intensity(params, intensity, rabi_scaling, omega_share,
                                light_shift_slope)
        spec = sweep_detuning(delta_grid, fixed_b, p, quad)
        try:
            fit = lorentzian_fit(spec, window=window)
        except NonConvergence as exc:
            raise NonConvergence(f"intensity index {k}: {exc}", best=exc.best) from exc
        except NoPeak as exc:
            raise NoPeak(f"intensity index {k}: {exc}") from exc
        centers.append(fit.center)
        fits.append(fit)
    if intensities.size == 2:
        slope = (centers[1] - centers[0]) / (intensities[1] - intensities[0])
        sigma = 0.0
    else:
        reg = stats.linregress(intensities, centers)
        slope, sigma = float(reg.slope), float(reg.stderr)
    return ShiftScan(tuple(intensities.tolist()), tuple(centers), float(slope),
                     float(sigma), tuple(fits))


# --------------------------------------------------------------------------
# full-model fit

@dataclass(frozen=True)
class FitResult:
    names: Tuple[str, ...]
    values: Tuple[float, ...]
    sigma: Tuple[float, ...]
    residual_norm: float
    iterations: int
    converged: bool
    params: Optional[ModelParams] = None
    history: Tuple[Tuple[int, float, float], ...] = field(default=(), repr=False)

    def as_dict(self):
        return dict(zip(self.names, self.values))


def _forward(data, params, quad, fixed_b):
    if data.axis_kind is AxisKind.FIELD:
        return sweep_field(data.axis, params, quad).rates
    return sweep_detuning(data.axis, fixed_b, params, quad).rates


def fit_model(data, initial, free, bounds=None, quad=DEFAULT_QUADRATURE, fixed_b=None,
              max_iter=200, xtol=1e-12, ftol=1e-15):
    """Levenberg-Marquardt fit of the model to a measured spectrum.

    Residuals are K_model - K_data.  The Jacobian uses central
    differences with a relative step of 1e-6 (one-sided at an active
    bound); steps are projected onto ``bounds`` and only accepted when
    they lower the residual norm.

    Parameters
    ----------
    data : Spectrum
    initial : ModelParams
    free : iterable of str
        Subset of ``FITTABLE``.
    bounds : dict, optional
        ``{name: (lo, hi)}`` overriding ``DEFAULT_BOUNDS``.
    fixed_b : float
        Required for detuning spectra.

    Raises
    ------
    DegenerateJacobian
        A free parameter does not affect the residuals.
    NonConvergence
        ``max_iter`` reached; ``exc.best`` holds the best FitResult.
    """
    names = tuple(free)
    bad = [n for n in names if n not in FITTABLE]
    if bad:
        raise ValidationError("free", f"cannot fit {bad[0]!r}; choose from {FITTABLE}")
    if len(set(names)) != len(names):
        raise ValidationError("free", "duplicate parameter")
    if data.axis_kind is AxisKind.DETUNING and fixed_b is None:
        raise ValidationError("fixed_b", "required for detuning spectra")
    lims = dict(DEFAULT_BOUNDS)
    for name, (lo, hi) in (bounds or {}).items():
        if name not in FITTABLE:
            raise ValidationError("bounds", f"unknown parameter {name!r}")
        if not lo < hi:
            raise ValidationError("bounds", f"empty interval for {name}")
        lims[name] = (float(lo), float(hi))
    y = np.asarray(data.rates)

    def residual(theta):
        p = initial.replace(**dict(zip(names, theta)))
        return _forward(data, p, quad, fixed_b) - y, p

    r, p = residual([getattr(initial, n) for n in names])
    if not names:
        return FitResult((), (), (), float(np.linalg.norm(r)), 0, True, initial)

    lo = np.array([lims[n][0] for n in names])
    hi = np.array([lims[n][1] for n in names])
    theta = np.clip(np.array([getattr(initial, n) for n in names], dtype=float), lo, hi)
    r, p = residual(theta)
    floors = np.array([_STEP_FLOOR.get(n, 0.0) for n in names])
    kfloor = 1e-6 * float(np.max(np.abs(y))) if np.any(y) else 1e-20
    floors[[i for i, n in enumerate(names) if n == "k_bg"]] = kfloor

    def jacobian(theta):
        J = np.empty((r.size, theta.size))
        for i in range(theta.size):
            h = FD_RELATIVE_STEP * max(abs(theta[i]), floors[i])
            up, dn = theta.copy(), theta.copy()
            up[i] = min(theta[i] + h, hi[i])
            dn[i] = max(theta[i] - h, lo[i])
            J[:, i] = (residual(up)[0] - residual(dn)[0]) / (up[i] - dn[i])
        return J

    def make_result(theta, r, p, it, converged, J):
        m, k = r.size, theta.size
        dof = max(m - k, 1)
        cov = np.linalg.pinv(J.T @ J) * float(r @ r) / dof
        sigma = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        return FitResult(names, tuple(float(v) for v in theta), tuple(float(s) for s in sigma),
                         float(np.linalg.norm(r)), it, converged, p, tuple(history))

    cost = float(r @ r)
    lam, nu = 1e-3, 2.0
    diag = np.zeros(theta.size)
    history = [(0, math.sqrt(cost), lam)]
    J = jacobian(theta)
    scale = np.linalg.norm(J, axis=0) * np.maximum(np.abs(theta), floors)
    if np.any(scale <= 1e-12 * max(scale.max(), 1e-300)):
        name = names[int(np.argmin(scale))]
        raise DegenerateJacobian(f"residuals do not depend on {name!r}")

    for it in range(1, max_iter + 1):
        g = J.T @ r
        A = J.T @ J
        # Marquardt scaling, never shrinking (More 1978)
        diag = np.maximum(diag, np.maximum(np.diag(A), 1e-30 * max(np.max(np.diag(A)), 1e-300)))
        accepted = False
        # parameters pinned at a bound with the gradient pushing outward
        # are frozen for this step (projected LM active set)
        pinned = ((theta <= lo) & (g > 0)) | ((theta >= hi) & (g < 0))
        act = ~pinned
        while lam < 1e16:
            step = np.zeros_like(theta)
            try:
                sub = A[np.ix_(act, act)] + lam * np.diag(diag[act])
                step[act] = np.linalg.solve(sub, -g[act])
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(theta + step, lo, hi)
            try:
                r_new, p_new = residual(trial)
                cost_new = float(r_new @ r_new)
            except (FanoPAError, FloatingPointError):
                cost_new = math.inf
            if cost_new < cost:
                accepted = True
                break
            lam *= nu
            nu *= 2.0
        if not accepted:
            # no descent direction left: stationary to working precision
            return make_result(theta, r, p, it - 1, True, J)
        dtheta = np.abs(trial - theta)
        theta, r, p = trial, r_new, p_new
        reduction = cost - cost_new
        cost = cost_new
        # gain-ratio damping update (Nielsen 1999)
        predicted = -(2.0 * step @ g + step @ A @ step)
        rho = reduction / predicted if predicted > 0 else 0.0
        lam = max(lam * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3), 1e-15)
        nu = 2.0
        history.append((it, math.sqrt(cost), lam))
        if (np.all(dtheta <= xtol * np.maximum(np.abs(theta), floors))
                or reduction <= ftol * cost or cost == 0.0):
            J = jacobian(theta)
            return make_result(theta, r, p, it, True, J)
        J = jacobian(theta)
    best = make_result(theta, r, p, max_iter, False, J)
    raise NonConvergence(f"fit did not converge in {max_iter} iterations", best=best)
