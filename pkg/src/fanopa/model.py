"""Dressed-continuum amplitude algebra in the flat s-wave coupling limit.

The model couples an s-wave scattering continuum, a closed-channel
Feshbach bound state, two photoassociated excited bound states and an
artificial decay continuum.  With energy-independent real couplings

    V = sqrt(Gamma_f / 2pi),  Lambda_n = sqrt(Gamma_n / 2pi),
    V_art,n = sqrt(gamma_n / 2pi)

everything reduces to closed-form complex algebra in the reduced energy
eps and the collision energy E.  All energies are in MHz.
"""

import math
from collections import namedtuple
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import integrate

from .errors import DomainError, SingularDenominator, ValidationError

#: |D_n| below this (MHz) is treated as an evaluation on a pole
POLE_FLOOR = 1e-12

SWaveCouplings = namedtuple(
    "SWaveCouplings", ["v00", "lambda_1", "lambda_2", "v_art_1", "v_art_2"]
)


@dataclass(frozen=True)
class DressedAmplitudes:
    a_1: complex
    a_2: complex
    b_e: complex
    xi_1: complex
    xi_2: complex
    q_12: complex
    q_21: complex
    d_1: complex
    d_2: complex
    r_1: complex
    r_2: complex


@dataclass(frozen=True)
class CouplingProfile:
    """Real coupling strength (sqrt(MHz)) as a function of energy (MHz)."""

    func: Callable[[float], float]
    domain: Tuple[float, float]

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValidationError("domain", f"empty interval {self.domain}")

    def __call__(self, energy):
        return self.func(energy)

    @classmethod
    def constant(cls, value, domain):
        return cls(lambda e: value + 0.0 * np.asarray(e, dtype=float), tuple(domain))

    @classmethod
    def from_samples(cls, energies, values):
        from scipy.interpolate import CubicSpline

        energies = np.asarray(energies, dtype=float)
        spline = CubicSpline(energies, np.asarray(values, dtype=float))
        return cls(spline, (float(energies[0]), float(energies[-1])))


def closed_channel_energy(b_field, params):
    """Closed-channel bound-state energy E_c = dmu * (B - B0), in MHz."""
    return params.dmu * (np.asarray(b_field, dtype=float) - params.b0) + 0.0


def reduced_energy(collision_e, e_c, e_c_shift, gamma_f):
    """eps = (E - E_c - E_c^shift) / (Gamma_f / 2)."""
    if not gamma_f > 0:
        raise ValidationError("gamma_f", "must be > 0")
    return (collision_e - e_c - e_c_shift) / (0.5 * gamma_f)


def s_wave_couplings(params):
    two_pi = 2.0 * math.pi
    return SWaveCouplings(
        v00=math.sqrt(params.gamma_f / two_pi),
        lambda_1=math.sqrt(params.gamma_1 / two_pi),
        lambda_2=math.sqrt(params.gamma_2 / two_pi),
        v_art_1=math.sqrt(params.gamma_sp_1 / two_pi),
        v_art_2=math.sqrt(params.gamma_sp_2 / two_pi),
    )


def fano_factor(eps, q, j=1j):
    """Standard Fano profile F = (eps + q) / (eps + i)."""
    return (eps + q) / (eps + j)


def fano_profile_r(eps, q_n, params, n, j=1j):
    """R_n = Lambda_n * F_n, in sqrt(MHz)."""
    lam = math.sqrt(params.linewidth(n) / (2.0 * math.pi))
    return lam * fano_factor(eps, q_n, j)


def e_q_complex(eps, n, params, j=1j):
    """Feshbach-induced complex self energy of excited state ``n`` (MHz).

    Its real part is the level shift E_qn^shift and the modified
    stimulated width is Gamma_qn = Gamma_n - 2 Im(E_qn).
    """
    q_n = params.q(n)
    return (q_n - j) ** 2 * params.linewidth(n) / (2.0 * (eps + j))


def cross_coupling(eps, params, j=1j):
    """Cross couplings (Q_12, Q_21) between the two excited states (MHz).

    The principal-value part of the continuum-mediated coupling is dropped;
    what remains is the absorptive laser-induced and vacuum-induced term
    plus the coupling routed through the closed-channel state.
    """
    c = s_wave_couplings(params)
    k12 = -j * math.pi * (c.lambda_1 * c.lambda_2 + c.v_art_1 * c.v_art_2)
    root = math.sqrt(params.gamma_1 * params.gamma_2)
    via_bc = (params.q_1 - j) * (params.q_2 - j) * root / (2.0 * (eps + j))
    return k12 + via_bc, k12 + via_bc


def dressed_amplitudes(eps, collision_e, params, j=1j, floor=POLE_FLOOR):
    """Excited and closed-channel amplitudes of the dressed continuum.

    Parameters
    ----------
    eps : float
        Reduced energy.
    collision_e : float
        Collision energy E in MHz (enters the excited-state denominators).
    params : ModelParams
    j : complex
        Imaginary unit; exposed so the conjugation symmetry can be checked.
    floor : float
        Pole guard on |D_n|.

    Raises
    ------
    SingularDenominator
        If either |D_n| falls below ``floor``.
    """
    r = (fano_profile_r(eps, params.q_1, params, 1, j),
         fano_profile_r(eps, params.q_2, params, 2, j))
    xi = tuple(
        collision_e + params.detuning(n)
        + 0.5 * j * (params.linewidth(n) + params.spontaneous(n))
        - e_q_complex(eps, n, params, j)
        for n in (1, 2)
    )
    q12, q21 = cross_coupling(eps, params, j)
    d1 = xi[0] - q12 * q21 / xi[1]
    d2 = xi[1] - q21 * q12 / xi[0]
    if abs(d1) < floor or abs(d2) < floor:
        raise SingularDenominator(
            f"|D_n| below {floor:g} at eps={eps}, E={collision_e}"
        )
    a1 = (r[0] + q12 * r[1] / xi[1]) / d1
    a2 = (r[1] + q21 * r[0] / xi[0]) / d2

    c = s_wave_couplings(params)
    half = 0.5 * math.sqrt(params.gamma_f)
    bc_coupling = ((params.q_1 - j) * half * math.sqrt(params.gamma_1),
                   (params.q_2 - j) * half * math.sqrt(params.gamma_2))
    b_e = ((c.v00 + bc_coupling[0] * a1 + bc_coupling[1] * a2)
           / (0.5 * params.gamma_f * (eps + j)))
    return DressedAmplitudes(
        a_1=complex(a1), a_2=complex(a2), b_e=complex(b_e),
        xi_1=complex(xi[0]), xi_2=complex(xi[1]),
        q_12=complex(q12), q_21=complex(q21),
        d_1=complex(d1), d_2=complex(d2),
        r_1=complex(r[0]), r_2=complex(r[1]),
    )


def principal_value_coupling(v_profile, lambda_profile, e, half_width=None,
                             tol=1e-10):
    """Principal value of the integral of V(E') Lambda(E') / (e - E').

    A symmetric window [e - h, e + h] is excised; inside it the integrand
    is folded onto itself so the singular parts cancel, and the outer
    pieces are ordinary integrals.

    Raises
    ------
    DomainError
        If ``e`` is not strictly inside the common domain of both profiles.
    """
    lo = max(v_profile.domain[0], lambda_profile.domain[0])
    hi = min(v_profile.domain[1], lambda_profile.domain[1])
    if not lo < e < hi:
        raise DomainError(f"energy {e} outside common profile domain ({lo}, {hi})")

    def g(x):
        return float(v_profile(x) * lambda_profile(x))

    h = min(e - lo, hi - e)
    if half_width is not None:
        h = min(h, half_width)
    opts = dict(epsabs=tol, epsrel=tol, limit=200)

    def folded(t):
        if t == 0.0:
            t = 1e-300
        return (g(e - t) - g(e + t)) / t

    inner = integrate.quad(folded, 0.0, h, **opts)[0]
    left = integrate.quad(lambda x: g(x) / (e - x), lo, e - h, **opts)[0] if e - h > lo else 0.0
    right = integrate.quad(lambda x: g(x) / (e - x), e + h, hi, **opts)[0] if e + h < hi else 0.0
    return inner + left + right


def forward_q(omega_n, v_eff, gamma_n, gamma_f):
    """Fano asymmetry q_n = (Omega_n + V_eff) / (sqrt(Gamma_n Gamma_f) / 2)."""
    if not gamma_n > 0:
        raise DomainError("gamma_n must be > 0 for a finite Fano q")
    if not gamma_f > 0:
        raise DomainError("gamma_f must be > 0 for a finite Fano q")
    return (omega_n + v_eff) / (0.5 * math.sqrt(gamma_n * gamma_f))
