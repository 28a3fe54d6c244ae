"""Coupled dual-Fano model of photoassociation near a Feshbach resonance."""

from .analysis import (FitResult, LorentzianFit, ShiftScan, canonical_fano,
                       fano_minimum_field, field_grid, fit_model, lorentzian_fit,
                       shift_scan)
from .constants import CONSTANTS, PhysicalConstants
from .errors import *  # noqa: F401,F403
from .io import (RunConfig, load_config, read_spectrum_csv, read_trace_csv,
                 write_spectrum_csv, write_trace_csv)
from .model import (CouplingProfile, DressedAmplitudes, closed_channel_energy,
                    cross_coupling, dressed_amplitudes, e_q_complex, fano_profile_r,
                    forward_q, principal_value_coupling, reduced_energy,
                    s_wave_couplings)
from .params import ModelParams
from .spectrum import (AxisKind, QuadratureConfig, Spectrum, approx_thermal,
                       loss_rate_at_energy, s_decay, sweep_detuning, sweep_field,
                       thermal_average)
from .trapsim import DecayTrace, extract_k, integrate_decay, synthesize_trace

__version__ = "0.1.0"
