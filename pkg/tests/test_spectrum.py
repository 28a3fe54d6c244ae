import math
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fanopa import kernels
from fanopa.analysis import fano_minimum_field, field_grid
from fanopa.constants import thermal_energy_mhz, thermal_rate_prefactor
from fanopa.errors import QuadratureNonConvergence, UnitarityViolation, ValidationError
from fanopa.model import dressed_amplitudes, s_wave_couplings
from fanopa.spectrum import (AxisKind, QuadratureConfig, Spectrum, UnitarityWarning,
                             approx_thermal, check_unitarity, decay_probability,
                             loss_rate_at_energy, s_decay, sweep_detuning, sweep_field,
                             thermal_average, thermal_integral)

from conftest import local_extrema, peak_imbalance, random_params
from test_model import three_state_solve


def riemann_average(b, p, points=10 ** 6, cutoff=40.0):
    """Trapezoid sum of exp(-x) |S(x k_B T)|^2 on [0, cutoff], times k_B T / (h Q_T)."""
    kt = thermal_energy_mhz(p.temperature)
    x = np.linspace(0.0, cutoff, points)
    prob = decay_probability(x * kt, b, p)
    return thermal_rate_prefactor(p.temperature) * trapezoid(np.exp(-x) * prob, x)


@pytest.fixture
def constant_probability(monkeypatch):
    """Force |S|^2 to a constant everywhere in the kernel layer."""
    def install(value):
        def fake(energy, eps, pars, floor=1e-12):
            return np.full(np.broadcast(energy, eps).shape, value)
        monkeypatch.setattr(kernels, "decay_probability", fake)
    return install


class TestSpectrumType:
    def test_read_only(self):
        s = Spectrum(AxisKind.FIELD, [1, 2, 3], [0, 1, 0])
        with pytest.raises(ValueError):
            s.rates[0] = 1.0

    @pytest.mark.parametrize("axis, rates, field", [
        ([1, 1, 2], [0, 0, 0], "axis"), ([1, 2], [0, 0, 0], "rates"),
        ([1, 2], [0, -1e-20], "rates"), ([1, 2], [0, np.nan], "rates"), ([], [], "axis"),
    ])
    def test_invariants(self, axis, rates, field):
        with pytest.raises(ValidationError) as exc:
            Spectrum(AxisKind.FIELD, axis, rates)
        assert exc.value.field == field

    def test_axis_kind_columns(self):
        assert AxisKind.FIELD.column == "B_G" and AxisKind.DETUNING.column == "delta_MHz"

    def test_quadrature_config_invariants(self):
        with pytest.raises(ValidationError):
            QuadratureConfig(node_count=4)
        with pytest.raises(ValidationError):
            QuadratureConfig(energy_cutoff=2)
        with pytest.raises(ValidationError):
            QuadratureConfig(scheme="midpoint")


class TestSDecay:
    def test_no_light(self, fig2a):
        p = fig2a.replace(gamma_1=0.0, gamma_2=0.0)
        assert s_decay(dressed_amplitudes(0.2, 0.07, p), p) == 0

    def test_critical_coupling(self, fig2a):
        # far from the Feshbach resonance, b1 alone on resonance with Gamma_1 = gamma_1
        p = fig2a.replace(gamma_1=17.0, gamma_2=0.0, gamma_sp_2=1e-300, q_1=0.0,
                          detuning_1=-0.07)
        prob = abs(s_decay(dressed_amplitudes(1e9, 0.07, p), p)) ** 2
        assert prob <= 1.0 + 1e-12
        assert prob == pytest.approx(1.0, abs=1e-6)

    def test_undercoupled(self, fig2a):
        p = fig2a.replace(gamma_1=4.0, gamma_2=0.0, gamma_sp_2=1e-300, q_1=0.0,
                          detuning_1=-0.07)
        prob = abs(s_decay(dressed_amplitudes(1e9, 0.07, p), p)) ** 2
        assert prob == pytest.approx(4 * 4.0 * 17.0 / 21.0 ** 2, rel=1e-6)

    def test_independent_assembly(self, rng):
        for _ in range(50):
            p = random_params(rng)
            eps, e = rng.uniform(-20, 20), rng.uniform(0, 1)
            x = three_state_solve(eps, e, p)
            c = s_wave_couplings(p)
            ref = -2j * math.pi * (c.v_art_1 * x[0] + c.v_art_2 * x[1])
            got = s_decay(dressed_amplitudes(eps, e, p), p)
            assert got == pytest.approx(ref, rel=1e-10, abs=1e-14)

    def test_unitarity_random(self, rng):
        worst = 0.0
        for _ in range(1000):
            p = random_params(rng)
            e = rng.uniform(0, 2)
            eps = rng.uniform(-50, 50, 16)
            pars = kernels.pack_params(p)
            worst = max(worst, float(np.max(kernels.decay_probability(
                np.full(16, e), eps, pars))))
        assert worst <= 1 + 1e-9


class TestUnitarityCheck:
    def test_roundoff_warns(self):
        with pytest.warns(UnitarityWarning):
            check_unitarity(np.array([1 + 1e-8]))

    def test_violation_raises(self):
        with pytest.raises(UnitarityViolation):
            check_unitarity(np.array([0.2, 1 + 1e-5]))

    def test_silent_below_bound(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            check_unitarity(np.array([1 + 1e-10]))


class TestLossRateAtEnergy:
    def test_zero(self, fig2a):
        p = fig2a.replace(gamma_1=0.0, gamma_2=0.0)
        assert loss_rate_at_energy(0.07, 48.0, p) == 0

    def test_inverse_sqrt_energy(self, constant_probability, fig2a):
        constant_probability(1.0)
        k1 = loss_rate_at_energy(0.05, 48.0, fig2a)
        k4 = loss_rate_at_energy(0.2, 48.0, fig2a)
        assert k4 == pytest.approx(0.5 * k1, rel=1e-14)

    def test_accepts_thermal_energy(self, fig2a):
        e = thermal_energy_mhz(3.5)
        assert e == pytest.approx(0.07293, abs=5e-6)
        assert loss_rate_at_energy(e, 48.0, fig2a) > 0

    @pytest.mark.parametrize("e", [0.0, -0.1])
    def test_rejects_nonpositive(self, fig2a, e):
        with pytest.raises(ValidationError):
            loss_rate_at_energy(e, 48.0, fig2a)

    def test_boltzmann_average_of_k_e(self, fig2a):
        # <v sigma> over the Maxwell distribution reproduces the E-space formula
        kt = thermal_energy_mhz(fig2a.temperature)
        x, w = np.polynomial.laguerre.laggauss(64)
        # f(E) dE with f ~ sqrt(E) exp(-E/kT): <K_E> = 2/sqrt(pi) int sqrt(x) e^-x K_E(x kT) dx
        k_e = np.array([loss_rate_at_energy(xi * kt, 48.3, fig2a) for xi in x])
        maxwell = 2 / math.sqrt(math.pi) * np.sum(w * np.sqrt(x) * k_e)
        assert maxwell == pytest.approx(thermal_average(48.3, fig2a), rel=1e-10)


class TestThermalAverage:
    def test_no_light_gives_background(self, fig2a):
        p = fig2a.replace(gamma_1=0.0, gamma_2=0.0, k_bg=3e-12)
        assert thermal_average(48.0, p) == 3e-12

    def test_riemann_oracle(self, rng):
        for _ in range(5):
            p = random_params(rng)
            b = p.b0 + rng.uniform(-5, 5)
            assert thermal_average(b, p) == pytest.approx(riemann_average(b, p), rel=1e-6)

    def test_constant_identity(self, constant_probability, fig2a):
        constant_probability(0.37)
        expected = thermal_rate_prefactor(fig2a.temperature) * 0.37
        assert thermal_average(48.0, fig2a) == pytest.approx(expected, rel=1e-10)
        simpson = QuadratureConfig(scheme="adaptive-simpson")
        assert thermal_average(48.0, fig2a, simpson) == pytest.approx(expected, rel=1e-10)

    def test_background_additivity(self, rng):
        for _ in range(20):
            p = random_params(rng)
            c = rng.uniform(0, 1e-10)
            base = thermal_average(48.5, p)
            diff = thermal_average(48.5, p.replace(k_bg=c)) - base
            # exact up to the rounding of one addition
            assert abs(diff - c) <= np.spacing(base + c)

    def test_schemes_agree(self, fig2a):
        simpson = QuadratureConfig(scheme="adaptive-simpson", tolerance=1e-12)
        for b in (47.5, 48.0, 48.7):
            assert thermal_average(b, fig2a, simpson) == pytest.approx(
                thermal_average(b, fig2a), rel=1e-8)

    def test_simpson_depth_cap(self, fig2a):
        quad = QuadratureConfig(scheme="adaptive-simpson", tolerance=1e-300, max_depth=3)
        with pytest.raises(QuadratureNonConvergence):
            thermal_average(48.0, fig2a, quad)

    def test_thermal_integral_callable(self, fig2a):
        ref = thermal_average(48.2, fig2a)
        got = thermal_integral(lambda e: decay_probability(e, 48.2, fig2a), fig2a.temperature)
        assert got == pytest.approx(ref, rel=1e-14)


class TestApproxThermal:
    def test_zero_probability(self, fig2a):
        p = fig2a.replace(gamma_1=0.0, gamma_2=0.0, k_bg=1e-12)
        assert approx_thermal(48.0, p) == 1e-12

    def test_matches_full_average_for_constant(self, constant_probability, fig2a):
        constant_probability(0.61)
        assert approx_thermal(48.0, fig2a) == pytest.approx(thermal_average(48.0, fig2a),
                                                            rel=1e-10)

    def test_temperature_scaling(self, constant_probability, fig2a):
        constant_probability(0.61)
        k = approx_thermal(48.0, fig2a)
        assert approx_thermal(48.0, fig2a.replace(temperature=7.0)) == pytest.approx(
            k / math.sqrt(2), rel=1e-13)
        assert approx_thermal(48.0, fig2a.replace(temperature=14.0)) == pytest.approx(
            0.5 * k, rel=1e-13)

    def test_sample_energy(self, fig2a):
        e = 0.11
        expected = thermal_rate_prefactor(fig2a.temperature) * float(
            decay_probability(e, 48.1, fig2a))
        assert approx_thermal(48.1, fig2a, collision_e_eval=e) == pytest.approx(expected)

    def test_rejects_nonpositive_energy(self, fig2a):
        with pytest.raises(ValidationError):
            approx_thermal(48.0, fig2a, collision_e_eval=0.0)


class TestSweepField:
    def test_singleton(self, fig2a):
        s = sweep_field([48.1], fig2a)
        assert len(s) == 1 and s.rates[0] == thermal_average(48.1, fig2a)

    def test_pointwise(self, fig3):
        b = np.linspace(45, 50, 7)
        s = sweep_field(b, fig3)
        assert s.axis_kind is AxisKind.FIELD
        np.testing.assert_allclose(s.rates, [thermal_average(x, fig3) for x in b], rtol=1e-14)

    def test_fixed_detunings(self, fig3):
        b = np.linspace(45, 50, 5)
        a = sweep_field(b, fig3, fixed_detunings=(2.0, -3.0))
        ref = sweep_field(b, fig3.replace(detuning_1=2.0, detuning_2=-3.0))
        np.testing.assert_array_equal(a.rates, ref.rates)

    def test_rejects_unsorted(self, fig2a):
        with pytest.raises(ValidationError):
            sweep_field([48.0, 47.0], fig2a)

    def test_deterministic(self, fig2a):
        b = field_grid(fig2a, -30, 60, 200)
        np.testing.assert_array_equal(sweep_field(b, fig2a).rates, sweep_field(b, fig2a).rates)

    def test_unitarity_error_annotated(self, fig2a, monkeypatch):
        def bad(energy, eps, pars, floor=1e-12):
            out = np.zeros(np.broadcast(energy, eps).shape)
            out[2] = 1.5
            return out
        monkeypatch.setattr(kernels, "decay_probability", bad)
        with pytest.raises(UnitarityViolation, match="grid index 2"):
            sweep_field(np.linspace(47, 49, 5), fig2a)

    @pytest.mark.xfail(strict=True, reason="S(eps) is a Moebius map of eps in the flat-coupling "
                       "model, so |S|^2 has a single maximum; no secondary peak forms")
    def test_fig2a_two_maxima(self, fig2a):
        s = sweep_field(field_grid(fig2a, -30, 60, 500), fig2a)
        maxima, minima = local_extrema(s.rates)
        assert len(maxima) == 2 and len(minima) >= 1

    def test_fig2a_asymmetric_peak_and_minimum(self, fig2a):
        s = sweep_field(field_grid(fig2a, -30, 60, 500), fig2a)
        maxima, minima = local_extrema(s.rates)
        assert len(maxima) >= 1 and len(minima) >= 1

    def test_fig3_less_asymmetric(self, fig2a, fig3):
        a = sweep_field(field_grid(fig2a, -30, 60, 500), fig2a)
        b = sweep_field(field_grid(fig3, -30, 60, 500), fig3)
        assert peak_imbalance(b.axis, b.rates) < peak_imbalance(a.axis, a.rates)

    def test_single_resonance_minimum(self, rng):
        for _ in range(5):
            p = random_params(rng, gamma_f=rng.uniform(2.0, 5.0), gamma_2=0.0,
                              gamma_sp_2=1e-30, q_1=rng.uniform(-3, 3))
            b = field_grid(p, -30, 60, 2000)
            s = sweep_field(b, p)
            step = abs(b[1] - b[0])
            assert abs(b[np.argmin(s.rates)] - fano_minimum_field(p)) <= step


class TestSweepDetuning:
    def test_flat_when_uncoupled(self, fig2a):
        p = fig2a.replace(gamma_1=0.0, gamma_2=0.0, k_bg=2e-12)
        s = sweep_detuning(np.linspace(-5, 5, 11), 48.0, p)
        assert s.axis_kind is AxisKind.DETUNING
        assert np.all(s.rates == 2e-12)

    def test_rigid_offset(self, fig2a):
        s = sweep_detuning([-1.0, 0.0, 2.0], 48.0, fig2a)
        shifted = fig2a.replace(detuning_1=fig2a.detuning_1 + 2.0,
                                detuning_2=fig2a.detuning_2 + 2.0)
        assert s.rates[1] == thermal_average(48.0, fig2a)
        assert s.rates[2] == thermal_average(48.0, shifted)

    def test_single_resonance_unimodal_and_moves(self, fig2a):
        p = fig2a.replace(gamma_2=0.0, gamma_sp_2=1e-30)
        grid = np.linspace(-60, 60, 241)
        peaks = []
        for b in (47.0, 49.0):
            s = sweep_detuning(grid, b, p)
            maxima, _ = local_extrema(s.rates)
            assert len(maxima) == 1
            peaks.append(grid[maxima[0]])
        assert peaks[0] != peaks[1]
