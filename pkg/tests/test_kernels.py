import numpy as np
import pytest

from fanopa import dressed_amplitudes, kernels, s_wave_couplings
from fanopa.errors import SingularDenominator

from conftest import random_params


@pytest.fixture
def backend():
    previous = kernels.backend_name()
    yield kernels.use_backend
    kernels.use_backend(previous)


def grid_for(p, rng, shape=(40, 16)):
    energy = rng.uniform(0.0, 0.5, shape)
    eps = rng.uniform(-40, 40, shape)
    return energy, eps


class TestBackends:
    def test_python_always_available(self):
        assert "python" in kernels.available_backends()

    def test_compiled_preferred(self):
        if "cython" in kernels.available_backends():
            assert kernels.backend_name() == "cython"

    def test_switch(self, backend):
        prev = backend("python")
        assert kernels.backend_name() == "python"
        assert backend(prev) == "python"

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")

    def test_amplitude_matches_scalar_model(self, rng, backend):
        for name in kernels.available_backends():
            backend(name)
            for _ in range(10):
                p = random_params(rng)
                energy, eps = grid_for(p, rng, (5,))
                got = kernels.decay_amplitude(energy, eps, kernels.pack_params(p))
                c = s_wave_couplings(p)
                for k in range(5):
                    d = dressed_amplitudes(eps[k], energy[k], p)
                    ref = -2j * np.pi * (c.v_art_1 * d.a_1 + c.v_art_2 * d.a_2)
                    assert got[k] == pytest.approx(ref, rel=1e-12, abs=1e-15)

    @pytest.mark.skipif("cython" not in kernels.available_backends(),
                        reason="compiled kernel not built")
    def test_parity(self, rng, backend):
        for _ in range(20):
            p = random_params(rng)
            energy, eps = grid_for(p, rng)
            pars = kernels.pack_params(p)
            backend("python")
            a = kernels.decay_probability(energy, eps, pars)
            backend("cython")
            b = kernels.decay_probability(energy, eps, pars)
            assert a.shape == b.shape == energy.shape
            np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-13)

    def test_broadcasting(self, fig2a, backend):
        pars = kernels.pack_params(fig2a)
        for name in kernels.available_backends():
            backend(name)
            out = kernels.decay_probability(np.linspace(0.01, 0.3, 4)[None, :],
                                            np.linspace(-5, 5, 3)[:, None], pars)
            assert out.shape == (3, 4)

    def test_pole_floor(self, fig2a, backend):
        pars = kernels.pack_params(fig2a)
        for name in kernels.available_backends():
            backend(name)
            with pytest.raises(SingularDenominator):
                kernels.decay_probability(np.array([0.05]), np.array([0.3]), pars, floor=1e6)
