"""Backend selection for the decay-amplitude kernel.

The compiled extension is used when it imports; otherwise the NumPy
implementation is used.  ``use_backend`` switches explicitly.
"""

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_BACKENDS = {"python": _pykernel}
if _ckernel is not None:
    _BACKENDS["cython"] = _ckernel

_active = _BACKENDS.get("cython", _pykernel)


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return "cython" if _active is _ckernel and _ckernel is not None else "python"


def use_backend(name):
    """Select ``"cython"`` or ``"python"``; returns the previous name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    previous = backend_name()
    _active = _BACKENDS[name]
    return previous


def pack_params(params):
    return (params.gamma_1, params.gamma_2, params.gamma_sp_1, params.gamma_sp_2,
            params.q_1, params.q_2, params.detuning_1, params.detuning_2)


def decay_amplitude(energy, eps, pars, floor=1e-12):
    return _active.decay_amplitude(energy, eps, pars, floor)


def decay_probability(energy, eps, pars, floor=1e-12):
    return _active.decay_probability(energy, eps, pars, floor)
