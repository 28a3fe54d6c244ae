"""NumPy implementation of the decay-amplitude kernel.

Mirrors ``_ckernel.pyx`` exactly; used when the compiled extension is not
available or explicitly selected.
"""

import numpy as np

from .errors import SingularDenominator

TWO_PI = 2.0 * np.pi


def decay_amplitude(energy, eps, pars, floor):
    """Complex S_decay at each (energy, eps) pair.

    ``pars`` is (Gamma_1, Gamma_2, gamma_1, gamma_2, q_1, q_2, delta_1,
    delta_2), all MHz except the q's.
    """
    g1, g2, s1, s2, q1, q2, d1, d2 = (float(v) for v in pars)
    energy = np.asarray(energy, dtype=float)
    eps = np.asarray(eps, dtype=float)
    z = eps + 1j
    l1 = np.sqrt(g1 / TWO_PI)
    l2 = np.sqrt(g2 / TWO_PI)
    r1 = l1 * (eps + q1) / z
    r2 = l2 * (eps + q2) / z
    xi1 = energy + d1 + 0.5j * (g1 + s1) - (q1 - 1j) ** 2 * g1 / (2.0 * z)
    xi2 = energy + d2 + 0.5j * (g2 + s2) - (q2 - 1j) ** 2 * g2 / (2.0 * z)
    root = np.sqrt(g1 * g2)
    q12 = -0.5j * (root + np.sqrt(s1 * s2)) + (q1 - 1j) * (q2 - 1j) * root / (2.0 * z)
    det = xi1 * xi2 - q12 * q12
    bad = (np.abs(det) < floor * np.abs(xi2)) | (np.abs(det) < floor * np.abs(xi1))
    if np.any(bad):
        idx = int(np.flatnonzero(np.ravel(bad))[0])
        raise SingularDenominator(f"|D_n| below {floor:g} at flat index {idx}")
    a1 = (xi2 * r1 + q12 * r2) / det
    a2 = (xi1 * r2 + q12 * r1) / det
    w1 = np.sqrt(TWO_PI * s1)
    w2 = np.sqrt(TWO_PI * s2)
    return -1j * (w1 * a1 + w2 * a2)


def decay_probability(energy, eps, pars, floor):
    s = decay_amplitude(energy, eps, pars, floor)
    return s.real ** 2 + s.imag ** 2
