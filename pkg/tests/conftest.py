import json
from pathlib import Path

import numpy as np
import pytest

from fanopa import ModelParams

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def load_model(name):
    raw = json.loads((CONFIG_DIR / f"{name}.json").read_text())
    return ModelParams.from_dict(raw["model"])


def random_params(rng, **overrides):
    """Random valid parameter set in the regime of the bundled configs."""
    values = dict(
        gamma_f=rng.uniform(0.5, 5.0),
        gamma_1=rng.uniform(0.1, 20.0),
        gamma_2=rng.uniform(0.0, 1.0),
        q_1=rng.uniform(-5.0, 5.0),
        q_2=rng.uniform(-25.0, 25.0),
        detuning_1=rng.uniform(-20.0, 20.0),
        detuning_2=rng.uniform(-20.0, 20.0),
        b0=47.97,
        dmu=rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 3.0),
        temperature=rng.uniform(1.0, 10.0),
        gamma_sp_1=rng.uniform(5.0, 30.0),
        gamma_sp_2=rng.uniform(5.0, 30.0),
    )
    values.update(overrides)
    return ModelParams(**values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig2a():
    return load_model("fig2a")


@pytest.fixture
def fig2b():
    return load_model("fig2b")


@pytest.fixture
def fig3():
    return load_model("fig3")


def local_extrema(y):
    """Indices of strict-sign local maxima and minima of a sampled curve."""
    d = np.sign(np.diff(y))
    maxima = [i + 1 for i in range(d.size - 1) if d[i] > 0 and d[i + 1] < 0]
    minima = [i + 1 for i in range(d.size - 1) if d[i] < 0 and d[i + 1] > 0]
    return maxima, minima


def peak_imbalance(x, y):
    """Normalized left-right area imbalance |L - R| / (L + R) of the main peak.

    Areas above the curve minimum are taken over a window symmetric in
    index around the maximum, as wide as the larger half-width at half
    height.
    """
    from scipy.integrate import trapezoid

    i = int(np.argmax(y))
    h = y - y.min()
    half = 0.5 * h[i]
    lo = i
    while lo > 0 and h[lo] > half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and h[hi] > half:
        hi += 1
    w = max(i - lo, hi - i)
    a = max(i - w, 0)
    left = trapezoid(h[a:i + 1], x[a:i + 1])
    right = trapezoid(h[i:i + w + 1], x[i:i + w + 1])
    return abs(left - right) / (left + right)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
