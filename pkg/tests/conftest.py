import numpy as np
import pytest

from ppgposture import kernels, synth
from ppgposture.recording import ActivityClass


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    """Each importable kernel module in turn (python, and cython when built)."""
    return kernels.available_backends()[request.param]


def clean_spec(label=ActivityClass.STATIONARY, seed=0, duration=30.0, **kw):
    """Noise-free, drift-free scenario with a fixed pulse template."""
    base = dict(class_label=label, duration=duration, seed=seed, dc_level=50000.0)
    base.update(kw)
    return synth.ScenarioSpec(**base)


@pytest.fixture
def clean_recording():
    return synth.generate_recording(clean_spec())


def blobs(n=500, d=6, sep=6.0, seed=0):
    """Three well-separated Gaussian clusters with balanced labels 0, 1, 2."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 3
    X = np.eye(3, d)[y] * sep + rng.standard_normal((n, d))
    return X, y


# acceptance outcomes, echoed at the end of the run
ACCEPTANCE = {}


def record_criterion(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
