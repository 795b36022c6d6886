import math
import os
import subprocess
import sys

import numpy as np
import pytest

from lzsgate import _backend, _model
from lzsgate.core import DriveParams
from lzsgate.hamiltonians import Frame, kernel_model
from lzsgate.numerics import IntegrationError, IntegratorConfig

try:
    from lzsgate import _kernels  # noqa: F401
    HAVE_KERNEL = True
except ImportError:
    HAVE_KERNEL = False

needs_kernel = pytest.mark.skipif(not HAVE_KERNEL, reason="compiled extension not built")
P = DriveParams(1, 13, 12, 3)
TIMES = np.linspace(0.5, 6.0, 12)


def both(model, cfg=IntegratorConfig(), y0=(1.0, 0.0), t0=0.0, times=TIMES):
    fast, _ = _backend.run_model(model, y0, t0, times, cfg, "compiled")
    slow, _ = _backend.run_model(model, y0, t0, times, cfg, "python")
    return fast, slow


@needs_kernel
class TestParity:
    @pytest.mark.parametrize("frame", [Frame.lab(), Frame.rotated(), Frame.floquet(25),
                                       Frame.interaction(25)])
    def test_frames(self, frame):
        fast, slow = both(kernel_model(P, frame, None))
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_lab_with_decay_and_phase(self):
        model = _model.KernelModel.build(_model.LAB, v=1.0, a=4.0, d0=2.0, w=1.5, phi=0.7,
                                         gg=0.1, ge=0.3)
        fast, slow = both(model, y0=(0.6, 0.8j))
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_powerlaw(self):
        model = _model.KernelModel.build(_model.POWERLAW, v=2.0, s1=-3.0, s2=-20.0, c=0.4)
        fast, slow = both(model, times=np.linspace(0.1, 0.9, 5))
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_backward(self):
        fast, slow = both(kernel_model(P, Frame.lab(), None), t0=4.0, times=[2.0, 0.0])
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_rk4(self):
        cfg = IntegratorConfig(method="rk4", max_step=0.01)
        fast, slow = both(kernel_model(P, Frame.lab(), None), cfg)
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_batch(self):
        cols = dict(v=1.0, a=np.array([13.0, 18.0, 4.0]), d0=np.array([12.0, 6.0, 20.0]),
                    w=np.array([3.0, 0.75, 20.0]), phi=0.0, gg=0.0, ge=0.01,
                    t1=np.array([5.0, 9.0, 2.0]))
        fast, s1 = _backend.run_lab_batch(cols, IntegratorConfig(), "compiled")
        slow, s2 = _backend.run_lab_batch(cols, IntegratorConfig(), "python")
        np.testing.assert_array_equal(s1, 0)
        np.testing.assert_array_equal(s2, 0)
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_same_step_count(self):
        model = kernel_model(P, Frame.lab(), None)
        cfg = IntegratorConfig()
        _, n_fast = _backend.run_model(model, (1.0, 0.0), 0.0, TIMES, cfg, "compiled")
        _, n_slow = _backend.run_model(model, (1.0, 0.0), 0.0, TIMES, cfg, "python")
        assert n_fast == n_slow

    @pytest.mark.parametrize("backend", ["compiled", "python"])
    def test_underflow_reports_time(self, backend):
        cfg = IntegratorConfig(rel_tol=1e-30, abs_tol=1e-300)
        with pytest.raises(IntegrationError) as err:
            _backend.run_model(kernel_model(P, Frame.lab(), None), (1.0, 0.0), 0.0, [1.0],
                               cfg, backend)
        assert 0 <= err.value.t_reached < 1.0

    @pytest.mark.parametrize("backend", ["compiled", "python"])
    def test_batch_failure_flagged(self, backend):
        cfg = IntegratorConfig(rel_tol=1e-30, abs_tol=1e-300)
        finals, status = _backend.run_lab_batch(
            dict(v=1.0, a=13.0, d0=12.0, w=3.0, phi=0.0, gg=0.0, ge=0.0, t1=np.array([1.0])),
            cfg, backend)
        assert status[0] == _backend.UNDERFLOW
        assert np.all(finals[0] == 0)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.implementation("fortran")


@pytest.mark.parametrize("value,expected", [("1", "python"), ("0", None), ("", None)])
def test_environment_selection(value, expected):
    env = dict(os.environ, LZSGATE_PURE_PYTHON=value)
    out = subprocess.run([sys.executable, "-c", "import lzsgate; print(lzsgate.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    if expected is None:
        expected = "compiled" if HAVE_KERNEL else "python"
    assert out == expected


def test_pure_python_gate_matches():
    code = ("import math; from lzsgate.core import DriveParams; "
            "from lzsgate.gate import run_cz_lzs; "
            "print(repr(run_cz_lzs(DriveParams(1, 13, 12, 3), None, 2 * math.pi).fidelity))")
    env = dict(os.environ, LZSGATE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout
    from lzsgate.gate import run_cz_lzs
    assert float(out) == pytest.approx(run_cz_lzs(P, None, 2 * math.pi).fidelity, abs=1e-12)
