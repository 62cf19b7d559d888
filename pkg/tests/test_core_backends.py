import os
import subprocess
import sys

import numpy as np
import pytest

from prethermal import _core, liouvillian as lv
from prethermal.bathmodel import RateSet

BACKENDS = _core.backends()


def test_compiled_backend_is_built():
    # the extension is part of the normal install; the fallback covers failed builds
    assert "compiled" in BACKENDS
    assert _core.BACKEND in ("compiled", "python")


def test_env_var_forces_fallback():
    code = "import prethermal._core as c; print(c.BACKEND)"
    env = {**os.environ, "PRETHERMAL_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("n,alpha", [(1, 0.0), (2, 0.3), (3, 1.0), (4, 0.7)])
def test_matrix_free_apply_matches_assembled_generator(name, n, alpha, rng):
    r = RateSet.from_magnetization(0.6, alpha, R1=1.7)
    L = lv.build_liouvillian(n, r)
    x = rng.normal(size=4**n) + 1j * rng.normal(size=4**n)
    got = BACKENDS[name].lindblad_apply(n, r.A, r.B, r.alpha, x)
    assert np.abs(got - L.sparse @ x).max() < 1e-12 * max(1, np.abs(x).max()) * 4**n


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_scalar_decay(name):
    t = np.linspace(0, 5, 11)
    out, nacc, nrej, status = BACKENDS[name].integrate_dense(
        np.array([[-1.0 + 0j]]), np.array([1.0 + 0j]), t, 1e-10, 1e-12, 1e-3, np.inf, 10**6)
    assert status == 0 and nacc > 0
    assert np.abs(out[:, 0] - np.exp(-t)).max() < 1e-9


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_oscillator_and_status_codes(name):
    L = np.array([[0, 1], [-1, 0]], dtype=complex)
    t = np.linspace(0, 10, 21)
    out, *_, status = BACKENDS[name].integrate_dense(L, np.array([1, 0], dtype=complex), t,
                                                   1e-10, 1e-12, 1e-2, np.inf, 10**6)
    assert status == 0
    assert np.abs(out[:, 0] - np.cos(t)).max() < 1e-8
    *_, status = BACKENDS[name].integrate_dense(L, np.array([1, 0], dtype=complex), t,
                                              1e-10, 1e-12, 1e-2, np.inf, 5)
    assert status == _core.STATUS_MAX_STEPS


def test_backends_agree_on_trajectory(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled extension not available")
    r = RateSet.from_beta_omega0(np.log(9), 0.9)
    rho = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = rho @ rho.conj().T
    y0 = (rho / np.trace(rho)).reshape(-1, order="F")
    t = np.linspace(0, 5, 6)
    outs = [BACKENDS[k].integrate_lindblad(3, r.A, r.B, r.alpha, y0, t, 1e-10, 1e-12, 1e-3,
                                          np.inf, 10**6) for k in ("compiled", "python")]
    assert outs[0][1] == outs[1][1]  # identical step sequence
    assert np.abs(outs[0][0] - outs[1][0]).max() < 1e-12
