import json
import os
import subprocess
import sys

import numpy as np
import pytest

from spinpair import _accel, compat, kernels, sdpsolve

needs_numba = pytest.mark.skipif(not _accel.USE_NUMBA, reason="numba backend disabled")


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_packed(rng, d, n_blocks):
    return np.concatenate([rng.normal(size=d * d) for _ in range(n_blocks)])


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(0)
    for n in (2, 4, 6):
        h = random_hermitian(rng, n)
        w, v = kernels.jacobi_eigh(h)
        assert np.abs(w - np.linalg.eigvalsh(h)).max() < 1e-12
        assert np.abs(h @ v - v * w).max() < 1e-12


def test_jacobi_loop_and_compiled_agree():
    h = random_hermitian(np.random.default_rng(1), 4)
    w1, v1 = kernels.jacobi_eigh_loop(h)
    w2, v2 = kernels.jacobi_eigh(h)
    assert np.abs(w1 - w2).max() < 1e-14
    assert np.abs(v1 - v2).max() < 1e-12


def test_pack_roundtrip_kernel():
    rng = np.random.default_rng(2)
    v = rng.normal(size=16)
    out = np.empty(16)
    kernels.pack_block(kernels.unpack_block(v, 4), out)
    assert np.abs(out - v).max() < 1e-15


def test_psd_projection_backends_agree():
    rng = np.random.default_rng(3)
    z = random_packed(rng, 4, 8)
    a, amin = kernels.psd_project(z, 4, 8)
    b, bmin = kernels.psd_project_numpy(z, 4, 8)
    assert np.abs(a - b).max() < 1e-12
    assert np.abs(np.sort(amin) - np.sort(bmin)).max() < 1e-12
    # projecting twice changes nothing
    again, mins = kernels.psd_project(a, 4, 8)
    assert np.abs(again - a).max() < 1e-12
    assert mins.min() > -1e-12


def test_warm_basis_gives_the_same_projection():
    rng = np.random.default_rng(4)
    z = random_packed(rng, 4, 3)
    basis = kernels.identity_bases(4, 3)
    kernels.psd_project_warm(random_packed(rng, 4, 3), 4, 3, basis)  # scramble the basis
    warm, _ = kernels.psd_project_warm(z, 4, 3, basis)
    cold, _ = kernels.psd_project(z, 4, 3)
    assert np.abs(warm - cold).max() < 1e-12


@needs_numba
def test_dykstra_backends_agree():
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(),
                                  compat.ensemble_octahedral())
    prep = sdpsolve._prepare(cs)
    for lam in (0.5, 0.8, 0.95):
        b = cs.rhs(lam)
        shift = prep.pinv @ b
        args = (prep.Q, shift, cs.coeffs, b, sdpsolve.uniform_start(cs), 4, cs.num_effects,
                1e-9, 20000, 25, 500, 1e-12)
        xa, sa, ia, ra, _ = kernels.dykstra(*args)
        xb, sb, ib, rb, _ = kernels.dykstra_numpy(*args)
        assert sa == sb
        assert abs(ia - ib) <= 50
        if sa == kernels.FEASIBLE:
            assert np.abs(xa - xb).max() < 1e-6


def test_seesaw_loop_and_compiled_agree():
    rng = np.random.default_rng(5)
    T = rng.normal(size=(4, 4))
    r0 = np.array([0.0, 0.0, 1.0])
    a = kernels.seesaw_loop(T, r0, 1.0, 1e-12, 1000, np.empty(0))
    b = kernels.seesaw(T, r0, 1.0, 1e-12, 1000, np.empty(0))
    assert abs(a[0] - b[0]) < 1e-14
    assert a[3] == b[3]


def test_numpy_fallback_gives_the_same_answer():
    script = (
        "import json\n"
        "from spinpair import _accel, compat, kernels, sdpsolve\n"
        "cs = compat.build_constraints(compat.named_axes('XYZ'), compat.parallel(),\n"
        "                              compat.ensemble_octahedral())\n"
        "sol = sdpsolve.solve_max_sharpness(cs)\n"
        "print(json.dumps([_accel.backend_name(), kernels.dykstra.__name__,\n"
        "                  sol.lambda_opt, sol.status]))\n")
    env = dict(os.environ, SPINPAIR_NO_JIT="1")
    out = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True,
                         text=True, check=True, timeout=600)
    backend, fn, lam, status = json.loads(out.stdout.strip().splitlines()[-1])
    assert backend == "numpy"
    assert fn == "dykstra_numpy"
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(),
                                  compat.ensemble_octahedral())
    here = sdpsolve.solve_max_sharpness(cs)
    assert abs(lam - here.lambda_opt) <= sdpsolve.BISECTION_WIDTH
    assert status == "optimal"
