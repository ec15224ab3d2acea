import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinpair import matcore
from spinpair.matcore import I2, SX, SY, SZ, kron


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_pauli_algebra():
    assert np.abs(SX @ SY - 1j * SZ).max() < 1e-15
    assert np.abs(SY @ SZ - 1j * SX).max() < 1e-15
    for p in (SX, SY, SZ):
        assert np.abs(p @ p - I2).max() < 1e-15


def test_sym_and_antisym_tensor():
    assert np.abs(matcore.sym_tensor(SX, I2) - (kron(SX, I2) + kron(I2, SX))).max() < 1e-15
    assert np.abs(matcore.antisym_tensor(SX, I2) - (kron(SX, I2) - kron(I2, SX))).max() < 1e-15
    assert np.abs(matcore.antisym_tensor(SZ, SZ)).max() == 0


def test_kron_rejects_non_qubit():
    with pytest.raises(ValueError):
        kron(np.eye(3), I2)


def test_eig_matches_characteristic_polynomial():
    # independent oracle: roots of det(t - H)
    rng = np.random.default_rng(1)
    for n in (2, 4):
        for _ in range(8):
            h = random_hermitian(rng, n)
            roots = np.sort(np.roots(np.poly(h)).real)
            w, v = matcore.hermitian_eig(h)
            assert np.abs(w - roots).max() < 1e-8
            assert np.abs(h @ v - v * w).max() < 1e-12
            assert np.abs(v.conj().T @ v - np.eye(n)).max() < 1e-12


def test_eig_known_spectra():
    w, _ = matcore.hermitian_eig(kron(SX, SX) + kron(SY, SY) + kron(SZ, SZ))
    assert np.abs(w - [-3, 1, 1, 1]).max() < 1e-13
    assert matcore.min_eig(np.diag([2.0, -0.5, 1.0, 0.0])) == pytest.approx(-0.5, abs=1e-15)


def test_eig_degenerate_and_diagonal():
    w, v = matcore.hermitian_eig(np.eye(4))
    assert np.abs(w - 1).max() == 0
    assert np.abs(v - np.eye(4)).max() == 0


def test_as_operator_rejects_other_shapes():
    with pytest.raises(ValueError):
        matcore.as_operator(np.eye(3))


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        matcore.hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_eig_batch():
    rng = np.random.default_rng(3)
    hs = np.array([random_hermitian(rng, 4) for _ in range(6)])
    ws, vs = matcore.hermitian_eig_batch(hs)
    for h, w in zip(hs, ws):
        assert np.abs(w - np.linalg.eigvalsh(h)).max() < 1e-12


def test_projector_and_trace_inner():
    v = np.array([1, 1j]) / np.sqrt(2)
    p = matcore.projector(v)
    assert np.abs(p @ p - p).max() < 1e-15
    assert matcore.trace_inner(p, SY) == pytest.approx(1.0)


def test_pauli_expand_singlet():
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    pc = matcore.pauli_expand(matcore.projector(psi))
    t = pc.as_matrix()
    assert np.abs(t - np.diag([0.25, -0.25, -0.25, -0.25])).max() < 1e-15
    assert pc["ZZ"] == pytest.approx(-0.25)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2**31 - 1))
def test_pauli_roundtrip(order, seed):
    h = random_hermitian(np.random.default_rng(seed), 2 ** order)
    pc = matcore.pauli_expand(h)
    assert np.isrealobj(pc.coeffs)
    assert np.abs(matcore.pauli_reconstruct(pc) - h).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 4]), st.integers(0, 2**31 - 1))
def test_pack_preserves_frobenius(n, seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, n), random_hermitian(rng, n)
    va, vb = matcore.pack_hermitian(a), matcore.pack_hermitian(b)
    assert va.shape == (n * n,)
    assert abs(va @ vb - np.trace(a @ b).real) < 1e-10
    assert np.abs(matcore.unpack_hermitian(va, n) - a).max() < 1e-14


def test_operator_json_roundtrip():
    h = random_hermitian(np.random.default_rng(5), 4)
    back = matcore.operator_from_json(json.loads(json.dumps(matcore.operator_to_json(h))))
    assert np.abs(back - h).max() == 0
