"""Dense complex linear algebra on 2x2 and 4x4 operators.

Operators are plain ``numpy`` complex arrays. Pauli words are ordered
(I, X, Y, Z) per factor, lexicographic over factors, so for two qubits the
word index is ``4 * a + b`` for ``sigma_a (x) sigma_b``.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import kernels

HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
PAULI_NAMES = "IXYZ"


def as_operator(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 4):
        raise ValueError(f"expected a 2x2 or 4x4 operator, got shape {a.shape}")
    return a


def kron(a, b):
    """Tensor product of two single-qubit operators."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"kron expects two 2x2 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def sym_tensor(u, v):
    """U (x) V + V (x) U."""
    return kron(u, v) + kron(v, u)


def antisym_tensor(u, v):
    """U (x) V - V (x) U."""
    return kron(u, v) - kron(v, u)


def dagger(a):
    return np.conj(np.transpose(a))


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.abs(h - dagger(h)).max() <= tol


def hermitian_eig(h):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of ``h``."""
    h = as_operator(h)
    if not is_hermitian(h):
        raise ValueError("hermitian_eig requires a Hermitian operator")
    w, v = kernels.jacobi_eigh(np.ascontiguousarray(h))
    return np.asarray(w), np.asarray(v)


def hermitian_eig_batch(hs):
    hs = np.ascontiguousarray(np.asarray(hs, dtype=complex))
    if np.abs(hs - np.conj(np.swapaxes(hs, -1, -2))).max() > HERMITIAN_TOL:
        raise ValueError("hermitian_eig_batch requires Hermitian operators")
    return kernels.jacobi_eigh_batch(hs)


def eigvalsh(h):
    return hermitian_eig(h)[0]


def min_eig(h):
    return float(hermitian_eig(h)[0][0])


def trace_inner(a, b):
    """Tr[a b]."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.einsum("ij,ji->", a, b))


def projector(vec):
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


# ----------------------------------------------------------------------------
# Pauli basis
# ----------------------------------------------------------------------------

def pauli_words(order):
    return ["".join(w) for w in product(PAULI_NAMES, repeat=order)]


def pauli_word(word):
    op = PAULIS[PAULI_NAMES.index(word[0])]
    for ch in word[1:]:
        op = np.kron(op, PAULIS[PAULI_NAMES.index(ch)])
    return op


_BASIS = {1: np.array([pauli_word(w) for w in pauli_words(1)]),
          2: np.array([pauli_word(w) for w in pauli_words(2)])}


@dataclass(frozen=True)
class PauliCoefficients:
    order: int
    coeffs: np.ndarray

    @property
    def words(self):
        return pauli_words(self.order)

    def as_matrix(self):
        """Coefficients as a (4,) or (4, 4) array indexed by factor letters."""
        return self.coeffs.reshape((4,) * self.order)

    def __getitem__(self, word):
        return self.coeffs[self.words.index(word)]


def pauli_expand(h):
    """Coefficients c_w with h = sum_w c_w w, c_w = Tr[h w] / dim."""
    h = as_operator(h)
    order = 1 if h.shape[0] == 2 else 2
    basis = _BASIS[order]
    coeffs = np.einsum("wij,ji->w", basis, h) / h.shape[0]
    if np.abs(coeffs.imag).max() <= 1e-12:
        coeffs = coeffs.real.copy()
    return PauliCoefficients(order, coeffs)


def pauli_reconstruct(pc):
    return np.einsum("w,wij->ij", pc.coeffs, _BASIS[pc.order]).astype(complex)


# ----------------------------------------------------------------------------
# Real parametrisation of Hermitian blocks (shared with the SDP engine)
# ----------------------------------------------------------------------------

def pack_hermitian(h):
    h = as_operator(h)
    out = np.empty(h.shape[0] ** 2)
    kernels.pack_block(np.ascontiguousarray(h), out)
    return out


def unpack_hermitian(v, dim):
    return np.asarray(kernels.unpack_block(np.ascontiguousarray(v, dtype=float), dim))


# ----------------------------------------------------------------------------
# Serialisation
# ----------------------------------------------------------------------------

def operator_to_json(a):
    a = as_operator(a)
    return {"dim": int(a.shape[0]),
            "re": [float(x) for x in a.real.ravel()],
            "im": [float(x) for x in a.imag.ravel()]}


def operator_from_json(obj):
    dim = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.size != dim * dim or im.size != dim * dim:
        raise ValueError("operator JSON has the wrong number of entries")
    return as_operator((re + 1j * im).reshape(dim, dim))
