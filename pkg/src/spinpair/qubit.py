"""Qubit states, unsharp spin observables and linear qubit maps."""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .matcore import I2, PAULIS, as_operator, hermitian_eig, pauli_expand

BLOCH_TOL = 1e-12
POSITIVITY_TOL = 1e-10
CP_TOL = 1e-10


def bloch_vector(m):
    m = np.asarray(m, dtype=float).reshape(3)
    if np.linalg.norm(m) > 1 + BLOCH_TOL:
        raise ValueError(f"Bloch vector {m} lies outside the unit ball")
    return m


def unit_vector(n):
    n = np.asarray(n, dtype=float).reshape(3)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ValueError("axis must be non-zero")
    return n / norm


def sigma_dot(v):
    """v . sigma for a real 3-vector."""
    return v[0] * PAULIS[1] + v[1] * PAULIS[2] + v[2] * PAULIS[3]


def density_from_bloch(m):
    """rho_m = (1 + m . sigma) / 2."""
    m = bloch_vector(m)
    return 0.5 * (I2 + sigma_dot(m))


def bloch_from_density(rho):
    c = pauli_expand(as_operator(rho)).coeffs
    return 2 * np.real(c[1:])


def unsharp_effect(axis, outcome, sharpness):
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    if not 0 <= sharpness <= 1:
        raise ValueError(f"sharpness must lie in [0, 1], got {sharpness}")
    return 0.5 * (I2 + sharpness * outcome * sigma_dot(unit_vector(axis)))


@dataclass(frozen=True)
class UnsharpObservable:
    axis: np.ndarray
    sharpness: float

    def effect(self, outcome):
        return unsharp_effect(self.axis, outcome, self.sharpness)

    @property
    def effects(self):
        return {1: self.effect(1), -1: self.effect(-1)}


def born_probability(m, axis, outcome, sharpness):
    """Probability of ``outcome`` for the unsharp spin measurement on rho_m."""
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    if not 0 <= sharpness <= 1:
        raise ValueError(f"sharpness must lie in [0, 1], got {sharpness}")
    m = bloch_vector(m)
    return 0.5 * (1 + sharpness * outcome * float(m @ unit_vector(axis)))


def random_bloch(rng, n=None, pure=False):
    """Uniform samples from the Bloch ball (rejection) or sphere."""
    count = 1 if n is None else n
    out = np.empty((count, 3))
    filled = 0
    while filled < count:
        cand = rng.uniform(-1, 1, size=(2 * (count - filled) + 4, 3))
        norms = np.linalg.norm(cand, axis=1)
        keep = cand[(norms <= 1) & (norms > 1e-9)]
        if pure:
            keep = keep / np.linalg.norm(keep, axis=1)[:, None]
        take = min(len(keep), count - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out[0] if n is None else out


# ----------------------------------------------------------------------------
# Maps
# ----------------------------------------------------------------------------

_TP_ROW = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class QubitMap:
    """Linear Hermiticity-preserving qubit map in affine Bloch form.

    The map sends rho_m to ((c0 + r . m) 1 + (t + M m) . sigma) / 2 where
    (c0, r) is ``trace_row``. ``trace_row = (1, 0, 0, 0)`` is exactly the
    trace-preserving case; other rows arise for duals and for maps read off
    two-qubit effects.
    """
    matrix: np.ndarray
    shift: np.ndarray = field(default_factory=lambda: np.zeros(3))
    label: str = ""
    trace_row: np.ndarray = field(default_factory=lambda: _TP_ROW.copy())

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float).reshape(3, 3))
        object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float).reshape(3))
        object.__setattr__(self, "trace_row", np.asarray(self.trace_row, dtype=float).reshape(4))

    @classmethod
    def from_transfer(cls, R, label=""):
        R = np.asarray(R, dtype=float)
        return cls(R[1:, 1:], R[1:, 0], label, R[0, :])

    @property
    def transfer(self):
        """4x4 real R with map(sigma_a) = sum_b R[b, a] sigma_b."""
        R = np.empty((4, 4))
        R[0, :] = self.trace_row
        R[1:, 0] = self.shift
        R[1:, 1:] = self.matrix
        return R

    @property
    def is_trace_preserving(self):
        return bool(np.array_equal(self.trace_row, _TP_ROW))

    def __call__(self, op):
        op = as_operator(op)
        if op.shape != (2, 2):
            raise ValueError("qubit maps act on 2x2 operators")
        c = pauli_expand(op).coeffs
        out = self.transfer @ c
        return np.einsum("a,aij->ij", out, np.array(PAULIS))

    def apply_bloch(self, m):
        m = np.asarray(m, dtype=float)
        return self.shift + self.matrix @ m

    def compose(self, other):
        """self after other."""
        return QubitMap.from_transfer(self.transfer @ other.transfer,
                                      f"{self.label}*{other.label}")


def map_identity():
    return QubitMap(np.eye(3), label="id")


def map_spin_flip():
    return QubitMap(-np.eye(3), label="F")


def map_f_mu(mu):
    """Partial spin flip rho_m -> (1 - mu m . sigma) / 2."""
    if not 0 <= mu <= 1:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    return QubitMap(-mu * np.eye(3), label=f"F_mu({mu:g})")


def map_depolarizing(p):
    """rho -> (1 - p) rho + p 1/2, a channel for p in [0, 4/3]."""
    if not 0 <= p <= 4 / 3:
        raise ValueError(f"depolarizing parameter must lie in [0, 4/3], got {p}")
    return QubitMap((1 - p) * np.eye(3), label=f"depol({p:g})")


def map_dual(lam):
    """Dual with respect to the trace pairing; the transfer matrix transposes."""
    return QubitMap.from_transfer(lam.transfer.T, f"dual({lam.label})")


def map_apply_on_second(lam, op):
    """(id (x) lam)(op) for a 4x4 operator."""
    op = as_operator(op)
    if op.shape != (4, 4):
        raise ValueError("map_apply_on_second expects a 4x4 operator")
    T = pauli_expand(op).as_matrix()
    T2 = T @ lam.transfer.T
    basis = np.array(PAULIS)
    return np.einsum("ab,aij,bkl->ikjl", T2, basis, basis).reshape(4, 4)


def map_choi(lam):
    """Unit-trace Choi operator (id (x) lam)(|phi+><phi+|) for TP maps.

    Built from matrix units: (1/2) sum_ij |i><j| (x) lam(|i><j|).
    """
    out = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1
            out += 0.5 * np.kron(unit, lam(unit))
    return out


def map_is_cp(lam, tol=CP_TOL):
    return bool(hermitian_eig(map_choi(lam))[0][0] >= -tol)


@lru_cache(maxsize=4)
def icosphere(subdivisions=4):
    """Vertices of a subdivided icosahedron (2562 points at level 4)."""
    t = (1 + 5 ** 0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts)


@dataclass(frozen=True)
class PositivityResult:
    positive: bool
    excess: float
    certificate: np.ndarray

    def __bool__(self):
        return self.positive


def _positivity_objective(lam, pts):
    """|t + M m| - (c0 + r . m); the map is positive iff this is <= 0 on the sphere."""
    v = lam.shift + pts @ lam.matrix.T
    return np.linalg.norm(v, axis=-1) - (lam.trace_row[0] + pts @ lam.trace_row[1:])


def _ascend(lam, m, iters=500):
    f = _positivity_objective(lam, m)
    step = 0.5
    for _ in range(iters):
        v = lam.shift + lam.matrix @ m
        nv = np.linalg.norm(v)
        if nv == 0:
            break
        grad = lam.matrix.T @ v / nv - lam.trace_row[1:]
        grad -= (grad @ m) * m
        if np.linalg.norm(grad) < 1e-14:
            break
        while step > 1e-16:
            cand = m + step * grad
            cand /= np.linalg.norm(cand)
            fc = _positivity_objective(lam, cand)
            if fc > f:
                m, f = cand, fc
                step *= 2
                break
            step *= 0.5
        else:
            break
    return m, f


def map_is_positive(lam, tol=POSITIVITY_TOL):
    """Does ``lam`` send every qubit state to a positive operator?

    A pure input rho_m goes to ((c0 + r.m) 1 + (t + M m).sigma)/2, which is PSD
    iff |t + M m| <= c0 + r.m. The certificate is the worst unit vector.
    """
    if not lam.shift.any() and not lam.trace_row[1:].any():
        w, v = kernels.jacobi_eigh(np.ascontiguousarray(lam.matrix.T @ lam.matrix, dtype=complex))
        cert = np.real(v[:, -1])
        cert = cert / np.linalg.norm(cert)
        excess = float(np.sqrt(max(w[-1], 0.0)) - lam.trace_row[0])
    else:
        grid = icosphere(4)
        vals = _positivity_objective(lam, grid)
        best_idx = np.argsort(vals)[-3:]
        excess, cert = -np.inf, None
        for idx in best_idx:
            m, f = _ascend(lam, grid[idx].copy())
            if f > excess:
                excess, cert = float(f), m
    return PositivityResult(excess <= tol, excess, cert)


# ----------------------------------------------------------------------------
# Serialisation
# ----------------------------------------------------------------------------

def map_to_json(lam):
    out = {"label": lam.label,
           "M": [float(x) for x in lam.matrix.ravel()],
           "t": [float(x) for x in lam.shift]}
    if not lam.is_trace_preserving:
        out["trace_row"] = [float(x) for x in lam.trace_row]
    return out


def map_from_json(obj):
    M = np.asarray(obj["M"], dtype=float)
    t = np.asarray(obj["t"], dtype=float)
    if M.size != 9 or t.size != 3:
        raise ValueError("map JSON needs 9 entries in M and 3 in t")
    row = obj.get("trace_row", _TP_ROW)
    return QubitMap(M.reshape(3, 3), t, obj.get("label", ""), row)
