"""POVM containers and the explicit two-qubit measurement families."""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .matcore import (I2, SX, SY, SZ, as_operator, hermitian_eig, kron,
                      operator_from_json, operator_to_json, sym_tensor,
                      antisym_tensor, trace_inner)
from .qubit import map_apply_on_second, map_spin_flip

POVM_TOL = 1e-10

# Bell basis in the order used for the xi vectors: psi-, phi-, phi+, psi+
_S = 1 / np.sqrt(2)
PHI_PLUS = np.array([_S, 0, 0, _S], dtype=complex)
PHI_MINUS = np.array([_S, 0, 0, -_S], dtype=complex)
PSI_PLUS = np.array([0, _S, _S, 0], dtype=complex)
PSI_MINUS = np.array([0, _S, -_S, 0], dtype=complex)
BELL_BASIS = np.array([PSI_MINUS, PHI_MINUS, PHI_PLUS, PSI_PLUS])

# Printed (5-decimal) coefficients of the tetrahedral-ensemble measurement,
# keyed by the sign product i*j*k.
TET_D = 0.11582
TET_COEFFS = {1: {"a": 0.84746, "b": 0.38850, "c": 0.22430},
              -1: {"a": 0.15265, "b": -0.01350, "c": 0.00779}}


def outcome_labels(n):
    """All sign strings of length n, lexicographic with -1 before +1."""
    return [tuple(l) for l in product((-1, 1), repeat=n)]


@dataclass(frozen=True)
class Povm:
    arity: int
    labels: list
    effects: np.ndarray
    gpt_mode: bool = False
    name: str = ""

    def __post_init__(self):
        effects = np.asarray(self.effects, dtype=complex)
        dim = 2 ** self.arity
        if effects.ndim != 3 or effects.shape[1:] != (dim, dim):
            raise ValueError(f"effects must have shape (n, {dim}, {dim}), got {effects.shape}")
        if len(self.labels) != effects.shape[0]:
            raise ValueError("one label per effect is required")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", [tuple(int(a) for a in l) for l in self.labels])

    @property
    def dim(self):
        return 2 ** self.arity

    @property
    def width(self):
        return len(self.labels[0]) if self.labels else 0

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label):
        return self.effects[self.labels.index(tuple(label))]


@dataclass
class ValidationReport:
    min_eigenvalues: list
    completeness_residual: float
    gpt_mode: bool
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        complete = self.completeness_residual <= self.tol
        if self.gpt_mode:
            self.passed = complete
        else:
            self.passed = complete and min(self.min_eigenvalues) >= -self.tol


def validate_povm(p, tol=POVM_TOL):
    """Per-effect minimum eigenvalue and the completeness residual.

    In ``gpt_mode`` effects may have negative eigenvalues; their separable
    positivity is certified separately by :mod:`spinpair.gptcheck`.
    """
    mins = [float(hermitian_eig(e)[0][0]) for e in p.effects]
    resid = float(np.abs(p.effects.sum(axis=0) - np.eye(p.dim)).max())
    return ValidationReport(mins, resid, p.gpt_mode, tol)


# ----------------------------------------------------------------------------
# Measurement families
# ----------------------------------------------------------------------------

_II = kron(I2, I2)


def _pair_terms(i, j, k):
    return (i * j * sym_tensor(SX, SY) + j * k * sym_tensor(SY, SZ)
            + k * i * sym_tensor(SZ, SX))


def parallel_effect(i, j, k):
    local = i * sym_tensor(SX, I2) + j * sym_tensor(SY, I2) + k * sym_tensor(SZ, I2)
    return (4 * _II + np.sqrt(3) * local + _pair_terms(i, j, k)) / 32


def antiparallel_effect(i, j, k):
    local = i * antisym_tensor(SX, I2) + j * antisym_tensor(SY, I2) + k * antisym_tensor(SZ, I2)
    return (2 * _II + local - _pair_terms(i, j, k)) / 16


def gpt_effect(i, j, k):
    local = i * sym_tensor(SX, I2) + j * sym_tensor(SY, I2) + k * sym_tensor(SZ, I2)
    return (2 * _II + local + _pair_terms(i, j, k)) / 16


def tet_effect(i, j, k, third_local="Z"):
    """Tetrahedral-ensemble effect from the printed coefficients.

    ``third_local`` selects the operator multiplying k in the local term; "Z"
    is the symmetric form, "X" the form as printed.
    """
    s = i * j * k
    co = TET_COEFFS[s]
    third = {"Z": SZ, "X": SX}[third_local]
    local = i * sym_tensor(SX, I2) + j * sym_tensor(SY, I2) + k * sym_tensor(third, I2)
    swapish = kron(SX, SX) + kron(SY, SY) + kron(SZ, SZ)
    return (co["a"] * _II + TET_D * s * swapish + co["b"] * local
            + co["c"] * _pair_terms(i, j, k)) / 4


def _family(builder, name, gpt_mode=False, **kw):
    labels = outcome_labels(3)
    effects = np.array([builder(*l, **kw) for l in labels])
    return Povm(2, labels, effects, gpt_mode, name)


def build_parallel_povm():
    return _family(parallel_effect, "parallel")


def build_antiparallel_povm():
    return _family(antiparallel_effect, "antiparallel")


def build_gpt_povm():
    return _family(gpt_effect, "gpt", gpt_mode=True)


def build_tet_povm(third_local="Z"):
    return _family(tet_effect, f"tet[{third_local}]", third_local=third_local)


def trivial_povm(arity=2):
    return Povm(arity, [()], np.eye(2 ** arity)[None], False, "trivial")


# ----------------------------------------------------------------------------
# Statistics
# ----------------------------------------------------------------------------

def outcome_probabilities(p, state):
    state = as_operator(state)
    if state.shape != (p.dim, p.dim):
        raise ValueError(f"state dimension {state.shape} does not match POVM dimension {p.dim}")
    return np.real(np.einsum("nij,ji->n", p.effects, state))


def marginal_distribution(p, state, axis_index):
    """{a: sum over the other label slots of Tr[state pi]} for slot ``axis_index``."""
    if not 0 <= axis_index < p.width:
        raise IndexError(f"axis index {axis_index} out of range for labels of width {p.width}")
    probs = outcome_probabilities(p, state)
    out = {-1: 0.0, 1: 0.0}
    for lab, pr in zip(p.labels, probs):
        out[lab[axis_index]] += pr
    return out


# ----------------------------------------------------------------------------
# Rank-one structure of the antiparallel measurement
# ----------------------------------------------------------------------------

def _check_signs(*signs):
    for s in signs:
        if s not in (1, -1):
            raise ValueError(f"labels must be +1 or -1, got {s}")


def xi_index(i, j, k):
    _check_signs(i, j, k)
    return 2 * (i + 1) + (j + 1) + (k + 1) // 2


def xi_vector(i, j, k):
    """Unit vector with antiparallel_effect(i, j, k) = |xi><xi| / 2."""
    _check_signs(i, j, k)
    amps = np.array([1, -i, 1j * j, k], dtype=complex) / 2
    return amps @ BELL_BASIS


def orthogonality_graph(tol=1e-12):
    """Edges (l, l') of the xi vectors that are orthogonal within ``tol``."""
    vecs = {xi_index(*l): xi_vector(*l) for l in outcome_labels(3)}
    edges = set()
    for a in range(8):
        for b in range(a + 1, 8):
            if abs(np.vdot(vecs[a], vecs[b])) <= tol:
                edges.add((a, b))
    return edges


def flip_second_factor(p):
    """Apply id (x) F to every effect, keeping labels."""
    if p.arity != 2:
        raise ValueError("flip_second_factor needs a two-qubit POVM")
    flip = map_spin_flip()
    effects = np.array([map_apply_on_second(flip, e) for e in p.effects])
    return Povm(2, p.labels, effects, p.gpt_mode, f"flip({p.name})")


# ----------------------------------------------------------------------------
# Serialisation
# ----------------------------------------------------------------------------

def povm_to_json(p):
    return {"arity": p.arity, "gpt_mode": p.gpt_mode, "name": p.name,
            "outcomes": [{"label": list(l), "effect": operator_to_json(e)}
                         for l, e in zip(p.labels, p.effects)]}


def povm_from_json(obj):
    labels = [o["label"] for o in obj["outcomes"]]
    effects = np.array([operator_from_json(o["effect"]) for o in obj["outcomes"]])
    return Povm(int(obj["arity"]), labels, effects, bool(obj.get("gpt_mode", False)),
                obj.get("name", ""))


def effect_probability(effect, state):
    return float(np.real(trace_inner(effect, state)))
