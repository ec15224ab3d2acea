"""Configurations, ensembles, reproduction checks and SDP constraint systems."""
from dataclasses import dataclass, field

import numpy as np

from .matcore import kron, pack_hermitian, pauli_word, pauli_words, unpack_hermitian
from .povm import Povm, build_antiparallel_povm, outcome_labels, outcome_probabilities
from .qubit import (QubitMap, density_from_bloch, map_apply_on_second, map_dual,
                    map_f_mu, map_from_json, map_identity, map_spin_flip,
                    map_to_json, random_bloch, unit_vector)

NAMED_AXES = {"X": (1.0, 0.0, 0.0), "Y": (0.0, 1.0, 0.0), "Z": (0.0, 0.0, 1.0)}
PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def named_axes(spec):
    """'XYZ' -> list of unit vectors."""
    return [np.array(NAMED_AXES[ch.upper()]) for ch in spec]


# ----------------------------------------------------------------------------
# Configurations and ensembles
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    """One copy rho_m, or two copies rho_m (x) map(rho_m)."""
    copies: int
    map: QubitMap = None
    label: str = ""

    def __post_init__(self):
        if self.copies not in (1, 2):
            raise ValueError("only one- and two-copy configurations are supported")
        if self.copies == 2 and self.map is None:
            object.__setattr__(self, "map", map_identity())

    @property
    def dim(self):
        return 2 ** self.copies

    def state_of(self, m):
        rho = density_from_bloch(m)
        if self.copies == 1:
            return rho
        return kron(rho, self.map(rho))

    def to_json(self):
        out = {"copies": self.copies, "label": self.label}
        if self.copies == 2:
            out["map"] = map_to_json(self.map)
        return out

    @classmethod
    def from_json(cls, obj):
        lam = map_from_json(obj["map"]) if "map" in obj else None
        return cls(int(obj["copies"]), lam, obj.get("label", ""))


def single_copy():
    return Configuration(1, label="single")


def parallel():
    return Configuration(2, map_identity(), "parallel")


def antiparallel():
    return Configuration(2, map_spin_flip(), "antiparallel")


def partial_flip(mu):
    return Configuration(2, map_f_mu(mu), f"fmu:{mu:g}")


def with_map(lam):
    return Configuration(2, lam, f"map:{lam.label}")


@dataclass(frozen=True)
class Ensemble:
    """A finite list of Bloch vectors, or every state when ``states`` is None."""
    label: str
    states: np.ndarray = None

    @property
    def is_all(self):
        return self.states is None

    def to_json(self):
        states = None if self.is_all else [list(map(float, m)) for m in self.states]
        return {"label": self.label, "states": states}

    @classmethod
    def from_json(cls, obj):
        states = obj.get("states")
        if states is None:
            return ALL
        return cls(obj.get("label", "file"), _checked_states(states))


def _checked_states(states):
    states = np.asarray(states, dtype=float).reshape(-1, 3)
    if (np.linalg.norm(states, axis=1) > 1 + 1e-12).any():
        raise ValueError("ensemble contains vectors outside the Bloch ball")
    return states


ALL = Ensemble("all", None)


def ensemble_great_circle(n, plane="xz"):
    """n equally spaced pure states on a great circle, starting on the first axis."""
    if n < 3:
        raise ValueError("a great-circle ensemble needs at least 3 states")
    if isinstance(plane, str):
        a, b = PLANES[plane.lower()]
        e1, e2 = np.eye(3)[a], np.eye(3)[b]
    else:
        e1, e2 = (unit_vector(v) for v in plane)
        e2 = e2 - (e2 @ e1) * e1
        e2 = e2 / np.linalg.norm(e2)
    ang = 2 * np.pi * np.arange(n) / n
    states = np.outer(np.cos(ang), e1) + np.outer(np.sin(ang), e2)
    states[np.abs(states) < 1e-15] = 0.0
    name = plane if isinstance(plane, str) else "custom"
    return Ensemble(f"gc:{n},{name}", states)


def ensemble_tetrahedral():
    signs = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return Ensemble("tet", signs / np.sqrt(3))


def ensemble_octahedral():
    return Ensemble("oct", np.vstack([np.eye(3), -np.eye(3)])[[0, 3, 1, 4, 2, 5]])


# ----------------------------------------------------------------------------
# Checks on fixed POVMs
# ----------------------------------------------------------------------------

def _states_for(ensemble, n_random, seed):
    if ensemble.is_all:
        return random_bloch(np.random.default_rng(seed), n_random)
    return ensemble.states


def marginal_errors(p, config, axes, sharpness, states):
    """|marginal - (1 + lambda a m.n)/2| for every (state, axis, outcome)."""
    if p.width != len(axes):
        raise ValueError(f"POVM labels have width {p.width} but {len(axes)} axes were given")
    if p.dim != config.dim:
        raise ValueError("POVM and configuration act on different numbers of qubits")
    axes = np.array([unit_vector(n) for n in axes])
    labels = np.array(p.labels)
    errs = np.empty((len(states), len(axes), 2))
    for si, m in enumerate(states):
        probs = outcome_probabilities(p, config.state_of(m))
        for j, n in enumerate(axes):
            for ai, a in enumerate((-1, 1)):
                got = probs[labels[:, j] == a].sum()
                errs[si, j, ai] = abs(got - 0.5 * (1 + sharpness * a * (m @ n)))
    return errs


def check_reproduction(p, config, axes, sharpness, ensemble, n_random=1000, seed=42):
    """Maximum marginal error over the ensemble (or seeded random states for ALL)."""
    states = _states_for(ensemble, n_random, seed)
    return float(marginal_errors(p, config, axes, sharpness, states).max())


def dual_transfer(p, lam):
    """Effects (id (x) lam*)(pi): statistics on rho (x) lam(rho) move to rho (x) rho."""
    if p.arity != 2:
        raise ValueError("dual transfer needs a two-qubit POVM")
    dual = map_dual(lam)
    effects = np.array([map_apply_on_second(dual, e) for e in p.effects])
    return Povm(2, p.labels, effects, p.gpt_mode, f"dual[{lam.label}]({p.name})")


def fmu_marginal_sharpness(mu, n_states=20, seed=7):
    """Sharpness per axis of the antiparallel measurement on rho (x) F_mu(rho).

    Solves p(+1) - 1/2 = lambda * (m . n) / 2 by least squares over
    ``n_states`` random states; the system is exactly consistent.
    """
    p = build_antiparallel_povm()
    config = partial_flip(mu)
    states = random_bloch(np.random.default_rng(seed), n_states)
    probs = np.array([outcome_probabilities(p, config.state_of(m)) for m in states])
    labels = np.array(p.labels)
    out = []
    for j, n in enumerate(named_axes("XYZ")):
        y = probs[:, labels[:, j] == 1].sum(axis=1) - 0.5
        x = 0.5 * states @ n
        out.append(float(np.linalg.lstsq(x[:, None], y, rcond=None)[0][0]))
    return np.array(out)


# ----------------------------------------------------------------------------
# Constraint systems
# ----------------------------------------------------------------------------

# monomials of a degree-2 polynomial in (m_x, m_y, m_z); index 0 is the constant
MONOMIALS = [()] + [(i,) for i in range(3)] + [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)]
_MONO_INDEX = {mono: n for n, mono in enumerate(MONOMIALS)}


def _monomial_of(a, c):
    """Monomial index of u_a u_c with u = (1, m_x, m_y, m_z)."""
    key = tuple(sorted(i - 1 for i in (a, c) if i > 0))
    return _MONO_INDEX[key]


def hermitian_basis(dim):
    """Matrices B_p with H(x) = sum_p x_p B_p for the packed parametrisation."""
    return np.array([unpack_hermitian(e, dim) for e in np.eye(dim * dim)])


@dataclass
class ConstraintSystem:
    """Rows ``coeffs @ x + lam_coeffs * lambda = targets`` over packed effects.

    ``x`` stacks the packed Hermitian effects in label order.
    """
    num_effects: int
    effect_dim: int
    coeffs: np.ndarray
    lam_coeffs: np.ndarray
    targets: np.ndarray
    row_tags: list
    labels: list
    metadata: dict = field(default_factory=dict)

    @property
    def num_vars(self):
        return self.num_effects * self.effect_dim ** 2

    def rhs(self, lam):
        return self.targets - self.lam_coeffs * lam

    def residual(self, x, lam):
        return float(np.abs(self.coeffs @ x - self.rhs(lam)).max())

    def effects_from_vector(self, x):
        nv = self.effect_dim ** 2
        return np.array([unpack_hermitian(x[k * nv:(k + 1) * nv], self.effect_dim)
                         for k in range(self.num_effects)])

    def vector_from_effects(self, effects):
        return np.concatenate([pack_hermitian(e) for e in effects])

    def to_json(self):
        return {"num_effects": self.num_effects, "effect_dim": self.effect_dim,
                "parametrization": "hermitian-real: diag, then sqrt2*Re, sqrt2*Im of upper entries",
                "rows": [{"coeffs": [float(v) for v in row], "lam": float(lc),
                          "target": float(t), "tag": list(tag)}
                         for row, lc, t, tag in zip(self.coeffs, self.lam_coeffs,
                                                    self.targets, self.row_tags)],
                "labels": [list(l) for l in self.labels],
                "metadata": self.metadata}

    @classmethod
    def from_json(cls, obj):
        rows = obj["rows"]
        return cls(int(obj["num_effects"]), int(obj["effect_dim"]),
                   np.array([r["coeffs"] for r in rows], dtype=float),
                   np.array([r["lam"] for r in rows], dtype=float),
                   np.array([r["target"] for r in rows], dtype=float),
                   [tuple(r["tag"]) for r in rows],
                   [tuple(l) for l in obj["labels"]], obj.get("metadata", {}))


def _state_functional(state, basis):
    """x -> Tr[state H(x)] as a real row vector."""
    return np.real(np.einsum("ij,pji->p", state, basis))


def build_constraints(axes, config, ensemble):
    """Affine constraints for joint measurability of the unsharp axes.

    Finite ensembles give one row per (state, axis, outcome). For ``ALL`` the
    marginal Tr[(rho_m (x) map(rho_m)) pi] is a degree-2 polynomial in m and
    its ten coefficients are matched against (1 + lambda a m.n)/2. Completeness
    rows come last.
    """
    axes = [unit_vector(n) for n in axes]
    labels = outcome_labels(len(axes))
    n_eff = len(labels)
    d = config.dim
    nv = d * d
    basis = hermitian_basis(d)
    rows, lam_coeffs, targets, tags = [], [], [], []

    def marginal_row(j, a, functional):
        row = np.zeros(n_eff * nv)
        for k, lab in enumerate(labels):
            if lab[j] == a:
                row[k * nv:(k + 1) * nv] = functional
        return row

    if ensemble.is_all:
        words = pauli_words(config.copies)
        # pauli_fn[w] : x -> coefficient of word w in H(x)
        pauli_fn = np.array([_state_functional(pauli_word(w), basis) / d for w in words])
        if config.copies == 1:
            poly = np.zeros((len(MONOMIALS), nv))
            for a in range(4):
                poly[_monomial_of(a, 0)] += pauli_fn[a]
        else:
            R = config.map.transfer
            poly = np.zeros((len(MONOMIALS), nv))
            for a in range(4):
                for b in range(4):
                    for c in range(4):
                        if R[b, c] != 0:
                            poly[_monomial_of(a, c)] += R[b, c] * pauli_fn[4 * a + b]
        for j, n in enumerate(axes):
            for a in (-1, 1):
                for mi, mono in enumerate(MONOMIALS):
                    rows.append(marginal_row(j, a, poly[mi]))
                    if mono == ():
                        targets.append(0.5)
                        lam_coeffs.append(0.0)
                    elif len(mono) == 1:
                        targets.append(0.0)
                        lam_coeffs.append(-0.5 * a * n[mono[0]])
                    else:
                        targets.append(0.0)
                        lam_coeffs.append(0.0)
                    tags.append(("poly", j, a, mi))
    else:
        for si, m in enumerate(ensemble.states):
            fn = _state_functional(config.state_of(m), basis)
            for j, n in enumerate(axes):
                for a in (-1, 1):
                    rows.append(marginal_row(j, a, fn))
                    targets.append(0.5)
                    lam_coeffs.append(-0.5 * a * float(m @ n))
                    tags.append(("state", j, a, si))

    ident = pack_hermitian(np.eye(d))
    for pidx in range(nv):
        row = np.zeros(n_eff * nv)
        row[pidx::nv] = 1.0
        rows.append(row)
        targets.append(float(ident[pidx]))
        lam_coeffs.append(0.0)
        tags.append(("complete", pidx, 0, 0))

    meta = {"axes": [list(map(float, n)) for n in axes],
            "configuration": config.to_json(),
            "ensemble": ensemble.to_json()}
    return ConstraintSystem(n_eff, d, np.array(rows), np.array(lam_coeffs),
                            np.array(targets), tags, labels, meta)


def povm_from_solution(cs, effects, name="sdp"):
    arity = 1 if cs.effect_dim == 2 else 2
    return Povm(arity, cs.labels, effects, False, name)

