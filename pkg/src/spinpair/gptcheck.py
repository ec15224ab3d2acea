"""Separable positivity of two-qubit effects.

An operator is an effect of the minimal tensor product when 0 <= Tr[Pi Omega] <= 1
on every separable Omega. By convexity only pure product states matter. Two
independent routes are offered: a see-saw over pairs of Bloch vectors, and
positivity of the qubit map whose singlet-Choi operator is Pi.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .matcore import as_operator, is_hermitian, pauli_expand
from .povm import validate_povm
from .qubit import QubitMap, map_is_positive

GPT_TOL = 1e-9
SEESAW_TOL = 1e-12
SEESAW_MAX_ITER = 10_000
OCTAHEDRAL_AXES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0],
                            [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
# signs of sigma_a (x) sigma_a in 4 |psi-><psi-| = 1 - XX - YY - ZZ
_SINGLET_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass
class ProductExtremum:
    value: float
    r: np.ndarray
    s: np.ndarray
    maximize: bool
    start_values: list = field(default_factory=list)
    traces: list = field(default_factory=list)

    @property
    def converged(self):
        """Best two restarts agree within 1e-8."""
        vals = sorted(self.start_values, reverse=self.maximize)
        return len(vals) < 2 or abs(vals[0] - vals[1]) <= 1e-8


def _check_hermitian(op):
    op = as_operator(op)
    if op.shape != (4, 4):
        raise ValueError("expected a two-qubit (4x4) operator")
    if not is_hermitian(op):
        raise ValueError("operator must be Hermitian")
    return op


def product_value(op, r, s):
    """Tr[op (rho_r (x) rho_s)] evaluated through Pauli coefficients."""
    T = np.real(pauli_expand(op).as_matrix())
    return float(np.concatenate(([1.0], r)) @ T @ np.concatenate(([1.0], s)))


def min_over_product_states(op, maximize=False, n_random=20, seed=0, keep_traces=False):
    """Extremise Tr[op (rho_r (x) rho_s)] over pure product states by see-saw.

    Restarts from the six octahedral axes plus ``n_random`` seeded points on
    the sphere; the best local extremum wins.
    """
    op = _check_hermitian(op)
    T = np.ascontiguousarray(np.real(pauli_expand(op).as_matrix()))
    rng = np.random.default_rng(seed)
    rand = rng.normal(size=(n_random, 3))
    starts = np.vstack([OCTAHEDRAL_AXES, rand / np.linalg.norm(rand, axis=1)[:, None]])
    sign = -1.0 if maximize else 1.0
    best = None
    start_values = []
    traces = []
    for r0 in starts:
        trace = np.full(2 * SEESAW_MAX_ITER, np.nan) if keep_traces else np.empty(0)
        val, r, s, steps = kernels.seesaw(T, np.ascontiguousarray(r0), sign, SEESAW_TOL,
                                          SEESAW_MAX_ITER, trace)
        start_values.append(float(val))
        if keep_traces:
            traces.append(trace[:steps].copy())
        if best is None or sign * val < sign * best[0]:
            best = (float(val), np.array(r), np.array(s))
    return ProductExtremum(best[0], best[1], best[2], maximize, start_values, traces)


def choi_map_of_effect(op):
    """Qubit map L with op = (id (x) L)(|psi-><psi-|), singlet normalised to unit trace.

    Relative to the unnormalised singlet 1 - XX - YY - ZZ this map is four
    times larger; positivity is unaffected.
    """
    op = _check_hermitian(op)
    T = np.real(pauli_expand(op).as_matrix())
    R = 4 * (_SINGLET_SIGNS[:, None] * T).T
    return QubitMap.from_transfer(R, "choi-of-effect")


def effect_choi_positive(op, tol=GPT_TOL):
    """Tr[op (rho_r (x) rho_s)] >= 0 for all products iff its Choi map is positive."""
    return map_is_positive(choi_map_of_effect(op), tol=tol).positive


@dataclass
class GptCertificate:
    operator_id: str
    min_product_value: float
    max_product_value: float
    worst_product_state: tuple
    choi_map_positive: bool
    choi_complement_positive: bool
    method: str = "seesaw+choi"
    tol: float = GPT_TOL

    @property
    def valid(self):
        return self.min_product_value >= -self.tol and self.max_product_value <= 1 + self.tol

    def to_json(self):
        return {"operator_id": self.operator_id,
                "min_product_value": self.min_product_value,
                "max_product_value": self.max_product_value,
                "worst_product_state": [list(map(float, v)) for v in self.worst_product_state],
                "choi_map_positive": self.choi_map_positive,
                "choi_complement_positive": self.choi_complement_positive,
                "method": self.method, "tol": self.tol, "valid": self.valid}


def certify_effect(op, operator_id="", tol=GPT_TOL):
    op = _check_hermitian(op)
    lo = min_over_product_states(op)
    hi = min_over_product_states(op, maximize=True)
    return GptCertificate(operator_id, lo.value, hi.value, (lo.r, lo.s),
                          effect_choi_positive(op, tol),
                          effect_choi_positive(np.eye(4) - op, tol), tol=tol)


@dataclass
class GptPovmReport:
    certificates: list
    completeness_residual: float
    tol: float

    @property
    def passed(self):
        return self.completeness_residual <= self.tol and all(c.valid for c in self.certificates)

    def to_json(self):
        return {"passed": self.passed, "completeness_residual": self.completeness_residual,
                "certificates": [c.to_json() for c in self.certificates]}


def certify_gpt_povm(p, tol=GPT_TOL):
    if p.arity != 2:
        raise ValueError("GPT certification needs a two-qubit POVM")
    certs = [certify_effect(e, str(list(l)), tol) for l, e in zip(p.labels, p.effects)]
    return GptPovmReport(certs, validate_povm(p).completeness_residual, tol)
