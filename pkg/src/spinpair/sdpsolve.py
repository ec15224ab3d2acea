"""Maximise the sharpness lambda over PSD effects satisfying affine constraints.

For fixed lambda the feasible set is the intersection of an affine subspace
with a product of PSD cones. ``feasible_at`` decides it with Dykstra's
alternating projections; ``solve_max_sharpness`` bisects over lambda.
"""
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .matcore import hermitian_eig

DEFAULT_TOL = 1e-9
BISECTION_WIDTH = 5e-4
MAX_ITER = 200_000
CHECK_EVERY = 25
STALL_WINDOW = 500
STALL_RTOL = 1e-12
RANK_RCOND = 1e-10

STATUS_NAMES = {kernels.FEASIBLE: "feasible",
                kernels.INFEASIBLE_CERT: "infeasible",
                kernels.INFEASIBLE_STALL: "infeasible-stalled",
                kernels.MAX_ITER: "max-iterations",
                kernels.INCONSISTENT: "inconsistent"}


def default_tol():
    """Residual tolerance, overridable through SPINPAIR_TOL."""
    env = os.environ.get("SPINPAIR_TOL")
    return float(env) if env else DEFAULT_TOL


@dataclass
class _Prepared:
    Q: np.ndarray
    pinv: np.ndarray
    rank: int


def _prepare(cs):
    prep = cs.__dict__.get("_prepared")
    if prep is None:
        C = cs.coeffs
        U, S, Vt = np.linalg.svd(C, full_matrices=False)
        rank = int((S > RANK_RCOND * S[0]).sum())
        Vr = Vt[:rank].T
        pinv = Vr @ ((U[:, :rank] / S[:rank]).T)
        Q = np.eye(C.shape[1]) - Vr @ Vr.T
        prep = _Prepared(np.ascontiguousarray(Q), np.ascontiguousarray(pinv), rank)
        cs.__dict__["_prepared"] = prep
    return prep


def uniform_start(cs):
    return cs.vector_from_effects(np.array([np.eye(cs.effect_dim) / cs.num_effects]
                                           * cs.num_effects))


@dataclass
class FeasibilityResult:
    lam: float
    feasible: bool
    status: str
    x: np.ndarray
    residual: float
    iterations: int
    certificate_margin: float

    def __iter__(self):
        # (feasible, effects-or-gap) unpacking
        yield self.feasible
        yield self.x if self.feasible else self.certificate_margin


def feasible_at(cs, lam, tol=None, max_iter=MAX_ITER, x0=None):
    """Is there a PSD point of the constraint slice at sharpness ``lam``?"""
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    tol = default_tol() if tol is None else tol
    prep = _prepare(cs)
    b = cs.rhs(lam)
    shift = prep.pinv @ b
    consistency = float(np.abs(cs.coeffs @ shift - b).max())
    start = uniform_start(cs) if x0 is None else np.asarray(x0, dtype=float)
    if consistency > max(tol, 1e-9):
        return FeasibilityResult(lam, False, STATUS_NAMES[kernels.INCONSISTENT], start,
                                 consistency, 0, consistency)
    x, status, iters, resid, margin = kernels.dykstra(
        prep.Q, np.ascontiguousarray(shift), np.ascontiguousarray(cs.coeffs),
        np.ascontiguousarray(b), np.ascontiguousarray(start), cs.effect_dim,
        cs.num_effects, tol, max_iter, CHECK_EVERY, STALL_WINDOW, STALL_RTOL)
    return FeasibilityResult(lam, status == kernels.FEASIBLE, STATUS_NAMES[status],
                             np.asarray(x), float(resid), int(iters), float(margin))


@dataclass
class BisectionStep:
    lam: float
    status: str
    iterations: int
    residual: float
    phase: str = "bisect"

    @property
    def feasible(self):
        return self.status == "feasible"


@dataclass
class SdpSolution:
    lambda_opt: float
    lambda_upper: float
    effects: np.ndarray
    primal_residual: float
    psd_violation: float
    iterations: int
    status: str
    trace: list = field(default_factory=list)

    def to_json(self, with_effects=True):
        from .matcore import operator_to_json
        out = {"lambda_opt": self.lambda_opt,
               "lambda_opt_rounded": round(self.lambda_opt, 4),
               "bracket": [self.lambda_opt, self.lambda_upper],
               "primal_residual": self.primal_residual,
               "psd_violation": self.psd_violation,
               "iterations": self.iterations, "status": self.status,
               "trace": [[s.lam, s.status, s.iterations, s.residual, s.phase] for s in self.trace],
               "note": "infeasibility is certified by a separating functional or declared "
                       "on residual stagnation; no dual solution is computed"}
        if with_effects:
            out["effects"] = [operator_to_json(e) for e in self.effects]
        return out


def trace_is_monotone(trace):
    """Every certified-feasible lambda lies below every rejected lambda."""
    steps = [s for s in trace if s.phase == "bisect"]
    feas = [s.lam for s in steps if s.feasible]
    rej = [s.lam for s in steps if not s.feasible]
    return not feas or not rej or max(feas) < min(rej)


def solve_max_sharpness(cs, tol=None, width=BISECTION_WIDTH, max_iter=MAX_ITER):
    """Bisection on lambda in [0, 1] over ``feasible_at``.

    Queries that neither converge nor get rejected count as rejections, so the
    returned ``lambda_opt`` is always backed by a PSD point meeting the
    residual tolerance.
    """
    tol = default_tol() if tol is None else tol
    trace = []
    total_iters = 0

    def query(lam, x0=None, qtol=tol, phase="bisect"):
        nonlocal total_iters
        res = feasible_at(cs, lam, qtol, max_iter, x0)
        trace.append(BisectionStep(lam, res.status, res.iterations, res.residual, phase))
        total_iters += res.iterations
        return res

    best = query(0.0)
    if not best.feasible:
        return SdpSolution(0.0, 0.0, cs.effects_from_vector(best.x), best.residual,
                           _psd_violation(cs, best.x), total_iters, "infeasible", trace)
    top = query(1.0)
    lo, hi = 0.0, 1.0
    undecided = False
    if top.feasible:
        best, lo = top, 1.0
    else:
        undecided |= top.status == "max-iterations"
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            res = query(mid, best.x)
            if res.feasible:
                best, lo = res, mid
            else:
                undecided |= res.status == "max-iterations"
                hi = mid
    # polish the accepted point at tighter tolerances
    for factor in (1e-1, 1e-2, 1e-3):
        res = query(lo, best.x, tol * factor, "polish")
        if res.feasible:
            best = res
    x = best.x
    resid = cs.residual(x, lo)
    psd = _psd_violation(cs, x)
    ok = resid <= 1e-8 and psd >= -1e-9
    status = "optimal" if ok and not undecided else ("feasible-only" if ok else "max-iterations")
    return SdpSolution(lo, hi, cs.effects_from_vector(x), resid, psd, total_iters, status, trace)


def _psd_violation(cs, x):
    return float(min(hermitian_eig(e)[0][0] for e in cs.effects_from_vector(x)))
