import json

import numpy as np
import pytest

from spinpair import compat, povm, sdpsolve


def single(axes):
    return compat.build_constraints(compat.named_axes(axes), compat.single_copy(), compat.ALL)


def test_feasibility_around_the_xy_threshold():
    cs = single("XY")
    ok, x = sdpsolve.feasible_at(cs, 0.70)
    assert ok
    assert cs.residual(x, 0.70) < 1e-9
    ok, gap = sdpsolve.feasible_at(cs, 0.72)
    assert not ok
    assert gap > 0


def test_lambda_zero_is_always_feasible():
    for cs in (single("XYZ"),
               compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), compat.ALL)):
        res = sdpsolve.feasible_at(cs, 0.0)
        assert res.feasible


def test_lambda_out_of_range():
    with pytest.raises(ValueError):
        sdpsolve.feasible_at(single("XY"), 1.5)


def test_inconsistent_system_is_reported():
    cs = single("XY")
    bad = compat.ConstraintSystem(cs.num_effects, cs.effect_dim,
                                  np.vstack([cs.coeffs, cs.coeffs[:1]]),
                                  np.append(cs.lam_coeffs, 0.0), np.append(cs.targets, 0.9),
                                  cs.row_tags + [("extra", 0, 0, 0)], cs.labels)
    assert sdpsolve.feasible_at(bad, 0.3).status == "inconsistent"
    assert sdpsolve.solve_max_sharpness(bad).status == "infeasible"


@pytest.mark.parametrize("axes, expect", [("XY", 1 / np.sqrt(2)), ("XYZ", 1 / np.sqrt(3))])
def test_single_copy_thresholds(axes, expect):
    cs = single(axes)
    sol = sdpsolve.solve_max_sharpness(cs)
    assert abs(sol.lambda_opt - expect) < 2e-3
    assert sol.lambda_opt <= expect + 1e-12 <= sol.lambda_upper
    assert sol.lambda_upper - sol.lambda_opt <= sdpsolve.BISECTION_WIDTH
    assert sol.status == "optimal"
    assert sol.primal_residual <= 1e-8 and sol.psd_violation >= -1e-9
    x = cs.vector_from_effects(sol.effects)
    assert cs.residual(x, sol.lambda_opt) <= 1e-8
    assert sdpsolve.trace_is_monotone(sol.trace)


def test_returned_effects_reproduce_marginals():
    cs = single("XYZ")
    sol = sdpsolve.solve_max_sharpness(cs)
    found = compat.povm_from_solution(cs, sol.effects)
    assert povm.validate_povm(found, tol=1e-8).passed
    err = compat.check_reproduction(found, compat.single_copy(), compat.named_axes("XYZ"),
                                    sol.lambda_opt, compat.ALL, n_random=300)
    assert err <= 1e-6


def test_trace_monotonicity_helper():
    S = sdpsolve.BisectionStep
    good = [S(0.0, "feasible", 1, 0.0), S(1.0, "infeasible", 1, 1.0), S(0.5, "feasible", 1, 0.0)]
    bad = good + [S(0.7, "feasible", 1, 0.0), S(0.6, "max-iterations", 1, 1.0)]
    assert sdpsolve.trace_is_monotone(good)
    assert not sdpsolve.trace_is_monotone(bad)
    # polish steps do not take part
    assert sdpsolve.trace_is_monotone(good + [S(0.9, "feasible", 1, 0.0, "polish")])


def test_determinism_across_identical_systems():
    a = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(),
                                 compat.ensemble_octahedral())
    b = compat.ConstraintSystem.from_json(json.loads(json.dumps(a.to_json())))
    sa, sb = sdpsolve.solve_max_sharpness(a), sdpsolve.solve_max_sharpness(b)
    assert json.dumps(sa.to_json()) == json.dumps(sb.to_json())


def test_ensemble_relaxation():
    base = sdpsolve.solve_max_sharpness(single("XYZ")).lambda_opt
    for ens in (compat.ensemble_octahedral(), compat.ensemble_tetrahedral(),
                compat.ensemble_great_circle(6, "xy")):
        cs = compat.build_constraints(compat.named_axes("XYZ"), compat.single_copy(), ens)
        assert sdpsolve.solve_max_sharpness(cs).lambda_opt >= base - 2e-3


def test_small_budget_keeps_a_certified_lower_bound():
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), compat.ALL)
    sol = sdpsolve.solve_max_sharpness(cs, max_iter=50)
    assert "max-iterations" in [s.status for s in sol.trace]
    assert sol.status == "feasible-only"
    assert sol.lambda_opt <= np.sqrt(3) / 2
    assert cs.residual(cs.vector_from_effects(sol.effects), sol.lambda_opt) <= 1e-8
    assert sol.psd_violation >= -1e-9


def test_tolerance_override(monkeypatch):
    assert sdpsolve.default_tol() == sdpsolve.DEFAULT_TOL
    monkeypatch.setenv("SPINPAIR_TOL", "1e-7")
    assert sdpsolve.default_tol() == 1e-7
    res = sdpsolve.feasible_at(single("XY"), 0.5)
    assert res.feasible and res.residual < 1e-7


def test_solution_json():
    sol = sdpsolve.solve_max_sharpness(single("XY"))
    doc = json.loads(json.dumps(sol.to_json()))
    assert doc["lambda_opt_rounded"] == round(sol.lambda_opt, 4)
    assert len(doc["effects"]) == 4
    assert doc["bracket"][0] <= doc["bracket"][1]
    assert "note" in doc
