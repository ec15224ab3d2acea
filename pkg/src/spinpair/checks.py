"""Named verification suites used by ``spinpair verify`` and the acceptance tests.

Each suite returns a list of check records: plain dicts carrying the measured
value, the tolerance, the comparison and the pass flag.
"""
import numpy as np

from . import compat, gptcheck, matcore, povm, qubit, sdpsolve
from .matcore import SX, SY, SZ, I2

SQRT3_2 = np.sqrt(3) / 2


def check(name, value, tol, op="<=", **details):
    value = float(value) if isinstance(value, (int, float, np.floating, np.integer)) else value
    if op == "<=":
        passed = value <= tol
    elif op == ">=":
        passed = value >= tol
    elif op == "==":
        passed = value == tol
    else:
        raise ValueError(f"unknown comparison {op}")
    rec = {"check": name, "value": value, "op": op, "tol": tol, "pass": bool(passed)}
    rec.update(details)
    return rec


def _rand_states(seed, n=1000):
    return qubit.random_bloch(np.random.default_rng(seed), n)


def suite_t1(seed=42):
    g = povm.build_antiparallel_povm()
    rep = povm.validate_povm(g, tol=1e-12)
    err = compat.check_reproduction(g, compat.antiparallel(), compat.named_axes("XYZ"), 1.0,
                                    compat.ALL, n_random=1000, seed=seed)
    return [check("t1.min_effect_eigenvalue", min(rep.min_eigenvalues), -1e-12, ">="),
            check("t1.completeness_residual", rep.completeness_residual, 1e-12),
            check("t1.antiparallel_reproduction_error", err, 1e-12, states=1000)]


def suite_t2(seed=42):
    g = povm.build_gpt_povm()
    out = []
    eigs = [matcore.min_eig(e) for e in g.effects]
    out.append(check("t2.max_of_min_eigenvalues", max(eigs), -1e-3, "<="))
    rep = gptcheck.certify_gpt_povm(g)
    mins = [c.min_product_value for c in rep.certificates]
    out.append(check("t2.min_product_value", min(mins), -1e-9, ">="))
    out.append(check("t2.max_product_value", max(c.max_product_value for c in rep.certificates),
                     1 + 1e-9))
    choi = all(c.choi_map_positive for c in rep.certificates)
    out.append(check("t2.choi_route_concurs", int(choi), 1, "=="))
    err = compat.check_reproduction(g, compat.parallel(), compat.named_axes("XYZ"), 1.0,
                                    compat.ALL, n_random=1000, seed=seed)
    out.append(check("t2.parallel_reproduction_error", err, 1e-12, states=1000))
    flip = povm.flip_second_factor(g)
    dev = np.abs(flip.effects - povm.build_antiparallel_povm().effects).max()
    out.append(check("t2.flip_identity_deviation", dev, 1e-12))
    return out


CP_MAP_FAMILY = (("F_mu(0)", lambda: qubit.map_f_mu(0.0)),
                   ("F_mu(0.2)", lambda: qubit.map_f_mu(0.2)),
                   ("F_mu(1/3)", lambda: qubit.map_f_mu(1 / 3)),
                   ("depol(0.5)", lambda: qubit.map_depolarizing(0.5)))


def _cp_map_row(name, lam, parallel_opt, seed):
    axes = compat.named_axes("XYZ")
    cs = compat.build_constraints(axes, compat.with_map(lam), compat.ALL)
    sol = sdpsolve.solve_max_sharpness(cs)
    found = compat.povm_from_solution(cs, sol.effects)
    moved = compat.dual_transfer(found, lam)
    rep = povm.validate_povm(moved, tol=1e-8)
    err = compat.check_reproduction(moved, compat.parallel(), axes, sol.lambda_opt, compat.ALL,
                                    n_random=1000, seed=seed)
    return [check(f"t3.{name}.is_cp", int(qubit.map_is_cp(lam)), 1, "=="),
            check(f"t3.{name}.lambda_excess", sol.lambda_opt - parallel_opt, 2e-3,
                  lambda_opt=sol.lambda_opt, lambda_parallel=parallel_opt, status=sol.status),
            check(f"t3.{name}.dual_min_eigenvalue", min(rep.min_eigenvalues), -1e-9, ">="),
            check(f"t3.{name}.dual_completeness", rep.completeness_residual, 1e-8),
            check(f"t3.{name}.dual_parallel_error", err, 1e-6)]


def parallel_optimum():
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), compat.ALL)
    return sdpsolve.solve_max_sharpness(cs).lambda_opt


def suite_t3(seed=42):
    par = parallel_optimum()
    out = [check("t3.parallel_lambda", abs(par - SQRT3_2), 2e-3, lambda_opt=par)]
    for name, build in CP_MAP_FAMILY:
        out += _cp_map_row(name, build(), par, seed)
    return out


MU_GRID = np.linspace(0, 1, 21)


def suite_prop1(seed=42):
    worst = 0.0
    for mu in MU_GRID:
        lam = compat.fmu_marginal_sharpness(mu, seed=seed)
        worst = max(worst, np.abs(lam - (1 + mu) / 2).max())
    bracket = crossover_bracket(MU_GRID)
    return [check("prop1.sharpness_error", worst, 1e-10, grid=len(MU_GRID)),
            check("prop1.crossover_low", bracket[0], 0.70, ">=", bracket=list(bracket)),
            check("prop1.crossover_high", bracket[1], 0.75, "<=", bracket=list(bracket)),
            check("prop1.crossover_contains_sqrt3_minus_1",
                  int(bracket[0] < np.sqrt(3) - 1 <= bracket[1]), 1, "==")]


def crossover_bracket(grid):
    """Largest grid mu without advantage and the smallest with it."""
    below = [mu for mu in grid if (1 + mu) / 2 <= SQRT3_2]
    above = [mu for mu in grid if (1 + mu) / 2 > SQRT3_2]
    return (float(max(below)), float(min(above)))


def suite_app1(seed=42):
    g = povm.build_antiparallel_povm()
    second = max(np.sort(matcore.eigvalsh(e))[-2] for e in g.effects)
    xi_dev = max(np.abs(g[l] - 0.5 * matcore.projector(povm.xi_vector(*l))).max()
                 for l in g.labels)
    norm_dev = max(abs(np.linalg.norm(povm.xi_vector(*l)) - 1) for l in g.labels)
    edges = povm.orthogonality_graph()
    cube = {(a, b) for a in range(8) for b in range(a + 1, 8) if bin(a ^ b).count("1") == 2}
    nbr = lambda v: sorted({b for a, b in edges if a == v} | {a for a, b in edges if b == v})
    return [check("app1.second_eigenvalue", second, 1e-12),
            check("app1.xi_projector_deviation", xi_dev, 1e-12),
            check("app1.xi_norm_deviation", norm_dev, 1e-12),
            check("app1.edge_count", len(edges), 12, "=="),
            check("app1.face_diagonal_pattern", int(edges == cube), 1, "=="),
            check("app1.xi1_neighbours", int(nbr(1) == [2, 4, 7]), 1, "==", neighbours=nbr(1)),
            check("app1.xi6_neighbours", int(nbr(6) == [0, 3, 5]), 1, "==", neighbours=nbr(6))]


def tabulated_choi_action(i, j, k):
    """Pauli action of the effect's map in the unnormalised-singlet convention."""
    return {"I": (2 * I2 + i * SX + j * SY + k * SZ) / 16,
            "X": -i * (I2 + j * SY + k * SZ) / 16,
            "Y": -j * (I2 + k * SZ + i * SX) / 16,
            "Z": -k * (I2 + i * SX + j * SY) / 16}


# Maps read off effects against the unit-trace singlet are this much larger
# than the same maps against the unnormalised singlet 1 - XX - YY - ZZ.
SINGLET_NORMALISATION = 4.0


def suite_app2(seed=42):
    rng = np.random.default_rng(seed)
    table_dev = 0.0
    state_dev = 0.0
    min_out_eig = np.inf
    agree = True
    for l in povm.outcome_labels(3):
        i, j, k = l
        eff = povm.gpt_effect(*l)
        lam = gptcheck.choi_map_of_effect(eff)
        table = tabulated_choi_action(*l)
        for name, pauli in zip("IXYZ", matcore.PAULIS):
            table_dev = max(table_dev, np.abs(lam(pauli) / SINGLET_NORMALISATION - table[name]).max())
        for s in qubit.random_bloch(rng, 50):
            out = lam(qubit.density_from_bloch(s)) / SINGLET_NORMALISATION
            sx, sy, sz = s
            expect = ((2 - i * sx - j * sy - k * sz) * I2 + i * (1 - j * sy - k * sz) * SX
                      + j * (1 - k * sz - i * sx) * SY + k * (1 - i * sx - j * sy) * SZ) / 32
            state_dev = max(state_dev, np.abs(out - expect).max())
            min_out_eig = min(min_out_eig, matcore.min_eig(out))
        positive = qubit.map_is_positive(lam)
        seesaw_ok = gptcheck.min_over_product_states(eff).value >= -1e-9
        agree &= positive.positive == seesaw_ok
        agree &= positive.positive
    return [check("app2.action_table_deviation", table_dev, 1e-12,
                  normalisation=SINGLET_NORMALISATION),
            check("app2.state_action_deviation", state_dev, 1e-12),
            check("app2.min_output_eigenvalue", min_out_eig, -1e-12, ">="),
            check("app2.choi_and_seesaw_agree", int(agree), 1, "==")]


def suite_app3(seed=42):
    rng = np.random.default_rng(seed)
    g = povm.build_antiparallel_povm()
    labels = np.array(g.labels)
    mix_dev = 0.0
    marg_dev = 0.0
    for mu in MU_GRID:
        c_mu, c_anti, c_par = compat.partial_flip(mu), compat.antiparallel(), compat.parallel()
        for m in qubit.random_bloch(rng, 20):
            p = povm.outcome_probabilities(g, c_mu.state_of(m))
            mix = ((1 + mu) / 2 * povm.outcome_probabilities(g, c_anti.state_of(m))
                   + (1 - mu) / 2 * povm.outcome_probabilities(g, c_par.state_of(m)))
            mix_dev = max(mix_dev, np.abs(p - mix).max())
            for i in (-1, 1):
                got = p[labels[:, 0] == i].sum()
                marg_dev = max(marg_dev, abs(got - 0.5 * (1 + (1 + mu) / 2 * i * m[0])))
    return [check("app3.mixture_decomposition", mix_dev, 1e-12),
            check("app3.x_marginal_formula", marg_dev, 1e-12),
            check("app3.threshold_mu", abs((1 + (np.sqrt(3) - 1)) / 2 - SQRT3_2), 1e-15)]


def tet_ansatz_fit(effects, labels):
    """Least-squares (a, b, c, d) of each effect in the tetrahedral ansatz."""
    swapish = sum(matcore.kron(p, p) for p in (SX, SY, SZ))
    rows = []
    resid = 0.0
    for e, (i, j, k) in zip(effects, labels):
        s = i * j * k
        local = (i * matcore.sym_tensor(SX, I2) + j * matcore.sym_tensor(SY, I2)
                 + k * matcore.sym_tensor(SZ, I2))
        pairs = (i * j * matcore.sym_tensor(SX, SY) + j * k * matcore.sym_tensor(SY, SZ)
                 + k * i * matcore.sym_tensor(SZ, SX))
        basis = np.array([np.eye(4), s * swapish, local, pairs]).reshape(4, 16).T / 4
        A = np.vstack([basis.real, basis.imag])
        y = np.concatenate([e.reshape(16).real, e.reshape(16).imag])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = max(resid, np.abs(A @ coef - y).max())
        rows.append({"label": [int(i), int(j), int(k)], "a": coef[0], "d": coef[1],
                     "b": coef[2], "c": coef[3]})
    return rows, resid


def suite_app4(seed=42):
    tet = povm.build_tet_povm("Z")
    rep = povm.validate_povm(tet, tol=5e-4)
    axes = compat.named_axes("XYZ")
    ens = compat.ensemble_tetrahedral()
    err = compat.check_reproduction(tet, compat.parallel(), axes, 1.0, ens)
    literal = povm.build_tet_povm("X")
    lit_rep = povm.validate_povm(literal, tol=5e-4)
    lit_err = compat.check_reproduction(literal, compat.parallel(), axes, 1.0, ens)
    cs = compat.build_constraints(axes, compat.parallel(), ens)
    sol = sdpsolve.solve_max_sharpness(cs)
    found = compat.povm_from_solution(cs, sol.effects)
    sdp_err = compat.check_reproduction(found, compat.parallel(), axes, sol.lambda_opt, ens)
    fit, fit_resid = tet_ansatz_fit(sol.effects, cs.labels)
    printed = {s: povm.TET_COEFFS[s] for s in (1, -1)}
    deviation = max(max(abs(r[key] - printed[np.prod(r["label"])][key]) for key in "abc")
                    for r in fit)
    d_dev = max(abs(r["d"] - povm.TET_D) for r in fit)
    return [check("app4.min_effect_eigenvalue", min(rep.min_eigenvalues), -5e-4, ">="),
            check("app4.completeness_residual", rep.completeness_residual, 5e-4),
            check("app4.tet_reproduction_error", err, 5e-4),
            check("app4.literal_form_fails", lit_err, 0.1, ">=",
                  literal_min_eigenvalue=min(lit_rep.min_eigenvalues)),
            check("app4.sdp_lambda", sol.lambda_opt, 0.999, ">=", status=sol.status),
            check("app4.sdp_marginal_error", sdp_err, 1e-6),
            {"check": "app4.sdp_vs_printed_coefficients", "value": float(max(deviation, d_dev)),
             "op": "report", "tol": None, "pass": True,
             "ansatz_fit_residual": float(fit_resid),
             "sdp_coefficients": [_coef_json(next(r for r in fit if np.prod(r["label"]) == s))
                                  for s in (1, -1)]}]


def _coef_json(row):
    return {k: (v if k == "label" else float(v)) for k, v in row.items()}


SUITES = {"t1": suite_t1, "t2": suite_t2, "t3": suite_t3, "prop1": suite_prop1,
          "app1": suite_app1, "app2": suite_app2, "app3": suite_app3, "app4": suite_app4}


def run_suite(name, seed=42):
    if name not in SUITES:
        raise KeyError(f"unknown verification target {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed)
