import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinpair import compat, povm, qubit
from spinpair.qubit import QubitMap


def random_effects(rng, n, d):
    a = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return (a + a.conj().transpose(0, 2, 1)) / 2


def monomial_values(m):
    return np.array([np.prod([m[i] for i in mono]) for mono in compat.MONOMIALS])


def direct_marginal(cs, effects, config, m, j, a):
    state = config.state_of(m)
    return sum(np.trace(e @ state).real for e, l in zip(effects, cs.labels) if l[j] == a)


CONFIGS = [compat.single_copy(), compat.parallel(), compat.antiparallel(),
           compat.partial_flip(0.4), compat.with_map(qubit.map_depolarizing(0.5)),
           compat.with_map(QubitMap(np.diag([0.5, -0.2, 0.3]), [0.1, 0.0, 0.2],
                                    trace_row=[0.9, 0.1, 0.0, -0.2]))]


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.label)
def test_polynomial_rows_match_direct_evaluation(config):
    rng = np.random.default_rng(0)
    axes = compat.named_axes("XYZ")
    cs = compat.build_constraints(axes, config, compat.ALL)
    effects = random_effects(rng, cs.num_effects, config.dim)
    vals = cs.coeffs @ cs.vector_from_effects(effects)
    worst = 0.0
    for m in qubit.random_bloch(rng, 30):
        mono = monomial_values(m)
        for j in range(3):
            for a in (-1, 1):
                idx = [r for r, t in enumerate(cs.row_tags) if t[:3] == ("poly", j, a)]
                poly = vals[idx] @ mono
                worst = max(worst, abs(poly - direct_marginal(cs, effects, config, m, j, a)))
    assert worst <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_polynomial_rows_property(seed, mu):
    rng = np.random.default_rng(seed)
    config = compat.partial_flip(mu)
    cs = compat.build_constraints(compat.named_axes("XY"), config, compat.ALL)
    effects = random_effects(rng, cs.num_effects, 4)
    vals = cs.coeffs @ cs.vector_from_effects(effects)
    m = qubit.random_bloch(rng)
    for j in range(2):
        for a in (-1, 1):
            idx = [r for r, t in enumerate(cs.row_tags) if t[:3] == ("poly", j, a)]
            assert abs(vals[idx] @ monomial_values(m)
                       - direct_marginal(cs, effects, config, m, j, a)) <= 1e-10


def test_state_rows_match_direct_evaluation():
    rng = np.random.default_rng(1)
    ens = compat.ensemble_octahedral()
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), ens)
    effects = random_effects(rng, 8, 4)
    vals = cs.coeffs @ cs.vector_from_effects(effects)
    for r, (kind, j, a, si) in enumerate(cs.row_tags):
        if kind == "state":
            direct = direct_marginal(cs, effects, compat.parallel(), ens.states[si], j, a)
            assert abs(vals[r] - direct) <= 1e-12


def test_completeness_rows_are_last():
    cs = compat.build_constraints(compat.named_axes("XY"), compat.single_copy(), compat.ALL)
    tags = [t[0] for t in cs.row_tags]
    assert tags[-4:] == ["complete"] * 4
    assert "complete" not in tags[:-4]


def test_known_povms_satisfy_constraints():
    axes = compat.named_axes("XYZ")
    anti = compat.build_constraints(axes, compat.antiparallel(), compat.ALL)
    x = anti.vector_from_effects(povm.build_antiparallel_povm().effects)
    assert anti.residual(x, 1.0) < 1e-12
    par = compat.build_constraints(axes, compat.parallel(), compat.ALL)
    x = par.vector_from_effects(povm.build_parallel_povm().effects)
    assert par.residual(x, np.sqrt(3) / 2) < 1e-12
    assert par.residual(x, 0.9) > 1e-3


def test_effects_vector_roundtrip():
    rng = np.random.default_rng(2)
    cs = compat.build_constraints(compat.named_axes("XY"), compat.parallel(), compat.ALL)
    effects = random_effects(rng, 4, 4)
    assert np.abs(cs.effects_from_vector(cs.vector_from_effects(effects)) - effects).max() < 1e-14


def test_constraint_json_roundtrip():
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.partial_flip(0.2),
                                  compat.ensemble_tetrahedral())
    back = compat.ConstraintSystem.from_json(json.loads(json.dumps(cs.to_json())))
    assert np.array_equal(back.coeffs, cs.coeffs)
    assert np.array_equal(back.lam_coeffs, cs.lam_coeffs)
    assert np.array_equal(back.targets, cs.targets)
    assert back.row_tags == cs.row_tags and back.labels == cs.labels


def test_great_circle_ensembles():
    ens = compat.ensemble_great_circle(4, "xz")
    expect = [[1, 0, 0], [0, 0, 1], [-1, 0, 0], [0, 0, -1]]
    assert np.abs(ens.states - expect).max() < 1e-15
    gc8 = compat.ensemble_great_circle(8, "xy")
    assert np.abs(np.linalg.norm(gc8.states, axis=1) - 1).max() < 1e-15
    assert np.abs(gc8.states[:, 2]).max() == 0
    with pytest.raises(ValueError):
        compat.ensemble_great_circle(2)


def test_platonic_ensembles():
    tet = compat.ensemble_tetrahedral().states
    assert np.abs(tet @ tet.T - (4 * np.eye(4) - 1) / 3).max() < 1e-15
    oct_ = compat.ensemble_octahedral().states
    assert np.abs(oct_.sum(axis=0)).max() == 0
    assert len(oct_) == 6


def test_ensemble_json_and_validation():
    ens = compat.ensemble_tetrahedral()
    back = compat.Ensemble.from_json(json.loads(json.dumps(ens.to_json())))
    assert np.array_equal(back.states, ens.states)
    assert compat.Ensemble.from_json(compat.ALL.to_json()).is_all
    with pytest.raises(ValueError):
        compat.Ensemble.from_json({"states": [[1, 1, 0]]})


def test_configuration_checks():
    with pytest.raises(ValueError):
        compat.Configuration(3)
    c = compat.Configuration.from_json(compat.partial_flip(0.3).to_json())
    assert np.array_equal(c.map.transfer, qubit.map_f_mu(0.3).transfer)
    assert abs(np.trace(c.state_of([0.1, 0.2, 0.3])) - 1) < 1e-15


def test_reproduction_shape_checks():
    p = povm.build_antiparallel_povm()
    with pytest.raises(ValueError):
        compat.check_reproduction(p, compat.parallel(), compat.named_axes("XY"), 1.0, compat.ALL)
    with pytest.raises(ValueError):
        compat.check_reproduction(p, compat.single_copy(), compat.named_axes("XYZ"), 1.0,
                                  compat.ALL)


def test_dual_transfer_of_flip_recovers_gpt_family():
    # the flip is self-dual, so moving the antiparallel POVM to parallel pairs
    # gives the (non-quantum) GPT family
    moved = compat.dual_transfer(povm.build_antiparallel_povm(), qubit.map_spin_flip())
    assert np.abs(moved.effects - povm.build_gpt_povm().effects).max() < 1e-12
    err = compat.check_reproduction(moved, compat.parallel(), compat.named_axes("XYZ"), 1.0,
                                    compat.ALL, n_random=100)
    assert err < 1e-12


@pytest.mark.parametrize("mu", [0.0, 0.25, 1 / 3, 0.8, 1.0])
def test_fmu_sharpness(mu):
    lam = compat.fmu_marginal_sharpness(mu)
    assert np.abs(lam - (1 + mu) / 2).max() < 1e-10
