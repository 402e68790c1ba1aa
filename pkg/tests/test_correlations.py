import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from oracles import density, random_spec, random_strategy, spec_from_tables, spec_oracle, table_oracle
from selftest.correlations import (
    CorrelationTable,
    CorrelatorSpec,
    Local,
    all_questions,
    block_structure_check,
    conditional_chsh,
    conditional_chsh_spec,
    correlator,
    evaluate_specs,
    ident,
    obs,
    probability_table,
    proj,
    tables_from_csv,
    tables_from_json,
    tables_to_csv,
    tables_to_json,
    tilted_chsh_value,
)
from selftest.conditions import schmidt_tables
from selftest.observables import PVM, alpha_from_theta, tilted_chsh_max
from selftest.states import random_schmidt
from selftest.strategies import Strategy, ideal_strategy, noise_mix
from selftest.tensor import SIGMA_X, SIGMA_Z, StateVector


@pytest.fixture
def bell():
    zx = (PVM.from_binary(SIGMA_Z), PVM.from_binary(SIGMA_X))
    state = StateVector((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))
    return Strategy(state, (zx, zx))


def test_bell_z_table(bell):
    t = probability_table(bell, (0, 0))
    assert_allclose(t.probs, [[0.5, 0], [0, 0.5]], atol=1e-15)
    assert correlator(bell, CorrelatorSpec.product("zz", {0: obs(0), 1: obs(0)}, 1)) == pytest.approx(1)


@pytest.mark.parametrize("theta", [np.pi / 12, np.pi / 5])
def test_ghz_z_table(theta):
    s = ideal_strategy("ghz", {"n": 3, "theta": theta})
    p = probability_table(s, (0, 0, 0)).probs
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0], expected[1, 1, 1] = np.cos(theta) ** 2, np.sin(theta) ** 2
    # party 3 measures the tilted pair at setting 0, so use the first two parties only
    assert_allclose(p.sum(axis=2), expected.sum(axis=2), atol=1e-14)


def test_table_matches_brute_force(rng):
    for _ in range(10):
        s = random_strategy(rng)
        rho = density(s.state.amplitudes, s.dims, s.white_noise)
        for q in all_questions(s)[:6]:
            pvms = [s.measurements[p][x] for p, x in enumerate(q)]
            assert_allclose(probability_table(s, q).probs, table_oracle(rho, s.dims, pvms), atol=1e-12)


def test_correlator_matches_table_expansion(rng):
    for _ in range(15):
        s = random_strategy(rng)
        spec = random_spec(rng, s)
        assert correlator(s, spec) == pytest.approx(spec_from_tables(spec, s), abs=1e-12)
        assert correlator(s, spec) == pytest.approx(spec_oracle(spec, s), abs=1e-12)


def test_tilted_chsh_maximum():
    s = ideal_strategy("tilted_chsh", {"theta": np.pi / 6})
    alpha = alpha_from_theta(np.pi / 6)
    assert tilted_chsh_value(s, (0, 1), alpha) == pytest.approx(np.sqrt(8 + 2 * alpha**2), abs=1e-12)
    chsh = ideal_strategy("tilted_chsh", {"theta": np.pi / 4})
    assert tilted_chsh_value(chsh, (0, 1), 0.0) == pytest.approx(2 * np.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("signs", list(itertools.product((1, -1), repeat=4)))
def test_classical_deterministic_bound(signs):
    a0, a1, b0, b1 = signs
    alpha = 0.7

    def det(v):
        return PVM(np.stack([np.eye(1) * (v == 1), np.eye(1) * (v == -1)]).astype(complex))

    s = Strategy(StateVector((1, 1), [1.0]), ((det(a0), det(a1)), (det(b0), det(b1))))
    assert tilted_chsh_value(s, (0, 1), alpha) <= 2 + alpha + 1e-12


@given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.9))
@settings(max_examples=40, deadline=None)
def test_tsirelson_type_bound(seed, alpha):
    r = np.random.default_rng(seed)
    from oracles import random_pvm

    meas = tuple(tuple(random_pvm(3, 2, r) for _ in range(2)) for _ in range(2))
    amps = r.normal(size=9) + 1j * r.normal(size=9)
    s = Strategy(StateVector.from_unnormalized((3, 3), amps), meas)
    assert tilted_chsh_value(s, (0, 1), alpha) <= tilted_chsh_max(alpha) + 1e-9


def test_non_signalling(rng):
    for _ in range(10):
        s = random_strategy(rng)
        qs = all_questions(s)
        for p in range(s.n_parties):
            marginals = {}
            for q in qs:
                probs = probability_table(s, q).probs
                key = q[:p] + q[p + 1:]
                m = probs.sum(axis=p)
                if key in marginals:
                    assert_allclose(m, marginals[key], atol=1e-10)
                else:
                    marginals[key] = m


def test_projector_spec_in_unit_interval(rng):
    for _ in range(10):
        s = random_strategy(rng)
        factors = {p: proj(0, 0) for p in range(s.n_parties)}
        v = correlator(s, CorrelatorSpec.product("p", factors, 0))
        assert -1e-10 <= v <= 1 + 1e-10


@pytest.mark.parametrize("theta", [np.pi / 8, np.pi / 4])
def test_conditional_chsh_ghz4(theta):
    s = ideal_strategy("ghz", {"n": 4, "theta": theta})
    alpha = alpha_from_theta(theta)
    for pattern in itertools.product((0, 1), repeat=2):
        v = conditional_chsh(s, [0, 1], pattern, (2, 3), alpha)
        assert v == pytest.approx(tilted_chsh_max(alpha) / 4, abs=1e-12)
        spec = conditional_chsh_spec(dict(zip([0, 1], pattern)), (2, 3), alpha)
        assert v == pytest.approx(spec_from_tables(spec, s), abs=1e-12)


def test_conditional_chsh_empty_set():
    s = ideal_strategy("tilted_chsh", {"theta": 0.4})
    alpha = alpha_from_theta(0.4)
    assert conditional_chsh(s, [], [], (0, 1), alpha) == pytest.approx(tilted_chsh_value(s, (0, 1), alpha))


def test_conditional_chsh_rejects_overlap():
    with pytest.raises(ValueError):
        conditional_chsh_spec({0: 1}, (0, 1), 0.0)


def test_spec_rejects_identity_only():
    with pytest.raises(ValueError):
        CorrelatorSpec.product("id", {0: ident()}, 1.0)


def test_spec_json_roundtrip():
    spec = CorrelatorSpec.combination("x", [(0.5, {0: obs(1) + 2 * proj(0, 1)}), (-1.0, {1: obs(0)})], 0.25)
    assert CorrelatorSpec.from_json(spec.to_json()) == spec
    loc = Local.from_json((obs(0) - proj(1, 0)).to_json())
    assert loc == obs(0) - proj(1, 0)


def test_local_coefficients_are_real():
    # Hermitian atoms with real coefficients keep every correlator real
    with pytest.raises(TypeError):
        Local(((1j, "obs", 0, 0),))


def test_evaluate_specs_vectorized():
    s = ideal_strategy("ghz", {"n": 3, "theta": 0.3})
    specs = [CorrelatorSpec.product(f"m{p}", {p: proj(0, 0)}, 0) for p in range(2)]
    assert_allclose(evaluate_specs(s, specs), [np.cos(0.3) ** 2] * 2, atol=1e-14)


def test_table_validation():
    with pytest.raises(ValueError):
        CorrelationTable((0,), np.array([0.5, 0.6])).validate()
    with pytest.raises(ValueError):
        CorrelationTable((0,), np.array([1.1, -0.1])).validate()


def test_question_validation(bell):
    with pytest.raises(ValueError):
        probability_table(bell, (0, 2))
    with pytest.raises(ValueError):
        probability_table(bell, (0,))


@pytest.mark.parametrize("d", [2, 4])
def test_block_structure_ideal(rng, d):
    c = random_schmidt(d, rng)
    s = ideal_strategy("schmidt", {"coeffs": c, "n": 3})
    assert block_structure_check(schmidt_tables(s, 3), c, 1e-10).max_residual <= 1e-10


def test_block_structure_noise(rng):
    c = random_schmidt(4, rng)
    s = noise_mix(ideal_strategy("schmidt", {"coeffs": c, "n": 3}), 0.01)
    assert block_structure_check(schmidt_tables(s, 3), c, 1e-10).max_residual > 1e-4


def test_noise_endpoints():
    s = ideal_strategy("tilted_chsh", {"theta": np.pi / 4})
    assert_allclose(probability_table(noise_mix(s, 0.0), (1, 1)).probs, probability_table(s, (1, 1)).probs)
    assert tilted_chsh_value(noise_mix(s, 1.0), (0, 1), 0.0) == pytest.approx(0.0, abs=1e-15)


def test_csv_json_roundtrip():
    s = ideal_strategy("ghz", {"n": 3, "theta": 0.37})
    tables = [probability_table(s, q) for q in all_questions(s)]
    assert len(tables) == 8
    for back in (tables_from_csv(tables_to_csv(tables)), tables_from_json(tables_to_json(tables))):
        for a, b in zip(tables, back):
            assert a.question == b.question
            assert np.array_equal(a.probs, b.probs)
