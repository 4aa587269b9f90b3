import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import haar_keys, sample_mean
from untelegraph.errors import CapacityError, ParameterError
from untelegraph.linalg import (
    RngStream,
    check_density_matrix,
    compose,
    conjugate,
    cycle_count,
    diag_probabilities,
    is_unitary,
    permutation_operator,
    sample_ginibre,
    sample_haar_unitary,
)
from untelegraph.weingarten import exact_twirl


def test_ginibre_shape_and_determinism():
    z = sample_ginibre(3, RngStream(5, 2))
    assert z.shape == (3, 3)
    assert np.all(np.isfinite(z))
    np.testing.assert_array_equal(z, sample_ginibre(3, RngStream(5, 2)))
    assert not np.array_equal(z, sample_ginibre(3, RngStream(5, 3)))


def test_ginibre_unit_second_moment():
    gen = RngStream(11).generator()
    draws = np.array([sample_ginibre(1, gen)[0, 0] for _ in range(100_000)])
    mean, err = sample_mean(np.abs(draws) ** 2)
    assert abs(mean - 1.0) <= 4 * err
    # real and imaginary parts each carry variance 1/2
    assert abs(draws.real.var() - 0.5) < 0.01


def test_ginibre_rejects_zero_dim():
    with pytest.raises(ParameterError):
        sample_ginibre(0, RngStream(1))
    with pytest.raises(ParameterError):
        sample_haar_unitary(0, RngStream(1))


@pytest.mark.parametrize("dim", [1, 2, 5, 16, 64])
def test_haar_output_is_unitary(dim):
    for i in range(5):
        u = sample_haar_unitary(dim, RngStream(3, i))
        assert np.linalg.norm(u.conj().T @ u - np.eye(dim)) <= 1e-10 * dim
        assert is_unitary(u)


def _exact_moment(order, dim):
    """E|U_00|^(2 order) from the exact twirl of |0..0><0..0|."""
    x = np.zeros((dim**order, dim**order), dtype=complex)
    x[0, 0] = 1.0
    return exact_twirl(order, dim, x).matrix[0, 0].real


def test_haar_moments_match_exact_twirl():
    keys = haar_keys(4, 100_000, 17)
    a = np.abs(keys[:, 0, 0]) ** 2
    m1, e1 = sample_mean(a)
    m2, e2 = sample_mean(a**2)
    assert _exact_moment(1, 4) == pytest.approx(0.25, abs=1e-12)
    assert _exact_moment(2, 4) == pytest.approx(0.1, abs=1e-12)
    assert abs(m1 - 0.25) <= 4 * e1
    assert abs(m2 - 0.1) <= 4 * e2


def test_haar_left_invariance():
    keys = haar_keys(3, 100_000, 23)
    w = sample_haar_unitary(3, RngStream(999))
    plain = np.abs(np.trace(keys, axis1=1, axis2=2)) ** 2
    shifted = np.abs(np.trace(w @ keys, axis1=1, axis2=2)) ** 2
    ma, ea = sample_mean(plain)
    mb, eb = sample_mean(shifted)
    assert abs(ma - mb) <= 4 * np.hypot(ea, eb)
    assert abs(ma - 1.0) <= 4 * ea


def test_permutation_operator_swap_action():
    v = permutation_operator((1, 0), 2)
    ket01 = np.zeros(4)
    ket01[1] = 1.0
    np.testing.assert_array_equal(v @ ket01, np.eye(4)[2])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_identity_permutation(d):
    np.testing.assert_array_equal(permutation_operator((0, 1, 2), d), np.eye(d**3))


def test_permutation_trace_counts_cycles():
    v = permutation_operator((1, 2, 0), 3)
    brute = sum(v[i, i] for i in range(27))
    assert brute == 3
    for perm in itertools.permutations(range(3)):
        assert np.trace(permutation_operator(perm, 2)).real == 2 ** cycle_count(perm)


def test_permutation_action_on_product_states():
    gen = np.random.default_rng(0)
    vecs = [gen.standard_normal(3) for _ in range(3)]
    perm = (2, 0, 1)
    v = permutation_operator(perm, 3)
    product = np.kron(np.kron(vecs[0], vecs[1]), vecs[2])
    # slot x moves to slot perm[x]
    moved = [None] * 3
    for x in range(3):
        moved[perm[x]] = vecs[x]
    np.testing.assert_allclose(v @ product, np.kron(np.kron(moved[0], moved[1]), moved[2]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4).flatmap(lambda k: st.tuples(st.permutations(range(k)), st.permutations(range(k)))),
       st.sampled_from([1, 2, 3]))
def test_permutation_operators_form_representation(pair, d):
    p, q = pair
    lhs = permutation_operator(p, d) @ permutation_operator(q, d)
    np.testing.assert_array_equal(lhs, permutation_operator(compose(p, q), d))


def test_permutation_capacity():
    with pytest.raises(CapacityError):
        permutation_operator(tuple(range(6)), 8)
    with pytest.raises(ParameterError):
        permutation_operator((0, 0), 2)


def test_conjugate_identity_and_invariants():
    gen = np.random.default_rng(4)
    x = gen.standard_normal((5, 5)) + 1j * gen.standard_normal((5, 5))
    np.testing.assert_allclose(conjugate(np.eye(5), x), x)
    u = sample_haar_unitary(5, RngStream(8))
    y = conjugate(u, x)
    assert abs(np.trace(y) - np.trace(x)) <= 1e-12
    h = x + x.conj().T
    np.testing.assert_allclose(np.linalg.eigvalsh(conjugate(u, h)), np.linalg.eigvalsh(h), atol=1e-10)
    with pytest.raises(ParameterError):
        conjugate(np.eye(4), x)


def test_conjugate_rank_one():
    u = sample_haar_unitary(4, RngStream(9))
    e0 = np.zeros((4, 4), dtype=complex)
    e0[0, 0] = 1
    np.testing.assert_allclose(conjugate(u, e0), np.outer(u[:, 0], u[:, 0].conj()), atol=1e-14)


def test_diag_probabilities():
    np.testing.assert_allclose(diag_probabilities(np.diag([0.5, 0.5, 0, 0])), [0.5, 0.5, 0, 0])
    np.testing.assert_allclose(diag_probabilities(np.eye(6) / 6), np.full(6, 1 / 6))
    u = sample_haar_unitary(4, RngStream(10))
    rho = np.outer(u[:, 0], u[:, 0].conj())
    np.testing.assert_allclose(diag_probabilities(rho), np.abs(u[:, 0]) ** 2, atol=1e-14)


def test_diag_probabilities_clamps_rounding_only():
    p = diag_probabilities(np.diag([0.5 + 1e-13, 0.5, -1e-13]))
    assert p.min() >= 0 and abs(p.sum() - 1) <= 1e-10
    with pytest.raises(ParameterError):
        diag_probabilities(np.diag([1.1, -0.1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32))
def test_diag_probabilities_sum_to_one(dim, seed):
    gen = np.random.default_rng(seed)
    g = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    check_density_matrix(rho)
    assert abs(diag_probabilities(rho).sum() - 1) <= 1e-10


def test_rng_stream_validation():
    with pytest.raises(ParameterError):
        RngStream(-1)
    with pytest.raises(ParameterError):
        RngStream(1, 2**64)
