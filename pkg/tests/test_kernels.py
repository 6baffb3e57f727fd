import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasidiag.errors import BNotZero, NotApplicable, SingularB, WrongDimension
from quasidiag.kernels import (
    classify_d2,
    compare_subspaces,
    decay_constant,
    kernel_form,
    localization_manifold,
    null_basis,
    smoothed_form,
    smoothed_form_bzero,
    smoothed_form_freeB,
    smoothed_form_general,
    verdict,
)
from quasidiag.symplectic import Chirp, Dilation, Fourier, GeneratorWord, word, word_product

from oracles import propagate_gaussian, smoothed_kernel_quadrature
from words import orthogonal, separated, shear_word, word_D_identity, word_with_rank_B, word_with_rank_C

PI2 = np.array([[1.0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0]])


def assert_matches_propagation(w, amp=True):
    form = smoothed_form(word_product(w))
    Q, c = propagate_gaussian(w)
    scale = max(1.0, np.linalg.norm(Q, 2))
    assert np.abs(form.QS - Q).max() < 1e-9 * scale
    if amp and form.amplitude is not None:
        assert form.amplitude == pytest.approx(c, rel=1e-9)
    return form


@pytest.mark.parametrize("d", [1, 2, 3])
def test_forms_match_propagation_all_ranks(d):
    rng = np.random.default_rng(d)
    for r in range(d + 1):
        for builder in (word_with_rank_B, word_with_rank_C):
            for _ in range(4):
                assert_matches_propagation(separated(builder, rng, d, r))


def test_case_dispatch():
    assert smoothed_form(word_product(word(Fourier(2)))).case == "free"
    assert smoothed_form(word_product(word(Dilation(np.eye(2) * 2)))).case == "b_zero"
    assert smoothed_form(word_product(shear_word(np.diag([1.0, 0.0])))).case == "general"


def test_general_case_without_normalization_property():
    # D^T(R(B)^perp) differs from ker(B) here; the coupling block is needed
    E = np.array([[2.0, 1.0], [0.0, 1.0]])
    w = word(Dilation(E)) + shear_word(np.diag([1.0, 0.0]))
    form = assert_matches_propagation(w)
    assert form.min_eigenvalue() > -1e-12
    assert form.diagnostics["coupling_norm"] > 0.1


def test_free_case_amplitude_and_examples():
    S2 = word_product(shear_word([[1.0]]))
    form = smoothed_form(S2)
    assert np.allclose(form.QS, 0.4 * np.array([[1, -1], [-1, 1]]), atol=1e-12)
    assert form.amplitude == pytest.approx((2 / 5) ** 0.5 * (5 / 4) ** 0.25, rel=1e-12)
    J = smoothed_form(word_product(word(Fourier(1))))
    assert np.allclose(J.QS, 0.5 * np.eye(2), atol=1e-15)
    assert J.amplitude == pytest.approx(2 ** -0.5, rel=1e-14)


def test_identity_smoothing():
    form = smoothed_form(word_product(GeneratorWord((), 2)))
    eye = np.eye(2)
    assert np.allclose(form.QS, 0.5 * np.block([[eye, -eye], [-eye, eye]]), atol=1e-15)
    assert form.amplitude == pytest.approx(0.5, rel=1e-14)


def test_free_kernel_against_quadrature():
    w = word(Chirp([[0.7]]), Fourier(1), Chirp([[-0.3]]))
    kf = kernel_form(word_product(w))
    assert kf.variant == "free"
    form = smoothed_form(word_product(w))
    kernel = np.vectorize(lambda s, t: kf.evaluate(s, t))
    for x, y in [(0.0, 0.0), (0.6, -0.4)]:
        val = smoothed_kernel_quadrature(kernel, x, y, start=96)
        assert abs(val) == pytest.approx(float(form.magnitude(x, y)), rel=1e-8)


def test_kernel_form_variants():
    assert kernel_form(word_product(word(Dilation([[2.0]])))).variant == "b_zero"
    general = kernel_form(word_product(shear_word(np.diag([1.0, 0.0]))))
    assert general.variant == "general" and general.amplitude is None
    with pytest.raises(NotApplicable):
        general.evaluate([0, 0], [0, 0])


def test_specialised_entry_points_refuse():
    with pytest.raises(SingularB):
        smoothed_form_freeB(word_product(word(Dilation([[2.0]]))))
    with pytest.raises(BNotZero):
        smoothed_form_bzero(word_product(word(Fourier(1))))
    with pytest.raises(NotApplicable):
        smoothed_form_general(word_product(word(Fourier(2))))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 3))
def test_general_form_independent_of_basis_choice(seed, d):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, d))
    S = word_product(separated(word_with_rank_B, rng, d, r))
    base = smoothed_form_general(S).QS
    rot = {"V1": orthogonal(rng, r), "V2": orthogonal(rng, d - r), "W": orthogonal(rng, r)}
    other = smoothed_form_general(S, rotations=rot).QS
    assert np.abs(other - base).max() <= 1e-9 * np.abs(base).max()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_null_space_is_localization_manifold(seed, d):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, d + 1))
    builder = word_with_rank_B if rng.integers(2) else word_with_rank_C
    S = word_product(separated(builder, rng, d, r))
    form = smoothed_form(S)
    assert form.min_eigenvalue() >= -1e-8 * np.linalg.norm(form.QS, 2)
    cmp = compare_subspaces(localization_manifold(S).orthonormal(), form.kernel_basis)
    assert cmp["dims"][0] == cmp["dims"][1]
    assert cmp["residual"] < 1e-6


def test_localization_manifold_pi2():
    gamma = localization_manifold(PI2)
    assert gamma.dim == 1
    assert np.allclose(gamma.generators[:, 0], [1.0, 0.0, 1.0, 0.0], atol=1e-15)


def test_d_identity_manifold():
    rng = np.random.default_rng(2)
    for q in range(3):
        w, ker = separated(word_D_identity, rng, 2, q)
        S = word_product(w)
        assert np.allclose(S.D, np.eye(2), atol=1e-12)
        expected = np.linalg.qr(np.vstack([ker, ker]))[0] if q < 2 else np.zeros((4, 0))
        got = localization_manifold(S).orthonormal()
        assert compare_subspaces(got, expected)["residual"] < 1e-8


def test_null_basis_threshold():
    Q = np.diag([1.0, 1e-9, 0.0])
    assert null_basis(Q).shape[1] == 2
    assert null_basis(np.eye(3)).shape[1] == 0


def test_decay_constant_examples():
    assert decay_constant(0.4 * np.array([[1.0, -1.0], [-1.0, 1.0]])) == pytest.approx(0.4, abs=1e-14)
    assert decay_constant(0.5 * np.eye(2)) == pytest.approx(0.25, abs=1e-14)
    assert decay_constant(np.array([[0.8, -0.4], [-0.4, 0.2]])) == pytest.approx(0.0, abs=1e-14)


def test_decay_constant_is_tight():
    rng = np.random.default_rng(4)
    S = word_product(separated(word_D_identity, rng, 2, 1)[0])
    Q = smoothed_form(S).QS
    eps = decay_constant(Q)
    z = rng.normal(size=(20000, 4))
    diff = z[:, :2] - z[:, 2:]
    ratio = np.einsum("ki,ij,kj->k", z, Q, z) / np.sum(diff ** 2, axis=1)
    assert ratio.min() >= eps - 1e-12
    assert ratio.min() < eps * 1.2


@pytest.mark.parametrize("S, quasi, reason", [
    (np.array([[0.5, 0.0], [0.0, 2.0]]), False, "d1-rule"),
    (np.array([[1.0, 3.0], [0.0, 1.0]]), True, "d1-rule"),
    (np.array([[0.0, 1.0], [-1.0, 0.0]]), True, "C-invertible"),
    (np.array([[-1.0, 0.0], [0.0, -1.0]]), False, "d1-rule"),
    (PI2, True, "D-restricted-identity"),
])
def test_verdicts(S, quasi, reason):
    v = verdict(S)
    assert v.quasi_diagonal == quasi and v.reason == reason
    if quasi:
        assert v.witness is None and v.epsilon > 0
    else:
        x, y = v.witness
        assert np.linalg.norm(x - y) > 0.5


def test_witness_for_dilation():
    x, y = verdict(np.array([[0.5, 0.0], [0.0, 2.0]])).witness
    assert np.allclose(x, [1.0]) and np.allclose(y, [2.0])


def test_non_quasi_in_d2():
    E = np.array([[2.0, 0.0], [0.0, 1.0]])
    v = verdict(word_product(word(Dilation(E))))
    assert not v.quasi_diagonal and v.reason == "gamma-in-delta"


def test_classify_d2():
    assert classify_d2(word_product(word(Fourier(2)))).name == "C-invertible"
    s = classify_d2(word_product(word(Dilation(np.diag([2.0, 1.0])))))
    assert (s.name, s.quasi_diagonal) == ("C-zero", False)
    s = classify_d2(word_product(shear_word(np.eye(2))))
    assert (s.name, s.quasi_diagonal) == ("C-zero", True)
    s = classify_d2(PI2)
    assert (s.name, s.quasi_diagonal) == ("rank1-dilation", True)
    E = np.array([[1.0, 1.0], [0.0, 1.0]])
    s = classify_d2(word_product(word(Dilation(E), Chirp(np.diag([1.0, 0.0])))))
    assert (s.name, s.quasi_diagonal) == ("rank1-transversal", False)
    s = classify_d2(word_product(word(Dilation(np.diag([1.0, 3.0])), Chirp(np.diag([1.0, 0.0])))))
    assert (s.name, s.quasi_diagonal) == ("rank1-dilation", False)
    with pytest.raises(WrongDimension):
        classify_d2(np.eye(2))


def test_classification_agrees_with_verdict():
    rng = np.random.default_rng(9)
    for i in range(30):
        S = word_product(separated(word_with_rank_C, rng, 2, i % 3))
        assert classify_d2(S).quasi_diagonal == verdict(S).quasi_diagonal
