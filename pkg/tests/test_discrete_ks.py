import math

import numpy as np
import pytest

from core.discrete_ks import (
    KSSequence,
    conjugate_from_sequence,
    ks_sequence,
    m_from_sequence,
    permutation_average_exact,
    permutation_average_sampled,
)
from core.errors import ConjugateNotInvertible, DimensionMismatch, InvalidParameter, TooLarge
from core.numerics import RandomStream
from core.orlicz import conjugate_function, orlicz_norm
from functions import GaussianOrlicz, PowerFunction


@pytest.fixture
def two_one():
    return KSSequence((2.0, 1.0))


def test_sequence_for_square():
    """Для t² маємо M*^{-1}(u) = 2√u, тож a_i = 4(√i − √(i−1))."""
    seq = ks_sequence(PowerFunction(2), 4)
    expected = [4.0 * (math.sqrt(i) - math.sqrt(i - 1)) for i in range(1, 5)]
    np.testing.assert_allclose(seq.as_array(), expected, rtol=1e-8)
    assert seq.n == 4
    assert seq.source_m == "power(2)"


def test_sequence_single_element():
    assert ks_sequence(PowerFunction(2), 1).a == pytest.approx((2.0,), rel=1e-9)


def test_sequence_nonincreasing():
    seq = ks_sequence(PowerFunction(1.5), 6)
    assert all(left >= right for left, right in zip(seq.a[:-1], seq.a[1:]))


def test_sequence_degenerate_conjugate():
    """M(t) = t: спряжена дорівнює 0 на [0, 1] і +inf далі, обернути її не можна."""
    with pytest.raises(ConjugateNotInvertible):
        ks_sequence(PowerFunction(1), 3)


def test_sequence_validation():
    with pytest.raises(InvalidParameter):
        KSSequence((1.0, 2.0))
    with pytest.raises(InvalidParameter):
        KSSequence((1.0, 0.0))
    with pytest.raises(InvalidParameter):
        KSSequence(())
    with pytest.raises(InvalidParameter):
        ks_sequence(PowerFunction(2), 0)


def test_sequence_clamps_rounding_noise():
    seq = KSSequence((1.0, 1.0 + 1e-12))
    assert seq.a == (1.0, 1.0)


def test_permutation_average_examples(two_one):
    assert permutation_average_exact([1.0, 0.0], two_one) == pytest.approx(1.5)
    assert permutation_average_exact([1.0, 0.5], two_one) == pytest.approx(1.5)


def test_permutation_average_constant_vector():
    seq = KSSequence((3.0, 2.0, 1.5, 1.0))
    assert permutation_average_exact([1.0] * 4, seq) == pytest.approx(3.0)


def test_permutation_average_symmetric():
    seq = ks_sequence(PowerFunction(2), 5)
    x = np.array([0.3, -1.2, 0.7, 0.05, 2.0])
    reference = permutation_average_exact(x, seq)
    rng = np.random.default_rng(4)
    for _ in range(5):
        assert permutation_average_exact(rng.permutation(x), seq) == reference


def test_permutation_average_errors(two_one):
    with pytest.raises(DimensionMismatch):
        permutation_average_exact([1.0, 2.0, 3.0], two_one)
    big = KSSequence(tuple(range(11, 0, -1)))
    with pytest.raises(TooLarge):
        permutation_average_exact([1.0] * 11, big)


def test_sampled_constant_vector():
    seq = KSSequence((3.0, 2.0, 1.0))
    assert permutation_average_sampled([1.0, 1.0, 1.0], seq, 10, RandomStream(1)) == (3.0, 0.0)


def test_sampled_matches_exact(two_one):
    estimate, stderr = permutation_average_sampled([1.0, 0.0], two_one, 20_000, RandomStream(20240101))
    assert abs(estimate - 1.5) <= 4.0 * stderr


def test_sampled_deterministic(two_one):
    first = permutation_average_sampled([1.0, 0.3], two_one, 2, RandomStream(6, 1))
    second = permutation_average_sampled([1.0, 0.3], two_one, 2, RandomStream(6, 1))
    assert first == second


def test_sampled_errors(two_one):
    with pytest.raises(InvalidParameter):
        permutation_average_sampled([1.0, 0.0], two_one, 1, RandomStream(1))
    with pytest.raises(DimensionMismatch):
        permutation_average_sampled([1.0], two_one, 5, RandomStream(1))


def test_conjugate_from_sequence_literal_knots(two_one):
    """Без нормування вузли стоять у часткових сумах 2 і 3."""
    conjugate = conjugate_from_sequence(two_one, normalize=False)
    assert conjugate.knots == [(0.0, 0.0), (2.0, 0.5), (3.0, 1.0)]
    assert conjugate.final_slope == pytest.approx(0.5)


def test_conjugate_from_single_element():
    conjugate = conjugate_from_sequence(KSSequence((1.0,)))
    assert conjugate.knots == [(0.0, 0.0), (1.0, 1.0)]
    assert conjugate.final_slope == pytest.approx(1.0)


def test_m_from_sequence_reproduces_conjugate_levels():
    seq = ks_sequence(PowerFunction(2), 4)
    recovered = conjugate_function(m_from_sequence(seq))
    knots = np.cumsum(seq.as_array()) / seq.n
    np.testing.assert_allclose(recovered.value(knots), np.arange(1, 5) / 4, rtol=1e-9)
    # Вузли лежать на справжній M*(s) = s²/4
    np.testing.assert_allclose(knots ** 2 / 4.0, np.arange(1, 5) / 4, rtol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_sequence_roundtrip(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    a = np.sort(rng.uniform(0.1, 5.0, size=n))[::-1]
    seq = KSSequence(tuple(a))
    restored = ks_sequence(m_from_sequence(seq), n)
    np.testing.assert_allclose(restored.as_array(), a, rtol=1e-8)


@pytest.mark.parametrize("p", [1.5, 2.0])
def test_discrete_equivalence_window(p):
    """Відношення середнього за перестановками до норми лежить у вікні ширини <= 10."""
    M = PowerFunction(p)
    rng = np.random.default_rng(17)
    ratios = []
    for n in (4, 5, 6):
        seq = ks_sequence(M, n)
        for _ in range(20):
            x = rng.uniform(-1.0, 1.0, size=n)
            ratios.append(permutation_average_exact(x, seq) / orlicz_norm(M, x))
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) <= 10


def test_sequence_for_gaussian_reaches_domain_boundary():
    """M* гаусової функції досягає рівня 1 лише як ліва границя в sqrt(2/pi)."""
    seq = ks_sequence(GaussianOrlicz(), 4)
    assert seq.n == 4
    assert all(v > 0 for v in seq.a)
    assert sum(seq.a) / 4 == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-6)
