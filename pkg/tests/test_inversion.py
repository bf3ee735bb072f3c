import math

import numpy as np
import pytest
from scipy.special import erfc
from scipy.stats import chisquare, halfnorm

from core.errors import (
    DegenerateFunction,
    DivergentMass,
    EmptySample,
    InvalidParameter,
    NonConvex,
    NonzeroDerivativeAtZero,
)
from core.inversion import (
    atom_distribution,
    empirical_distribution,
    half_normal_distribution,
    invert,
    inversion_table,
    pareto_distribution,
    q_mass,
    quantile,
    sample,
    tail_by_density,
    unnormalized_tail,
)
from core.numerics import RELATIVE_QUADRATURE, RandomStream, integrate
from core.orlicz import truncate_linear
from functions import CustomOrlicz, GaussianOrlicz, PiecewiseLinear, PowerFunction, TruncatedExtension


@pytest.fixture
def single_atom():
    """(t − 1)^+ обертається в атом X = 1."""
    return PiecewiseLinear([(0, 0), (1, 0)], 1.0)


@pytest.fixture
def two_atoms():
    """Стрибки нахилу 1 у точці 1 та 2 у точці 2: атоми 1/2 (0.8) та 1 (0.2)."""
    return PiecewiseLinear([(0, 0), (1, 0), (2, 1)], 3.0)


@pytest.fixture
def cubic_without_closed_form():
    return CustomOrlicz(
        lambda t: t ** 3,
        derivative=lambda t: 3.0 * t ** 2,
        second_derivative=lambda t: 6.0 * t,
        name="cubic",
    )


def test_q_mass_examples(single_atom):
    assert q_mass(TruncatedExtension(PowerFunction(2), 1.0)) == pytest.approx(1.0)
    assert q_mass(single_atom) == pytest.approx(1.0)
    assert q_mass(GaussianOrlicz()) == pytest.approx(1.0, abs=1e-9)


def test_q_mass_divergent():
    with pytest.raises(DivergentMass):
        q_mass(PowerFunction(2))
    with pytest.raises(DivergentMass):
        q_mass(PiecewiseLinear([(0, 0), (1, 0)], math.inf))


def test_q_mass_rejects_positive_slope_at_zero():
    with pytest.raises(NonzeroDerivativeAtZero):
        q_mass(PowerFunction(1))


def test_unnormalized_tail():
    assert unnormalized_tail(PowerFunction(2), 2.0) == pytest.approx(0.25)
    with pytest.raises(InvalidParameter):
        unnormalized_tail(PowerFunction(2), 0.0)


def test_invert_square_truncates(caplog):
    """t² обрізається в T = 1; хвіст дорівнює 1/4 у точці 2."""
    with caplog.at_level("WARNING", logger="core.inversion"):
        dist, diagnostics = invert(PowerFunction(2))
    assert diagnostics.truncation_applied
    assert diagnostics.truncation_point_T == pytest.approx(1.0, abs=1e-10)
    assert diagnostics.mass_of_Q == pytest.approx(1.0, rel=1e-9)
    assert diagnostics.m_prime_at_zero == 0.0
    assert dist.tail(2.0) == pytest.approx(0.25, rel=1e-9)
    assert dist.tail(0.5) == pytest.approx(1.0)
    assert dist.support_min == pytest.approx(1.0, abs=1e-10)
    assert any("diverges" in r.message for r in caplog.records)


def test_invert_without_truncation_raises():
    with pytest.raises(DivergentMass):
        invert(PowerFunction(2), auto_truncate=False)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_invert_power_is_pareto(p):
    """t^p обертається в закон Парето з хвостом x^-p; маса Q після обрізання дорівнює p − 1."""
    dist, diagnostics = invert(PowerFunction(p))
    expected = pareto_distribution(p)
    grid = np.geomspace(1.01, 100.0, 50)
    np.testing.assert_allclose(dist.tail(grid), grid ** -p, rtol=1e-8)
    np.testing.assert_allclose(dist.tail(grid), expected.tail(grid), rtol=1e-8)
    np.testing.assert_allclose(dist.density(grid), expected.density(grid), rtol=1e-8)
    assert diagnostics.mass_of_Q == pytest.approx(p - 1.0, abs=1e-10)
    assert q_mass(truncate_linear(PowerFunction(p))) == pytest.approx(p - 1.0, abs=1e-10)


def test_invert_gaussian_is_half_normal():
    """Гаусова M не потребує обрізання і дає закон |Z|."""
    dist, diagnostics = invert(GaussianOrlicz())
    assert not diagnostics.truncation_applied
    assert dist.support_min == 0.0
    grid = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(dist.density(grid), math.sqrt(2.0 / math.pi) * np.exp(-0.5 * grid ** 2), rtol=1e-8)
    np.testing.assert_allclose(dist.tail(grid), erfc(grid / math.sqrt(2.0)), rtol=1e-8)
    np.testing.assert_allclose(dist.tail(grid), half_normal_distribution().tail(grid), rtol=1e-8)


def test_invert_single_atom(single_atom):
    dist, diagnostics = invert(single_atom)
    assert not diagnostics.truncation_applied
    assert dist.atoms == ((1.0, 1.0),)
    assert dist.atomic_only
    assert dist.density is None
    assert dist.tail(0.5) == 1.0
    assert dist.tail(1.0) == 1.0
    assert dist.tail(1.5) == 0.0
    assert quantile(dist, 0.3) == 1.0


def test_invert_two_atoms(two_atoms):
    dist, diagnostics = invert(two_atoms)
    assert diagnostics.mass_of_Q == pytest.approx(5.0)
    np.testing.assert_allclose(np.array(dist.atoms), [[0.5, 0.8], [1.0, 0.2]])
    assert quantile(dist, 0.5) == 0.5
    assert quantile(dist, 0.9) == 1.0
    assert dist.support_min == pytest.approx(0.5)


def test_quantile_closed_form():
    dist, _ = invert(PowerFunction(2))
    assert quantile(dist, 0.75) == pytest.approx(2.0, rel=1e-9)
    np.testing.assert_allclose(quantile(dist, np.array([1e-12, 0.5])), [1.0, math.sqrt(2.0)], rtol=1e-9)


def test_quantile_by_bisection(cubic_without_closed_form):
    """Без аналітичного оберненого хвоста квантиль шукається бісекцією."""
    dist, diagnostics = invert(cubic_without_closed_form)
    assert diagnostics.truncation_applied
    assert dist.quantile_fn is None
    assert quantile(dist, 0.875) == pytest.approx(2.0, rel=1e-8)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5])
def test_quantile_rejects_bad_level(u):
    with pytest.raises(InvalidParameter):
        quantile(pareto_distribution(2), u)


def test_sample_deterministic():
    dist, _ = invert(GaussianOrlicz())
    first = sample(dist, RandomStream(5, 0), 100)
    second = sample(dist, RandomStream(5, 0), 100)
    np.testing.assert_array_equal(first, second)
    assert np.all(first >= 0)


def test_sample_edge_cases(single_atom):
    dist, _ = invert(single_atom)
    assert sample(dist, RandomStream(1), 0).size == 0
    np.testing.assert_array_equal(sample(dist, RandomStream(1), 10), np.ones(10))
    with pytest.raises(InvalidParameter):
        sample(dist, RandomStream(1), -1)


@pytest.mark.slow
def test_sample_frequency_matches_tail():
    """Частка реалізацій X >= 1 серед 10^6 узгоджується з F̄(1)."""
    dist, _ = invert(GaussianOrlicz())
    draws = sample(dist, RandomStream(2024, 0), 1_000_000)
    expected = dist.tail(1.0)
    stderr = math.sqrt(expected * (1.0 - expected) / draws.size)
    assert abs(np.mean(draws >= 1.0) - expected) < 5.0 * stderr


def test_tail_by_density_agrees():
    dist, _ = invert(GaussianOrlicz())
    assert tail_by_density(dist, 1.0) == pytest.approx(dist.tail(1.0), abs=1e-8)
    assert tail_by_density(pareto_distribution(2), 3.0) == pytest.approx(1.0 / 9.0, rel=1e-8)


def test_tail_by_density_requires_density():
    with pytest.raises(InvalidParameter):
        tail_by_density(atom_distribution(1.0), 0.5)


def test_empirical_distribution():
    dist = empirical_distribution([1.0, 1.0, 3.0])
    np.testing.assert_allclose(np.array(dist.atoms), [[1.0, 2.0 / 3.0], [3.0, 1.0 / 3.0]])
    assert dist.tail(2.0) == pytest.approx(1.0 / 3.0)
    assert dist.tail(1.0) == 1.0
    assert dist.atomic_only
    with pytest.raises(EmptySample):
        empirical_distribution([])


def test_inversion_table(single_atom):
    dist, _ = invert(single_atom)
    table = inversion_table(dist, [0.5, 1.0, 1.5])
    assert list(table.columns) == ["x", "tail", "density", "cdf"]
    assert table["cdf"].tolist() == [0.0, 1.0, 1.0]
    assert table["tail"].tolist() == [1.0, 1.0, 0.0]
    assert table["density"].isna().all()


def test_inversion_table_default_grid():
    dist, _ = invert(PowerFunction(2))
    table = inversion_table(dist, 20)
    assert len(table) == 20
    assert (table["tail"].diff().dropna() <= 1e-15).all()
    assert table["x"].iloc[0] == pytest.approx(1.0, abs=1e-10)


def test_invert_rejects_non_convex():
    """t² до 1 і 2√t − 1 далі: монотонна, але не опукла."""
    M = CustomOrlicz(lambda t: t * t if t < 1.0 else 2.0 * math.sqrt(t) - 1.0)
    with pytest.raises(NonConvex):
        invert(M)


def test_invert_rejects_degenerate():
    """(t − 1)^+ як довільна функція без дозволу на виродженість."""
    with pytest.raises(DegenerateFunction):
        invert(CustomOrlicz(lambda t: max(t - 1.0, 0.0)))


def test_gaussian_density_sup_error():
    dist, _ = invert(GaussianOrlicz())
    grid = np.linspace(0.01, 5.0, 500)
    expected = math.sqrt(2.0 / math.pi) * np.exp(-0.5 * grid ** 2)
    assert np.max(np.abs(dist.density(grid) - expected)) <= 1e-6


@pytest.mark.parametrize("M", [GaussianOrlicz(), PowerFunction(3)], ids=["gaussian", "p3"])
def test_tail_matches_weighted_second_derivative(M):
    """F̄(x)·Q([0, inf)) = ∫_0^{1/x} y M''(y) dy на 50 логарифмічних точках."""
    dist, diagnostics = invert(M)
    inner = diagnostics.function
    for x in np.geomspace(0.1, 10.0, 50):
        upper = 1.0 / float(x)
        weighted = integrate(lambda y: y * float(inner.second_derivative(y)), 0.0, upper,
                             RELATIVE_QUADRATURE, inner.breakpoints())
        assert float(dist.tail(x)) == pytest.approx(weighted / diagnostics.mass_of_Q, rel=1e-8)


@pytest.mark.parametrize("M", [GaussianOrlicz(), PowerFunction(1.5), PowerFunction(3)], ids=["gaussian", "p1.5", "p3"])
def test_density_integrates_to_one(M):
    dist, _ = invert(M)
    # Для степеневих функцій густина стрибає в support_min; початок зсунуто всередину носія.
    lower = dist.support_min * (1.0 + 1e-9)
    total = integrate(lambda x: float(dist.density(x)), lower, math.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.slow
def test_gaussian_sample_goodness_of_fit():
    """Хі-квадрат для 10^6 реалізацій з оберненої гаусової функції по 20 рівноймовірних кошиках."""
    dist, _ = invert(GaussianOrlicz())
    draws = sample(dist, RandomStream(20240101, 0), 1_000_000)
    edges = halfnorm.ppf(np.linspace(0.0, 1.0, 21))
    edges[-1] = draws.max() + 1.0
    observed, _ = np.histogram(draws, bins=edges)
    expected = np.full(20, draws.size / 20.0)
    assert chisquare(observed, expected).pvalue > 1e-3
