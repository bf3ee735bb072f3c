import json
import math

import numpy as np
import pytest

from core.config_loader import (
    DEFAULT_SEED,
    ExperimentConfig,
    build_vector,
    default_sweep,
    env_seed,
    load_config,
    parse_m_spec,
    parse_tail_spec,
)
from core.errors import ConfigError, NonzeroDerivativeAtZero
from core.numerics import RandomStream
from functions import GaussianOrlicz, PiecewiseLinear, PowerFunction, TruncatedExtension


@pytest.fixture
def pwl_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"knots": [[0, 0], [1, 0]], "final_slope": 1.0}), encoding="utf-8")
    return path


def test_parse_m_spec_kinds():
    assert isinstance(parse_m_spec("power:2"), PowerFunction)
    assert parse_m_spec("power:2.5").p == 2.5
    assert isinstance(parse_m_spec("gaussian"), GaussianOrlicz)
    assert parse_m_spec("gaussian:quadrature").quadrature
    assert not parse_m_spec(" gaussian:closed ").quadrature


def test_parse_m_spec_truncated():
    M = parse_m_spec("truncated:power:2")
    assert isinstance(M, TruncatedExtension)
    assert M.T == pytest.approx(1.0, abs=1e-10)


def test_parse_m_spec_inline_pwl():
    M = parse_m_spec('pwl:{"knots": [[0, 0], [2, 1]], "final_slope": "inf"}')
    assert isinstance(M, PiecewiseLinear)
    assert math.isinf(M.final_slope)


def test_parse_m_spec_pwl_file(pwl_file):
    M = parse_m_spec(f"pwl:@{pwl_file}")
    assert M.knots == [(0.0, 0.0), (1.0, 0.0)]


def test_parse_m_spec_pwl_relative_to_base_dir(pwl_file):
    M = parse_m_spec("pwl:@m.json", base_dir=pwl_file.parent)
    assert M.value(3.0) == pytest.approx(2.0)


@pytest.mark.parametrize("spec", ["cubic", "power:abc", "power:0.5", "gaussian:fast", "pwl:@missing.json", "pwl:{"])
def test_parse_m_spec_errors(spec, tmp_path):
    with pytest.raises(ConfigError):
        parse_m_spec(spec, base_dir=tmp_path)


def test_parse_tail_spec():
    assert parse_tail_spec("pareto:2").tail(2.0) == pytest.approx(0.25)
    assert parse_tail_spec("halfnormal").support_min == 0.0
    assert parse_tail_spec("atom:3").atoms == ((3.0, 1.0),)
    assert parse_tail_spec("inverted:power:2").tail(2.0) == pytest.approx(0.25, rel=1e-9)


@pytest.mark.parametrize("spec", ["cauchy", "pareto:x", "atom:-1", "halfnormal:2"])
def test_parse_tail_spec_errors(spec):
    with pytest.raises(ConfigError):
        parse_tail_spec(spec)


def test_env_seed(monkeypatch):
    monkeypatch.delenv("ORLICZ_SEED", raising=False)
    assert env_seed() == DEFAULT_SEED
    monkeypatch.setenv("ORLICZ_SEED", "42")
    assert env_seed() == 42
    monkeypatch.setenv("ORLICZ_SEED", "not-a-number")
    with pytest.raises(ConfigError):
        env_seed()


def test_build_vector_families():
    stream = RandomStream(1, 0)
    np.testing.assert_array_equal(build_vector("canonical", 3, stream), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(build_vector("constant", 2, stream), [1.0, 1.0])
    np.testing.assert_allclose(build_vector("geometric:0.5", 3, stream), [1.0, 0.5, 0.25])
    np.testing.assert_allclose(build_vector("geometric", 2, stream), [1.0, 0.9])
    uniform = build_vector("random_uniform", 5, stream)
    assert uniform.shape == (5,) and np.all((uniform > 0) & (uniform < 1))


def test_build_vector_sparse():
    x = build_vector("random_sparse", 25, RandomStream(3, 0))
    assert np.count_nonzero(x) == 3
    y = build_vector("random_sparse:2", 25, RandomStream(3, 0))
    assert np.count_nonzero(y) == 2


def test_build_vector_deterministic():
    first = build_vector("random_uniform", 4, RandomStream(8, 2))
    second = build_vector("random_uniform", 4, RandomStream(8, 2))
    np.testing.assert_array_equal(first, second)


@pytest.mark.parametrize("family", ["gaussian", "geometric:1.5", "constant:2", "random_sparse:0.5"])
def test_build_vector_rejects_family(family):
    with pytest.raises(ConfigError):
        build_vector(family, 3, RandomStream(1))


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(m_spec="power:2", mc_trials=1)
    with pytest.raises(ConfigError):
        ExperimentConfig(m_spec="power:2", n_values=(0,))
    with pytest.raises(ConfigError):
        ExperimentConfig(m_spec="")
    with pytest.raises(ConfigError):
        ExperimentConfig(m_spec="power:2", vector_families=("spiral",))


def test_experiment_config_dict_roundtrip():
    config = ExperimentConfig(m_spec="power:2", n_values=[5, 10], vector_families=["constant"], seed=7)
    assert config.n_values == (5, 10)
    restored = ExperimentConfig.from_dict(config.to_dict())
    assert restored == config


def test_experiment_config_from_dict_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"m_spec": "power:2", "trials": 10})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n_values": [1]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(["power:2"])


def test_experiment_config_seed_from_env(monkeypatch):
    monkeypatch.setenv("ORLICZ_SEED", "99")
    assert ExperimentConfig.from_dict({"m_spec": "gaussian"}).seed == 99


@pytest.mark.parametrize("wrap", [lambda c: c, lambda c: [c], lambda c: {"experiments": [c, c]}])
def test_load_config_shapes(tmp_path, wrap):
    item = {"m_spec": "power:2", "n_values": [3], "vector_families": ["constant"], "mc_trials": 10, "seed": 1}
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(wrap(item)), encoding="utf-8")
    configs = load_config(path)
    assert configs and all(c.m_spec == "power:2" and c.n_values == (3,) for c in configs)
    assert all(c.base_dir == str(tmp_path) for c in configs)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_build_function_resolves_relative_pwl(tmp_path, pwl_file):
    config_path = tmp_path / "sweep.json"
    config_path.write_text(json.dumps({"m_spec": "pwl:@m.json"}), encoding="utf-8")
    (config,) = load_config(config_path)
    assert isinstance(config.build_function(), PiecewiseLinear)


def test_parse_tail_spec_propagates_inversion_errors():
    """Помилки обернення не перетворюються на ConfigError."""
    with pytest.raises(NonzeroDerivativeAtZero):
        parse_tail_spec("inverted:power:1")


def test_default_sweep():
    sweep = default_sweep(mc_trials=100, seed=3, n_values=(10,))
    assert [c.m_spec for c in sweep] == ["power:1.5", "power:2", "power:3", "gaussian"]
    assert all(c.mc_trials == 100 and c.seed == 3 and c.n_values == (10,) for c in sweep)
    assert len(sweep[0].vector_families) == 5
