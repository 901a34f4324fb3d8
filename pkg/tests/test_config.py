from __future__ import annotations

import pytest

from coalhaus import config

STABLE = """
[regime]
name = stable
b = 1.0
d = 0.0
c = 1.0
K = 1000
alpha = 1.5

[experiment]
k = 3
horizon = 3.0
reps = 10
seed = 12345
K_list = 200, 1000
initial_types = iid:4   ; four letters
"""


def test_load_and_round_trip():
    cfg = config.loads(STABLE)
    assert cfg.regime.K == 1000 and cfg.k == 3 and cfg.K_list == [200.0, 1000.0]
    assert cfg.iid_letters() == 4
    assert cfg.thresholds["ks_population_lookdown"] == config.KS_POPULATION_LOOKDOWN
    again = config.loads(config.dumps(cfg))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_hash_changes_with_parameters():
    a = config.loads(STABLE)
    b = config.loads(STABLE.replace("seed = 12345", "seed = 12346"))
    assert a.config_hash() != b.config_hash()


def test_unknown_keys():
    with pytest.raises(config.UnknownKeyError):
        config.loads(STABLE + "\nfoo = 1\n")
    with pytest.raises(config.UnknownKeyError):
        config.loads(STABLE + "\n[extras]\nx = 1\n")


@pytest.mark.parametrize("edit", [
    ("alpha = 1.5", "alpha = 2.5"),
    ("alpha = 1.5", ""),
    ("name = stable", "name = neveu"),
    ("alpha = 1.5", "alpha = 1.5\noffspring = stable(alpha=1.2)"),
])
def test_regime_mismatch(edit):
    with pytest.raises(config.RegimeMismatchError):
        config.loads(STABLE.replace(*edit))


def test_finite_variance_rejects_heavy_tail():
    text = "[regime]\nname = finite_variance\nb = 2\nd = 1\nc = 1\nK = 50\noffspring = neveu\n"
    with pytest.raises(config.RegimeMismatchError):
        config.loads(text)
    ok = config.loads(text.replace("neveu", "geometric(q=0.5)"))
    assert ok.regime.n_star == 3.0


@pytest.mark.parametrize("edit", [
    ("reps = 10", "reps = ten"),
    ("reps = 10", "reps = 0"),
    ("initial_types = iid:4   ; four letters", "initial_types = iid:x"),
    ("k = 3", "k = 3\nmode = fast"),
])
def test_invalid_values(edit):
    with pytest.raises(config.ConfigError) as exc:
        config.loads(STABLE.replace(*edit))
    assert not isinstance(exc.value, (config.UnknownKeyError, config.RegimeMismatchError))


def test_threshold_scaling():
    base = config.KS_POPULATION_LOOKDOWN
    assert config.ks_population_lookdown_threshold(2000, 2000) == pytest.approx(base)
    assert config.ks_population_lookdown_threshold(500, 500) == pytest.approx(2 * base)
