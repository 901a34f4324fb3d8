"""Experiment configuration files.

A config is an INI file with up to three sections::

    [regime]
    name = stable            ; finite_variance | stable | neveu
    b = 1.0
    d = 0.0
    c = 1.0
    K = 1000
    alpha = 1.5              ; required iff name = stable
    offspring = stable(alpha=1.5)   ; optional for stable/neveu

    [experiment]
    k = 3
    horizon = 3.0
    reps = 100
    seed = 12345
    K_list = 200, 1000
    grid_points = 11
    initial_types = distinct ; distinct | iid:<letters>
    mode = scalable          ; scalable | oracle
    out = results/run

    [thresholds]
    significance = 0.001
    ks_population_lookdown = 0.0595

Keys are case-insensitive (``K`` and ``k`` in ``[regime]`` are the same
key, the scaling parameter). Unknown sections or keys raise :class:`UnknownKeyError`; parameters that do
not fit the regime raise :class:`RegimeMismatchError`.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field

from coalhaus.offspring import GEOMETRIC, EXPLICIT, OffspringLaw
from coalhaus.population import FINITE_VARIANCE, NEVEU_REGIME, REGIMES, STABLE_REGIME, RegimeConfig

#: permutation-calibrated critical value of the two-sample KS distance between
#: N(1) from the population and from the lookdown (K = 50, 2000 + 2000
#: replicates, significance 1e-3); see ``demos/calibrate_thresholds.py``
KS_POPULATION_LOOKDOWN = 0.0595
KS_CALIBRATION_SIZES = (2000, 2000)

DEFAULT_THRESHOLDS = {
    "significance": 1e-3,
    "ks_population_lookdown": KS_POPULATION_LOOKDOWN,
}


def ks_population_lookdown_threshold(n: int, m: int, base: float = KS_POPULATION_LOOKDOWN) -> float:
    """Calibrated critical value moved to other sample sizes by the usual sqrt(1/n + 1/m) law."""
    n0, m0 = KS_CALIBRATION_SIZES
    return base * ((1.0 / n + 1.0 / m) / (1.0 / n0 + 1.0 / m0)) ** 0.5


class ConfigError(ValueError):
    """Malformed or invalid configuration value."""


class UnknownKeyError(ConfigError):
    pass


class RegimeMismatchError(ConfigError):
    pass


_KEYS = {
    "regime": {"name", "b", "d", "c", "k", "alpha", "offspring"},
    "experiment": {"k", "horizon", "reps", "seed", "k_list", "grid_points", "initial_types",
                   "mode", "out"},
    "thresholds": set(DEFAULT_THRESHOLDS),
}


@dataclass
class ExperimentConfig:
    regime: RegimeConfig
    k: int = 2
    horizon: float = 1.0
    reps: int = 1
    seed: int = 0
    K_list: list = field(default_factory=list)
    grid_points: int = 11
    initial_types: str = "distinct"
    mode: str = "scalable"
    out: str = "coalhaus"
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def canonical(self) -> dict:
        """Plain-data view used for hashing (output path excluded); floats keep full precision via repr."""
        r = self.regime
        return {
            "regime": {"name": r.regime, "b": repr(r.b), "d": repr(r.d), "c": repr(r.c),
                       "K": repr(r.K), "offspring": str(r.offspring)},
            "experiment": {"k": self.k, "horizon": repr(self.horizon), "reps": self.reps,
                           "seed": self.seed, "K_list": [repr(K) for K in self.K_list],
                           "grid_points": self.grid_points, "initial_types": self.initial_types,
                           "mode": self.mode},
            "thresholds": {key: repr(v) for key, v in sorted(self.thresholds.items())},
        }

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def iid_letters(self) -> int | None:
        """Alphabet size for i.i.d. initial types, None for distinct labels."""
        if self.initial_types == "distinct":
            return None
        return int(self.initial_types.split(":", 1)[1])


def _float(sec, key):
    try:
        return float(sec[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {sec[key]!r}") from None


def _int(sec, key):
    try:
        return int(sec[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {sec[key]!r}") from None


def _regime(sec) -> RegimeConfig:
    for key in ("name", "b", "c", "k"):
        if key not in sec:
            raise ConfigError(f"[regime] needs {key!r}")
    name = sec["name"].strip().lower()
    if name not in REGIMES:
        raise ConfigError(f"unknown regime {name!r}")
    b, c, K = _float(sec, "b"), _float(sec, "c"), _float(sec, "k")
    d = _float(sec, "d") if "d" in sec else 0.0
    alpha = _float(sec, "alpha") if "alpha" in sec else None
    if name == STABLE_REGIME:
        if alpha is None:
            raise RegimeMismatchError("the stable regime needs alpha")
        if not 1.0 < alpha < 2.0:
            raise RegimeMismatchError(f"alpha must lie in (1, 2), got {alpha!r}")
    elif alpha is not None:
        raise RegimeMismatchError(f"alpha is only meaningful in the stable regime, not {name!r}")
    if "offspring" in sec:
        try:
            law = OffspringLaw.parse(sec["offspring"])
        except ValueError as exc:
            raise RegimeMismatchError(str(exc)) from None
    elif name == STABLE_REGIME:
        law = OffspringLaw.stable(alpha)
    elif name == NEVEU_REGIME:
        law = OffspringLaw.neveu()
    else:
        raise ConfigError("the finite-variance regime needs an offspring law")
    if name == STABLE_REGIME and law.alpha != alpha:
        raise RegimeMismatchError("offspring tail index differs from alpha")
    if name == FINITE_VARIANCE and law.kind not in (GEOMETRIC, EXPLICIT):
        raise RegimeMismatchError(f"{law} has infinite variance")
    try:
        return RegimeConfig(b, d, c, K, name, law)
    except ValueError as exc:
        raise RegimeMismatchError(str(exc)) from None


def from_parser(cp: configparser.ConfigParser) -> ExperimentConfig:
    for name in cp.sections():
        if name not in _KEYS:
            raise UnknownKeyError(f"unknown section [{name}]")
        extra = set(cp[name]) - _KEYS[name]
        if extra:
            raise UnknownKeyError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    if not cp.has_section("regime"):
        raise ConfigError("missing [regime] section")
    cfg = ExperimentConfig(_regime(cp["regime"]))
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        if "k" in sec:
            cfg.k = _int(sec, "k")
        if "horizon" in sec:
            cfg.horizon = _float(sec, "horizon")
        if "reps" in sec:
            cfg.reps = _int(sec, "reps")
        if "seed" in sec:
            cfg.seed = _int(sec, "seed")
        if "grid_points" in sec:
            cfg.grid_points = _int(sec, "grid_points")
        if "k_list" in sec:
            try:
                cfg.K_list = [float(x) for x in sec["k_list"].split(",") if x.strip()]
            except ValueError:
                raise ConfigError("K_list must be a comma-separated list of numbers") from None
        if "initial_types" in sec:
            cfg.initial_types = sec["initial_types"].strip()
        if "mode" in sec:
            cfg.mode = sec["mode"].strip()
        if "out" in sec:
            cfg.out = sec["out"].strip()
    if cp.has_section("thresholds"):
        for key in cp["thresholds"]:
            cfg.thresholds[key] = _float(cp["thresholds"], key)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.k < 1 or cfg.reps < 1 or cfg.grid_points < 1:
        raise ConfigError("k, reps and grid_points must be positive")
    if cfg.horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    if cfg.mode not in ("scalable", "oracle"):
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.initial_types != "distinct":
        head, _, tail = cfg.initial_types.partition(":")
        if head != "iid" or not tail.isdigit() or int(tail) < 1:
            raise ConfigError("initial_types must be 'distinct' or 'iid:<letters>'")
    if any(K <= 1 for K in cfg.K_list):
        raise ConfigError("every K must exceed 1")


def loads(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return from_parser(cp)


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(cfg: ExperimentConfig) -> str:
    """Round-trip text form (floats in repr precision)."""
    r = cfg.regime
    lines = ["[regime]", f"name = {r.regime}", f"b = {r.b!r}", f"d = {r.d!r}", f"c = {r.c!r}",
             f"K = {r.K!r}"]
    if r.regime == STABLE_REGIME:
        lines.append(f"alpha = {r.offspring.alpha!r}")
    lines += [f"offspring = {r.offspring}", "", "[experiment]", f"k = {cfg.k}",
              f"horizon = {cfg.horizon!r}", f"reps = {cfg.reps}", f"seed = {cfg.seed}"]
    if cfg.K_list:
        lines.append("K_list = " + ", ".join(repr(K) for K in cfg.K_list))
    lines += [f"grid_points = {cfg.grid_points}", f"initial_types = {cfg.initial_types}",
              f"mode = {cfg.mode}", f"out = {cfg.out}", "", "[thresholds]"]
    lines += [f"{key} = {v!r}" for key, v in sorted(cfg.thresholds.items())]
    return "\n".join(lines) + "\n"
