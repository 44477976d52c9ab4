"""Experiment configuration (JSON) with scenario-dependent defaults."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .features import BlockingConfig, HistogramSpec
from .qkd import Placement, Protocol, SessionConfig
from .quantum import NoiseKind

SCENARIOS = ("channel_remote", "gate_based")
CLASSIFIERS = ("knn", "gnb", "svm")
SVM_KERNELS = ("linear", "rbf", "poly")

_EXPECTED_PAIRS = {
    "channel_remote": {NoiseKind.AMPLITUDE_DAMPING.value, NoiseKind.BIT_FLIP.value},
    "gate_based": {NoiseKind.BIT_FLIP.value, NoiseKind.DEPOLARIZING.value},
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


@dataclass
class SvmSettings:
    kernel: str = "rbf"
    C: float = 1.0
    gamma: float | None = None
    degree: int = 4
    coef0: float = 1.0
    tol: float = 1e-3
    max_iter: int | None = None


@dataclass
class ExperimentConfig:
    scenario: str = "channel_remote"
    protocol: str = "bb84"
    noise_pair: tuple = ("amplitude_damping", "bit_flip")
    sessions_per_noise: int = 200_000
    key_length: int = 16
    p_max: float = 1.0
    both_arms: bool = False
    block_count: int = 50
    block_size: int = 4000
    shuffle_rounds: int = 100
    bin_count: int = 10
    hist_range: tuple = (0.0, 1.0)
    pca_components: int | None = 3
    pca_variance_threshold: float | None = None
    classifiers: tuple = CLASSIFIERS
    knn_k: int = 2
    svm: SvmSettings = field(default_factory=SvmSettings)
    split_ratio: float = 0.7
    split_before_augment: bool = False
    grid_resolution: int = 200
    render_figures: bool = True
    master_seed: int = 0

    # -- derived views --------------------------------------------------------

    @property
    def placement(self) -> Placement:
        return Placement.CHANNEL if self.scenario == "channel_remote" else Placement.GATE

    def session_config(self, kind) -> SessionConfig:
        return SessionConfig(
            protocol=Protocol(self.protocol),
            placement=self.placement,
            noise_kind=NoiseKind(kind),
            key_length=self.key_length,
            p_max=self.p_max,
            both_arms=self.both_arms,
        )

    @property
    def blocking(self) -> BlockingConfig:
        return BlockingConfig(self.block_count, self.block_size, self.shuffle_rounds, self.master_seed)

    @property
    def histogram(self) -> HistogramSpec:
        return HistogramSpec(self.bin_count, *self.hist_range)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_pair"] = list(self.noise_pair)
        d["hist_range"] = list(self.hist_range)
        d["classifiers"] = list(self.classifiers)
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def scenario_defaults(scenario: str, protocol: str = "bb84") -> dict:
    """Defaults that differ between the two scenarios."""
    if scenario != "gate_based":
        return {}
    d = {
        "noise_pair": ("bit_flip", "depolarizing"),
        "p_max": 0.1,
        "block_count": 100,
        "block_size": 1000,
        "svm": SvmSettings(kernel="linear"),
    }
    if protocol == "bbm92":
        d.update(block_size=2000, pca_components=None, pca_variance_threshold=0.99)
    return d


def make_config(**overrides) -> ExperimentConfig:
    """Build a validated config from keyword overrides on top of scenario defaults."""
    return config_from_dict(overrides)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    problems = []
    known = {f.name for f in fields(ExperimentConfig)}
    for key in sorted(set(data) - known):
        problems.append(f"{key}: unknown field")
    scenario = data.get("scenario", "channel_remote")
    protocol = data.get("protocol", "bb84")
    base = {**scenario_defaults(scenario, protocol)}
    if "pca_components" in data or "pca_variance_threshold" in data:
        base.pop("pca_components", None)
        base.pop("pca_variance_threshold", None)
        data.setdefault("pca_components", None)
        data.setdefault("pca_variance_threshold", None)
    svm = data.pop("svm", None)
    merged = {**base, **{k: v for k, v in data.items() if k in known}}
    if isinstance(svm, dict):
        base_svm = asdict(merged.get("svm", SvmSettings()))
        unknown = set(svm) - set(base_svm)
        problems += [f"svm.{k}: unknown field" for k in sorted(unknown)]
        merged["svm"] = SvmSettings(**{**base_svm, **{k: v for k, v in svm.items() if k in base_svm}})
    elif svm is not None:
        problems.append("svm: must be an object")
    for key in ("noise_pair", "hist_range", "classifiers"):
        if key in merged and isinstance(merged[key], list):
            merged[key] = tuple(merged[key])
    cfg = ExperimentConfig(**merged)
    problems += validate(cfg)
    if problems:
        raise ConfigError(problems)
    pair = set(cfg.noise_pair)
    if pair != _EXPECTED_PAIRS[cfg.scenario]:
        warnings.warn(
            f"noise pair {sorted(pair)} is not the usual pair for {cfg.scenario}", stacklevel=2
        )
    return cfg


def validate(cfg: ExperimentConfig) -> list[str]:
    p = []
    if cfg.scenario not in SCENARIOS:
        p.append(f"scenario: must be one of {SCENARIOS}")
    if cfg.protocol not in [x.value for x in Protocol]:
        p.append("protocol: must be 'bb84' or 'bbm92'")
    kinds = [k.value for k in NoiseKind]
    if len(cfg.noise_pair) != 2 or any(k not in kinds for k in cfg.noise_pair):
        p.append(f"noise_pair: need two of {kinds}")
    elif cfg.noise_pair[0] == cfg.noise_pair[1]:
        p.append("noise_pair: members must differ")
    if not isinstance(cfg.sessions_per_noise, int) or cfg.sessions_per_noise < 1:
        p.append("sessions_per_noise: must be a positive integer")
    if not isinstance(cfg.key_length, int) or cfg.key_length < 1:
        p.append("key_length: must be a positive integer")
    if not 0.0 <= cfg.p_max <= 1.0:
        p.append("p_max: must lie in [0, 1]")
    if cfg.block_count < 1:
        p.append("block_count: must be >= 1")
    if cfg.block_size < 2:
        p.append("block_size: must be >= 2")
    if cfg.shuffle_rounds < 1:
        p.append("shuffle_rounds: must be >= 1")
    if isinstance(cfg.sessions_per_noise, int) and cfg.block_count * cfg.block_size > cfg.sessions_per_noise:
        p.append("block_count*block_size: exceeds sessions_per_noise")
    if cfg.bin_count < 1:
        p.append("bin_count: must be >= 1")
    if len(cfg.hist_range) != 2 or not cfg.hist_range[0] < cfg.hist_range[1]:
        p.append("hist_range: need [lo, hi] with lo < hi")
    if (cfg.pca_components is None) == (cfg.pca_variance_threshold is None):
        p.append("pca_components/pca_variance_threshold: set exactly one")
    elif cfg.pca_components is not None and not 1 <= cfg.pca_components <= 7:
        p.append("pca_components: must be in [1, 7]")
    elif cfg.pca_variance_threshold is not None and not 0 < cfg.pca_variance_threshold <= 1:
        p.append("pca_variance_threshold: must lie in (0, 1]")
    if not cfg.classifiers or any(c not in CLASSIFIERS for c in cfg.classifiers):
        p.append(f"classifiers: non-empty subset of {CLASSIFIERS}")
    if cfg.knn_k < 1:
        p.append("knn_k: must be >= 1")
    if cfg.svm.kernel not in SVM_KERNELS:
        p.append(f"svm.kernel: must be one of {SVM_KERNELS}")
    if cfg.svm.C <= 0:
        p.append("svm.C: must be positive")
    if not 0.0 < cfg.split_ratio < 1.0:
        p.append("split_ratio: must lie in (0, 1)")
    if cfg.grid_resolution < 2:
        p.append("grid_resolution: must be >= 2")
    if not isinstance(cfg.master_seed, int) or not 0 <= cfg.master_seed < 2**63:
        p.append("master_seed: must be a non-negative integer")
    return p


def load_config(path) -> ExperimentConfig:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ConfigError(["<root>: config must be a JSON object"])
    return config_from_dict(data)
