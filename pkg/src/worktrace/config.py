"""Run configuration: one JSON file describing inputs, knobs, and outputs.

All paths are resolved against the config file's directory so a study
bundle can be checked out anywhere. Validation happens entirely at load
time; a config that loads is safe to hand to every stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .metrics import AFTER, BEFORE, BOTH, CROSS, PROMPTS, UNION
from .propagation import AGGREGATED, RAW

FORMAT_VERSION = 1

PROVIDER_KINDS = ("file", "lexical", "constant", "remote")

_TOP_KEYS = {
    "format_version",
    "decomposition",
    "transcripts",
    "reports_dir",
    "grades",
    "provider",
    "windows",
    "sinkhorn",
    "sigmoid_steepness",
    "metrics",
    "w100_child_inputs",
    "include_uncoded_utterances",
    "score_floor",
    "output_dir",
    "random_free",
    "grades_ordinal_range",
    "stopwords_extra",
}
_METRIC_KEYS = {
    "attention_speakers",
    "diversity_variant",
    "frontier_threshold",
    "frontier_timing",
    "common_number_max",
    "year_range",
}


@dataclass(frozen=True)
class SinkhornSettings:
    k_max: int = 1000
    epsilon: float = 1e-9


@dataclass(frozen=True)
class MetricSettings:
    attention_speakers: str = BOTH
    diversity_variant: str = UNION
    frontier_threshold: float = 0.25
    frontier_timing: str = BEFORE
    common_number_max: int = 20
    year_range: tuple[int, int] = (1900, 2100)


@dataclass(frozen=True)
class PipelineConfig:
    base_dir: Path
    raw: dict  # as parsed, for embedding into the manifest
    decomposition: Path
    transcripts: Path
    reports_dir: Path
    grades: Path | None
    provider: dict
    windows: tuple[int, ...]
    sinkhorn: SinkhornSettings
    sigmoid_steepness: float
    metrics: MetricSettings
    w100_child_inputs: str
    include_uncoded_utterances: bool
    score_floor: float
    output_dir: Path
    random_free: bool
    grades_ordinal_range: tuple[int, int]
    stopwords_extra: Path | None


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def _choice(value, allowed, what):
    if value not in allowed:
        raise ConfigError(f"{what} must be one of {sorted(allowed)}, got {value!r}")
    return value


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    version = raw.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported config format_version {version!r}")
    base = path.resolve().parent

    windows = tuple(_require(raw, "windows"))
    if len(windows) < 2:
        raise ConfigError("windows needs at least two sizes")
    if list(windows) != sorted(set(windows)):
        raise ConfigError(f"windows must be strictly increasing, got {list(windows)}")
    for w in windows:
        if not isinstance(w, int) or w < 2 or w % 2:
            raise ConfigError(f"window {w!r} is not an even integer >= 2")

    provider = _require(raw, "provider")
    if not isinstance(provider, dict):
        raise ConfigError("provider must be an object")
    _choice(provider.get("kind"), PROVIDER_KINDS, "provider.kind")

    sk = raw.get("sinkhorn", {})
    sinkhorn = SinkhornSettings(
        k_max=int(sk.get("k_max", SinkhornSettings.k_max)),
        epsilon=float(sk.get("epsilon", SinkhornSettings.epsilon)),
    )
    if sinkhorn.k_max < 1:
        raise ConfigError(f"sinkhorn.k_max must be >= 1, got {sinkhorn.k_max}")
    if sinkhorn.epsilon <= 0:
        raise ConfigError(f"sinkhorn.epsilon must be positive, got {sinkhorn.epsilon}")

    steepness = float(raw.get("sigmoid_steepness", 1.0))
    if steepness <= 0:
        raise ConfigError(f"sigmoid_steepness must be positive, got {steepness}")

    mc = raw.get("metrics", {})
    unknown = set(mc) - _METRIC_KEYS
    if unknown:
        raise ConfigError(f"unknown metrics keys: {sorted(unknown)}")
    year_range = tuple(mc.get("year_range", MetricSettings.year_range))
    if len(year_range) != 2 or year_range[0] > year_range[1]:
        raise ConfigError(f"year_range must be [low, high], got {list(year_range)}")
    metrics = MetricSettings(
        attention_speakers=_choice(
            mc.get("attention_speakers", BOTH), (BOTH, PROMPTS), "attention_speakers"
        ),
        diversity_variant=_choice(
            mc.get("diversity_variant", UNION), (UNION, CROSS), "diversity_variant"
        ),
        frontier_threshold=float(mc.get("frontier_threshold", 0.25)),
        frontier_timing=_choice(
            mc.get("frontier_timing", BEFORE), (BEFORE, AFTER), "frontier_timing"
        ),
        common_number_max=int(mc.get("common_number_max", 20)),
        year_range=year_range,
    )
    if metrics.frontier_threshold <= 0:
        raise ConfigError("frontier_threshold must be positive")

    score_floor = float(raw.get("score_floor", 0.0))
    if not 0.0 <= score_floor <= 1.0:
        raise ConfigError(f"score_floor must be in [0, 1], got {score_floor}")

    ordinal_range = tuple(raw.get("grades_ordinal_range", (0, 5)))
    if len(ordinal_range) != 2 or ordinal_range[0] >= ordinal_range[1]:
        raise ConfigError(f"grades_ordinal_range must be [low, high], got {list(ordinal_range)}")

    grades = raw.get("grades")
    extra = raw.get("stopwords_extra")
    return PipelineConfig(
        base_dir=base,
        raw=raw,
        decomposition=base / _require(raw, "decomposition"),
        transcripts=base / _require(raw, "transcripts"),
        reports_dir=base / _require(raw, "reports_dir"),
        grades=base / grades if grades else None,
        provider=provider,
        windows=windows,
        sinkhorn=sinkhorn,
        sigmoid_steepness=steepness,
        metrics=metrics,
        w100_child_inputs=_choice(
            raw.get("w100_child_inputs", AGGREGATED), (AGGREGATED, RAW), "w100_child_inputs"
        ),
        include_uncoded_utterances=bool(raw.get("include_uncoded_utterances", False)),
        score_floor=score_floor,
        output_dir=base / _require(raw, "output_dir"),
        random_free=bool(raw.get("random_free", True)),
        grades_ordinal_range=ordinal_range,
        stopwords_extra=base / extra if extra else None,
    )
