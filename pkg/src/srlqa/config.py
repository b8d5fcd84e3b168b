"""Key/value text configuration.

One ``key = value`` assignment per line, ``#`` comments, lists separated
by commas.  Every metric constant and scoring switch is overridable; the
defaults match the shipped behavior.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .metrics import CIDER_D, BLEU2, METEOR_LITE, METRIC_IDS, ROUGE_L, MetricConfig
from .querygen import QueryGenConfig
from .scoring import Thresholds
from .corpus import SrlRole


@dataclass(frozen=True)
class ToolkitConfig:
    querygen: QueryGenConfig = field(default_factory=QueryGenConfig)
    metrics: tuple[str, ...] = (BLEU2, ROUGE_L, METEOR_LITE, CIDER_D)
    thresholds: Thresholds = field(default_factory=Thresholds)
    metric_config: MetricConfig = field(default_factory=MetricConfig)
    cs_gate_metric_self: bool = False
    consistency_on_clamped: bool = False
    pair_train: bool = False


DEFAULT_CONFIG = ToolkitConfig()

_BOOL_KEYS = ("cs_gate_metric_self", "consistency_on_clamped", "pair_train")
_FLOAT_KEYS = ("bleu_epsilon", "rouge_beta", "meteor_alpha", "meteor_gamma",
               "meteor_beta", "cider_sigma", "embed_baseline")


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"config key {key}: expected a boolean, got {value!r}")


def _split_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_config(text: str, base: ToolkitConfig = DEFAULT_CONFIG) -> ToolkitConfig:
    cfg = base
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "considered_roles":
            roles = frozenset(SrlRole.from_raw(r) for r in _split_list(value))
            cfg = replace(cfg, querygen=replace(cfg.querygen, considered_roles=roles))
        elif key == "min_roles":
            cfg = replace(cfg, querygen=replace(cfg.querygen, min_roles=int(value)))
        elif key == "stopword_verb_lemmas":
            stopwords = frozenset(w.lower() for w in _split_list(value))
            cfg = replace(cfg, querygen=replace(cfg.querygen, stopword_verb_lemmas=stopwords))
        elif key == "metrics":
            metrics = tuple(_split_list(value))
            unknown = [m for m in metrics if m not in METRIC_IDS]
            if unknown:
                raise ValueError(f"config line {line_no}: unknown metric {unknown[0]!r}")
            cfg = replace(cfg, metrics=metrics)
        elif key == "t_cs":
            cfg = replace(cfg, thresholds=replace(
                cfg.thresholds, t_cs=tuple(float(t) for t in _split_list(value))))
        elif key == "t_cons":
            cfg = replace(cfg, thresholds=replace(cfg.thresholds, t_cons=float(value)))
        elif key == "cider_max_n":
            cfg = replace(cfg, metric_config=replace(cfg.metric_config, cider_max_n=int(value)))
        elif key in _FLOAT_KEYS:
            cfg = replace(cfg, metric_config=replace(cfg.metric_config, **{key: float(value)}))
        elif key in _BOOL_KEYS:
            cfg = replace(cfg, **{key: _parse_bool(value, key)})
        else:
            raise ValueError(f"config line {line_no}: unknown key {key!r}")
    return cfg


def load_config(path, base: ToolkitConfig = DEFAULT_CONFIG) -> ToolkitConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base)
