"""One configuration object for every stage, loadable from JSON.

The JSON layout mirrors the sections below; any subset of keys may be
given and the rest keep their defaults::

    {
      "grouping":  {"w_pro": 0.33, "w_con": 0.33, "w_len": 0.33, "w_sim": 0.33,
                    "mu_temp": 0.33, "mu_mod": 0.33, "eta_sem": 1, "tau": null,
                    "tau_fraction": 0.9, "h": 1.0, ...},
      "learning":  {"exemplar_fraction": 0.25, "n_rotations": 2, "max_angle": 10, "ridge": 1.0, ...},
      "inference": {"sample_threshold": 3.0, "relaxed_threshold": 6.0, "n_configurations": 10,
                    "margin": 0.25, "shift_radius": 5, ...},
      "training":  {"cut_length": 2000, "max_iters": 5, "patience": 2},
      "edges":     {"threshold": 100},
      "render":    {"stroke_width": 2}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .edges import DEFAULT_GRADIENT_THRESHOLD
from .errors import InvalidArgumentError
from .grouping import GroupingParams
from .inference import InferenceParams
from .learning import LearningParams
from .training import TrainingParams


@dataclass(frozen=True)
class SynthConfig:
    grouping: GroupingParams = field(default_factory=GroupingParams)
    learning: LearningParams = field(default_factory=LearningParams)
    inference: InferenceParams = field(default_factory=InferenceParams)
    cut_length: float = 2000.0
    max_iters: int = 5
    patience: int = 2
    edge_threshold: float = DEFAULT_GRADIENT_THRESHOLD
    stroke_width: float = 2.0

    @property
    def training(self) -> TrainingParams:
        return TrainingParams(self.grouping, self.learning, self.inference, self.cut_length,
                              self.max_iters, self.patience)

    def to_dict(self) -> dict:
        return {
            "grouping": asdict(self.grouping),
            "learning": asdict(self.learning),
            "inference": asdict(self.inference),
            "training": {"cut_length": self.cut_length, "max_iters": self.max_iters, "patience": self.patience},
            "edges": {"threshold": self.edge_threshold},
            "render": {"stroke_width": self.stroke_width},
        }


# Regime with many short strokes per part (e.g. 90-second portrait sketches):
# continuity off, proximity and length weighted 0.5.
PRESETS = {
    "default": {},
    "short-strokes": {"grouping": {"w_con": 0.0, "w_pro": 0.5, "w_len": 0.5, "eta_sem": 8}},
}


def _update(dc, values: dict, section: str):
    if not values:
        return dc
    names = {f.name for f in fields(dc)}
    unknown = set(values) - names
    if unknown:
        raise InvalidArgumentError("unknown %s keys: %s" % (section, ", ".join(sorted(unknown))))
    return replace(dc, **values)


def config_from_dict(d: dict, base: SynthConfig | None = None) -> SynthConfig:
    cfg = base or SynthConfig()
    unknown = set(d) - {"grouping", "learning", "inference", "training", "edges", "render", "preset"}
    if unknown:
        raise InvalidArgumentError("unknown config sections: %s" % ", ".join(sorted(unknown)))
    if "preset" in d:
        if d["preset"] not in PRESETS:
            raise InvalidArgumentError("unknown preset %r" % d["preset"])
        cfg = config_from_dict(PRESETS[d["preset"]], cfg)
    try:
        cfg = replace(
            cfg,
            grouping=_update(cfg.grouping, d.get("grouping"), "grouping"),
            learning=_update(cfg.learning, d.get("learning"), "learning"),
            inference=_update(cfg.inference, d.get("inference"), "inference"),
        )
    except TypeError as exc:
        raise InvalidArgumentError(str(exc)) from exc
    tr = d.get("training") or {}
    if set(tr) - {"cut_length", "max_iters", "patience"}:
        raise InvalidArgumentError("unknown training keys")
    cfg = replace(cfg, **tr)
    if "edges" in d:
        cfg = replace(cfg, edge_threshold=float(d["edges"].get("threshold", cfg.edge_threshold)))
    if "render" in d:
        cfg = replace(cfg, stroke_width=float(d["render"].get("stroke_width", cfg.stroke_width)))
    return cfg


def load_config(path) -> SynthConfig:
    if path is None:
        return SynthConfig()
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError("config %s is not valid JSON: %s" % (path, exc)) from exc
    return config_from_dict(d)
