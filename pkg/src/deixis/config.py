"""Pipeline configuration: INI file, then ``DEIXIS_<SECTION>_<KEY>`` environment variables, then flags."""
from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import ConfigInvalid
from .hint.ablation import AblationConfig
from .qa.pipeline import DEFAULT_COUNTS, QAConfig
from .qa.templates import TaskCategory
from .resolver import ResolverConfig
from .synth import GenConfig

ENV_PREFIX = "DEIXIS_"

# section -> key -> (type, default)
SCHEMA = {
    "run": {
        "seed": (int, 0),
        "n_clips": (int, 500),
        "fps": (float, 30.0),
        "clip_len_s": (str, "3,5"),
        "multi_gesture_prob": (float, 0.5),
        "tau": (float, 0.5),
    },
    "resolver": {
        "conf_threshold": (float, 0.5),
        "dwell_min_s": (float, 1.0),
        "angle_max": (float, 15.0),
    },
    "qa": {
        **{c.value.lower(): (int, DEFAULT_COUNTS[c]) for c in TaskCategory},
        "spatial_binary_prob": (float, 0.25),
    },
    "rephraser": {
        "mode": (str, "rule"),
        "endpoint": (str, ""),
        "timeout_s": (float, 5.0),
        "max_inflight": (int, 4),
        "fallback": (bool, True),
    },
    "adapter": {
        "d_h": (int, 64),
        "steps": (int, 300),
        "lr": (float, 0.01),
        "test_fraction": (float, 0.25),
    },
}


def _coerce(kind, raw, where: str):
    if isinstance(raw, kind) and kind is not bool:
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            if isinstance(raw, bool):
                return raw
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError as exc:
        raise ConfigInvalid(f"{where}: cannot read {text!r} as {kind.__name__}") from exc


@dataclass(frozen=True)
class PipelineConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
        for section, keys in self.values.items():
            if section not in SCHEMA:
                raise ConfigInvalid(f"unknown config section [{section}]")
            for key, raw in keys.items():
                if key not in SCHEMA[section]:
                    raise ConfigInvalid(f"unknown config key {section}.{key}")
                merged[section][key] = _coerce(SCHEMA[section][key][0], raw, f"{section}.{key}")
        object.__setattr__(self, "values", merged)
        # build every derived config once so bad values fail here
        self.gen_config()
        self.qa_config()
        self.gate_tau()

    def __getitem__(self, dotted: str):
        section, key = dotted.split(".", 1)
        return self.values[section][key]

    def with_overrides(self, overrides: Mapping[str, object]) -> "PipelineConfig":
        vals = {s: dict(k) for s, k in self.values.items()}
        for dotted, raw in overrides.items():
            if raw is None:
                continue
            if "." not in dotted:
                raise ConfigInvalid(f"override {dotted!r} must look like section.key")
            section, key = dotted.split(".", 1)
            vals.setdefault(section, {})[key] = raw
        return PipelineConfig(vals)

    @property
    def seed(self) -> int:
        return self["run.seed"]

    @property
    def n_clips(self) -> int:
        return self["run.n_clips"]

    def gate_tau(self) -> float:
        tau = self["run.tau"]
        if not 0.0 <= tau <= 1.0:
            raise ConfigInvalid(f"run.tau must lie in [0, 1], got {tau}")
        return tau

    def gen_config(self) -> GenConfig:
        try:
            lo, hi = (float(x) for x in self["run.clip_len_s"].split(","))
        except ValueError as exc:
            raise ConfigInvalid("run.clip_len_s must be 'min,max'") from exc
        if self.n_clips < 0:
            raise ConfigInvalid("run.n_clips must be non-negative")
        cfg = replace(GenConfig(), fps=self["run.fps"], clip_len_s=(lo, hi), multi_gesture_prob=self["run.multi_gesture_prob"])
        return cfg.validate()

    def resolver_config(self) -> ResolverConfig:
        r = self.values["resolver"]
        return ResolverConfig(r["conf_threshold"], r["dwell_min_s"], r["angle_max"])

    def qa_config(self, categories: Optional[list] = None) -> QAConfig:
        q = self.values["qa"]
        counts = {c: q[c.value.lower()] for c in TaskCategory}
        if categories:
            wanted = {TaskCategory.parse(c) for c in categories}
            counts = {c: (n if c in wanted else 0) for c, n in counts.items()}
        try:
            return QAConfig(
                seed=self.seed,
                counts=counts,
                spatial_binary_prob=q["spatial_binary_prob"],
                resolver=self.resolver_config(),
                rephrase_mode=self["rephraser.mode"],
                rephrase_fallback=self["rephraser.fallback"],
            )
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def ablation_config(self) -> AblationConfig:
        a = self.values["adapter"]
        return AblationConfig(
            seed=self.seed, n_clips=self.n_clips, test_fraction=a["test_fraction"],
            d_h=a["d_h"], steps=a["steps"], lr=a["lr"], tau=self.gate_tau(),
        )

    def to_dict(self) -> dict:
        return {s: dict(sorted(k.items())) for s, k in sorted(self.values.items())}

    def hash(self, stage: str = "qa") -> str:
        """Digest of the values that shape each record of a stage's output.

        ``"gen"`` covers clip synthesis; ``"qa"`` adds resolver, question and
        rephrasing settings. Batch size, the gate threshold, toy-training knobs
        and rephraser transport settings are left out.
        """
        d = self.to_dict()
        run = {k: v for k, v in d["run"].items() if k not in ("tau", "n_clips")}
        if stage == "gen":
            picked = {"run": run}
        elif stage == "qa":
            picked = {
                "run": run, "resolver": d["resolver"], "qa": d["qa"],
                "rephraser": {"mode": d["rephraser"]["mode"], "fallback": d["rephraser"]["fallback"]},
            }
        else:
            raise ValueError(f"unknown stage {stage!r}")
        blob = json.dumps(picked, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def to_ini(self) -> str:
        lines = []
        for section, keys in self.to_dict().items():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in keys.items())
            lines.append("")
        return "\n".join(lines)


def env_overrides(environ: Mapping[str, str] = os.environ) -> dict:
    """``DEIXIS_RUN_SEED=7`` becomes ``{"run.seed": "7"}``; unknown names are ignored."""
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        for section, keys in SCHEMA.items():
            if rest.startswith(section + "_") and rest[len(section) + 1:] in keys:
                out[f"{section}.{rest[len(section) + 1:]}"] = value
    return out


def load_config(path=None, environ: Mapping[str, str] = os.environ, overrides: Optional[Mapping] = None) -> PipelineConfig:
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            from .errors import IoFailure

            raise IoFailure(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
        values = {s: dict(parser.items(s)) for s in parser.sections()}
    cfg = PipelineConfig(values)
    cfg = cfg.with_overrides(env_overrides(environ))
    return cfg.with_overrides(overrides or {})
