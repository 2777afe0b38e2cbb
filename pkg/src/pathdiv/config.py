"""Run configuration: one JSON file of flat dotted keys, CLI flags override
the file, environment variables override both (secrets only).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .core import CurationConfig, content_hash

ENV_API_BASE = "RPD_API_BASE"
ENV_API_KEY = "RPD_API_KEY"


def _flatten(obj: Mapping, prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, dotted + "."))
        else:
            flat[dotted] = value
    return flat


@dataclass
class AppConfig:
    values: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | os.PathLike | None) -> "AppConfig":
        if path is None:
            return cls({})
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config root must be a JSON object")
        return cls(_flatten(raw))

    def get(self, key: str, default: Any = None) -> Any:
        if key == "api.base_url" and os.environ.get(ENV_API_BASE):
            return os.environ[ENV_API_BASE]
        if key == "api.key" and os.environ.get(ENV_API_KEY):
            return os.environ[ENV_API_KEY]
        return self.values.get(key, default)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "AppConfig":
        merged = dict(self.values)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return AppConfig(merged)

    def fingerprint(self) -> str:
        return content_hash(json.dumps(self.values, sort_keys=True, ensure_ascii=False))

    def curation_config(self) -> CurationConfig:
        g = self.get
        return CurationConfig(
            top_n_problems=int(g("curation.top_n_problems", 100)),
            solutions_per_problem=int(g("curation.solutions_per_problem", 3)),
            max_avg_tokens=int(g("curation.max_avg_tokens", 14000)),
            completeness_tail_tokens=int(g("curation.completeness_tail_tokens", 500)),
            min_valid_solutions=int(g("curation.min_valid_solutions", 10)),
            rng_seed=int(g("curation.rng_seed", 0)),
            distance_method=str(g("curation.distance_method", "rpd")),
        )
