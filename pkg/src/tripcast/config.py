"""Flat key=value configuration files and the run-time parameter bundle."""

import math
from dataclasses import dataclass, fields

__all__ = ["parse_kv_text", "parse_kv_file", "RunConfig", "KNOWN_MODELS", "KNOWN_VARIANTS"]

KNOWN_VARIANTS = ("offline", "v1", "v2")
KNOWN_MODELS = ("bayes", "expert", "unconditioned", "expweights", "greedy")


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines; blank lines and #-comments are ignored.

    Later occurrences of a key override earlier ones.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def parse_kv_file(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_kv_text(fh.read())


def _to_float(value: str) -> float:
    if value.lower() in ("inf", "infinity"):
        return math.inf
    return float(value)


def _to_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


@dataclass
class RunConfig:
    """Experiment parameters with their default values.

    epsilon/min_pts/radii_fraction/expire drive the clusterers; delta/d_max the
    source labeling; beta/alpha/eta/kappa the prediction models; split the
    train/test protocol.
    """

    epsilon: float = 100.0
    min_pts: int = 2
    radii_fraction: float = 0.5
    delta: float = 2.0
    d_max: float = 500.0
    expire: float = 28 * 86400.0
    variant: str = "v1"
    models: str = "bayes,expert,unconditioned,expweights,greedy"
    beta: float = 1.0
    alpha: float = 1.0
    eta: float = 0.5
    kappa: float = 1.0
    split: float = 0.8
    seed: int = 0
    fix_gap: float = 300.0
    distance_mode: str = "polyline"
    agreement_every: int = 10
    expert_random_fallback: bool = False

    _PARSERS = {
        "epsilon": _to_float,
        "min_pts": int,
        "radii_fraction": _to_float,
        "delta": _to_float,
        "d_max": _to_float,
        "expire": _to_float,
        "variant": str,
        "models": str,
        "beta": _to_float,
        "alpha": _to_float,
        "eta": _to_float,
        "kappa": _to_float,
        "split": _to_float,
        "seed": int,
        "fix_gap": _to_float,
        "distance_mode": str,
        "agreement_every": int,
        "expert_random_fallback": _to_bool,
    }

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        cfg = cls()
        cfg.apply(mapping)
        return cfg

    def apply(self, mapping: dict[str, str]) -> None:
        for key, value in mapping.items():
            if key not in self._PARSERS:
                raise ValueError(f"unknown config key: {key}")
            try:
                setattr(self, key, self._PARSERS[key](value))
            except ValueError as exc:
                raise ValueError(f"bad value for {key}: {value!r} ({exc})") from exc
        self.validate()

    def validate(self) -> None:
        if self.epsilon <= 0 or self.d_max <= 0 or self.expire <= 0:
            raise ValueError("epsilon, d_max, and expire must be positive")
        if self.min_pts < 2:
            raise ValueError("min_pts must be at least 2")
        if not 0 < self.radii_fraction <= 1:
            raise ValueError("radii_fraction must lie in (0, 1]")
        if self.delta <= 1:
            raise ValueError("delta must exceed 1")
        if not 0 < self.split < 1:
            raise ValueError("split must lie in (0, 1)")
        if self.variant not in KNOWN_VARIANTS:
            raise ValueError(f"unknown variant: {self.variant}")
        if self.distance_mode not in ("polyline", "straight"):
            raise ValueError(f"unknown distance_mode: {self.distance_mode}")
        if self.agreement_every < 1:
            raise ValueError("agreement_every must be at least 1")
        for name in self.model_list():
            if name not in KNOWN_MODELS:
                raise ValueError(f"unknown model: {name}")

    def model_list(self) -> list[str]:
        return [m.strip() for m in self.models.split(",") if m.strip()]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
