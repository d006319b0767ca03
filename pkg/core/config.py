"""
Configuration management for AMOS-VPR

Configuration is split into one dataclass per concern. A run configuration is
loaded from YAML or from a plain-text ``section.key=value`` file; both are
flattened to dotted keys, so the two formats are interchangeable. Unknown keys
are rejected.
"""

import os
import yaml
from pathlib import Path
from typing import Dict, Any, Optional, Tuple, List
from dataclasses import dataclass, field, fields, asdict

from core.errors import ConfigError


@dataclass
class TrainConfig:
    """SGD hyperparameters"""
    base_lr: float = 0.01
    lr_step_iters: int = 60000
    lr_factor: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.005
    batch_size: int = 50
    max_iters: int = 120000
    seed: int = 0
    log_interval: int = 100
    init_std: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.lr_factor < 1.0:
            raise ConfigError(f"train.lr_factor must lie in (0, 1), got {self.lr_factor}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"train.momentum must lie in [0, 1), got {self.momentum}")
        if self.lr_step_iters < 1:
            raise ConfigError(f"train.lr_step_iters must be >= 1, got {self.lr_step_iters}")
        if self.max_iters < 0:
            raise ConfigError(f"train.max_iters must be >= 0, got {self.max_iters}")
        if self.log_interval < 1:
            raise ConfigError(f"train.log_interval must be >= 1, got {self.log_interval}")


@dataclass
class AugmentConfig:
    """Resize/crop preprocessing"""
    resize_to: int = 256
    crop_to: int = 227
    train_crop: str = "random"  # random | center
    flip: bool = False

    def __post_init__(self):
        if self.crop_to > self.resize_to:
            raise ConfigError(f"augment.crop_to ({self.crop_to}) exceeds augment.resize_to ({self.resize_to})")
        if self.crop_to < 1:
            raise ConfigError(f"augment.crop_to must be >= 1, got {self.crop_to}")
        if self.train_crop not in ("random", "center"):
            raise ConfigError(f"augment.train_crop must be 'random' or 'center', got {self.train_crop!r}")


ENCODER_KINDS = ("multiscale", "holistic_max", "holistic_sum", "raw_flatten")


@dataclass
class EncoderConfig:
    """Descriptor encoder selection"""
    kind: str = "multiscale"
    scales: Tuple[int, ...] = (1, 2, 3, 4)
    normalize: bool = True

    def __post_init__(self):
        self.scales = tuple(int(s) for s in self.scales)
        if self.kind not in ENCODER_KINDS:
            raise ConfigError(f"encoder.kind must be one of {ENCODER_KINDS}, got {self.kind!r}")
        if not self.scales:
            raise ConfigError("encoder.scales must not be empty")
        if any(s < 1 for s in self.scales):
            raise ConfigError(f"encoder.scales must all be >= 1, got {self.scales}")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError(f"encoder.scales must be strictly increasing, got {self.scales}")

    def summary(self) -> str:
        if self.kind == "multiscale":
            return f"multiscale[{','.join(str(s) for s in self.scales)}]"
        return self.kind


@dataclass
class ToyConfig:
    """Synthetic place dataset generator"""
    num_places: int = 10
    images_per_place: int = 50
    image_size: int = 64
    brightness_range: float = 0.3
    hue_shift_range: float = 0.05
    noise_std: float = 0.02
    shift_max: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("num_places", "images_per_place", "image_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"toy.{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.shift_max < self.image_size / 2:
            raise ConfigError(f"toy.shift_max must lie in [0, image_size/2), got {self.shift_max}")
        if self.brightness_range < 0 or self.hue_shift_range < 0 or self.noise_std < 0:
            raise ConfigError("toy condition ranges must be non-negative")


@dataclass
class SplitConfig:
    """Per-camera train/val sampling"""
    train_per_camera: int = 40
    val_per_camera: int = 5
    black_threshold: float = 10 / 255

    def __post_init__(self):
        if self.train_per_camera < 1 or self.val_per_camera < 0:
            raise ConfigError("split.train_per_camera must be >= 1 and split.val_per_camera >= 0")


@dataclass
class EvalConfig:
    """Matching and evaluation"""
    metric: str = "cosine"
    tolerance: int = 0
    layer: str = "conv6"
    layers: Tuple[str, ...] = ()

    def __post_init__(self):
        self.layers = tuple(self.layers)
        if self.metric not in ("cosine", "euclidean"):
            raise ConfigError(f"eval.metric must be 'cosine' or 'euclidean', got {self.metric!r}")
        if self.tolerance < 0:
            raise ConfigError(f"eval.tolerance must be >= 0, got {self.tolerance}")


@dataclass
class LoggingConfig:
    """Logging sinks"""
    level: str = "INFO"
    file: str = ""


@dataclass
class RunConfig:
    """Merged view over every section plus global settings"""
    seed: int = 0
    workers: int = 1
    network: str = "amosnet-mini"
    train: TrainConfig = field(default_factory=TrainConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    toy: ToyConfig = field(default_factory=ToyConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def __post_init__(self):
        if self.network not in ("amosnet", "amosnet-mini"):
            raise ConfigError(f"network must be 'amosnet' or 'amosnet-mini', got {self.network!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


SECTIONS = {
    "train": TrainConfig,
    "augment": AugmentConfig,
    "encoder": EncoderConfig,
    "toy": ToyConfig,
    "split": SplitConfig,
    "eval": EvalConfig,
    "logging": LoggingConfig,
}
GLOBAL_KEYS = ("seed", "workers", "network")
SEEDED_SECTIONS = ("train", "toy")


def known_keys() -> List[str]:
    """Every dotted key a config file may set"""
    keys = list(GLOBAL_KEYS)
    for section, cls in SECTIONS.items():
        keys.extend(f"{section}.{f.name}" for f in fields(cls))
    return keys


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Convert a raw file/flag value to the type of the field default"""
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            if isinstance(value, str) and "/" in value:
                num, den = value.split("/", 1)
                return float(num) / float(den)
            return float(value)
        if isinstance(default, tuple):
            if isinstance(value, str):
                items = [v for v in value.replace("[", "").replace("]", "").split(",") if v.strip()]
            else:
                items = list(value)
            if key == "encoder.scales":
                return tuple(int(str(v).strip()) for v in items)
            return tuple(str(v).strip() for v in items)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}")


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in (data or {}).items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, dotted + "."))
        else:
            flat[dotted] = value
    return flat


def parse_key_value_text(text: str, source: str = "<text>") -> Dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped"""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


class Config:
    """Main configuration class"""

    def __init__(self, config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
        """Initialize configuration"""
        self.config_path = config_path
        self._values: Dict[str, Any] = {}
        if config_path:
            self._load_config()
        if overrides:
            self.override(overrides)

    def _load_config(self):
        """Load configuration from file"""
        if not os.path.exists(self.config_path):
            raise ConfigError(f"config file not found: {self.config_path}")
        with open(self.config_path, "r") as f:
            text = f.read()
        if Path(self.config_path).suffix in (".yaml", ".yml"):
            try:
                data = yaml.safe_load(text) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"malformed YAML in {self.config_path}: {e}")
            if not isinstance(data, dict):
                raise ConfigError(f"{self.config_path}: top level must be a mapping")
            flat = _flatten(data)
        else:
            flat = parse_key_value_text(text, self.config_path)
        self._merge(flat)

    def _merge(self, flat: Dict[str, Any]):
        allowed = set(known_keys())
        for key, value in flat.items():
            if key not in allowed:
                raise ConfigError(f"unknown config key: {key}")
            self._values[key] = value
        # bad values and broken invariants surface here rather than at first use
        _ = self.run

    def is_set(self, key: str) -> bool:
        """Whether key came from the file or a flag rather than a default"""
        return key in self._values

    def override(self, overrides: Dict[str, Any]):
        """Apply CLI-flag values on top of the file; None values are ignored"""
        self._merge({k: v for k, v in overrides.items() if v is not None})

    @property
    def run(self) -> RunConfig:
        """Build the typed run configuration"""
        defaults = RunConfig()
        global_kwargs = {}
        for key in GLOBAL_KEYS:
            if key in self._values:
                global_kwargs[key] = _coerce(key, self._values[key], getattr(defaults, key))
        sections = {}
        for section, cls in SECTIONS.items():
            kwargs = {}
            for f in fields(cls):
                dotted = f"{section}.{f.name}"
                default = getattr(getattr(defaults, section), f.name)
                if dotted in self._values:
                    kwargs[f.name] = _coerce(dotted, self._values[dotted], default)
            # the global seed stands in for section seeds that were not given
            if section in SEEDED_SECTIONS and "seed" in global_kwargs and "seed" not in kwargs:
                kwargs["seed"] = global_kwargs["seed"]
            sections[section] = cls(**kwargs)
        return RunConfig(**global_kwargs, **sections)

    def as_dict(self) -> Dict[str, Any]:
        """Nested plain-data view of the effective configuration"""
        data = asdict(self.run)
        for section in SECTIONS:
            for key, value in data[section].items():
                if isinstance(value, tuple):
                    data[section][key] = list(value)
        return data

    def save(self, path: str):
        """Save effective configuration to a YAML file"""
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as f:
            yaml.dump(self.as_dict(), f, default_flow_style=False, indent=2, sort_keys=True)
