"""Experiment configuration: defaults, presets, YAML round-trip and hashing."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import yaml

from .baseline import LmmseConfig
from .channel import ChannelModelConfig, default_grid
from .frontend import QuantizerSpec
from .neural import TrainingConfig

METHODS = ("ls", "lmmse", "di", "sip")
PATTERNS = ("block", "random")
TEST_AOA_MODES = ("holdout", "shifted", "same")
SNR_TRAINING = ("per-point", "pooled")

PRESETS = {
    "paper": {"n_train": 90_000, "n_val": 10_000, "n_test": 10_000, "epochs": 100},
    "desk": {"n_train": 20_000, "n_val": 2_000, "n_test": 2_000, "epochs": 50},
}


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelModelConfig = field(default_factory=ChannelModelConfig)
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    eta: tuple[float, ...] = (0.5,)
    pattern: str = "block"
    quantizer: QuantizerSpec = field(default_factory=QuantizerSpec)
    n_train: int = 90_000
    n_val: int = 10_000
    n_test: int = 10_000
    training: TrainingConfig = field(default_factory=TrainingConfig)
    lmmse: LmmseConfig = field(default_factory=LmmseConfig)
    methods: tuple[str, ...] = METHODS
    c: float = 3.0
    P: float = 1.0
    seed: int = 0
    out: str = "runs"
    test_aoa: str = "holdout"
    snr_training: str = "per-point"

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "eta", tuple(float(e) for e in self.eta))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if any(not 0.0 <= e <= 1.0 for e in self.eta):
            raise ValueError("every eta must lie in [0, 1]")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if min(self.n_train, self.n_val, self.n_test) < 0:
            raise ValueError("dataset sizes must be non-negative")
        if self.test_aoa not in TEST_AOA_MODES:
            raise ValueError(f"test_aoa must be one of {TEST_AOA_MODES}")
        if self.snr_training not in SNR_TRAINING:
            raise ValueError(f"snr_training must be one of {SNR_TRAINING}")
        if not self.c > 0 or not self.P > 0:
            raise ValueError("c and P must be positive")

    def with_preset(self, name: str) -> "ExperimentConfig":
        p = PRESETS[name]
        return replace(self, n_train=p["n_train"], n_val=p["n_val"], n_test=p["n_test"],
                       training=replace(self.training, epochs=p["epochs"]))

    def to_dict(self) -> dict:
        ch = self.channel
        grid = list(ch.aoa_grid)
        q = self.quantizer
        return {
            "channel": {
                "M": ch.M, "L": ch.L, "sigma_alpha_sq": ch.sigma_alpha_sq,
                "d_over_lambda": ch.d_over_lambda, "aoa_sampling": ch.aoa_sampling,
                # the default grid is written by size so the file stays readable
                "aoa_grid": ({"uniform": len(grid)} if grid == list(default_grid(len(grid)))
                             else grid),
            },
            "snr_db": list(self.snr_db),
            "eta": list(self.eta),
            "pattern": self.pattern,
            "quantizer": {
                "bits_low": q.bits_low,
                "bits_high": "inf" if q.bits_high is None else q.bits_high,
                "clip_scale": {int(k): float(v) for k, v in q.clip_scale.items()},
            },
            "dataset": {"train": self.n_train, "val": self.n_val, "test": self.n_test},
            "training": dataclasses.asdict(self.training),
            "lmmse": {
                "mode": self.lmmse.mode,
                "alpha_table": {int(k): float(v) for k, v in self.lmmse.alpha_table.items()},
                "alpha_highres": self.lmmse.alpha_highres,
            },
            "methods": list(self.methods),
            "c": self.c,
            "P": self.P,
            "seed": self.seed,
            "out": self.out,
            "test_aoa": self.test_aoa,
            "snr_training": self.snr_training,
        }

    @classmethod
    def from_dict(cls, doc: dict | None) -> "ExperimentConfig":
        doc = dict(doc or {})
        base = cls()
        if "preset" in doc:
            base = base.with_preset(doc.pop("preset"))
        kw = {}
        if "channel" in doc:
            ch = dict(doc.pop("channel"))
            grid = ch.pop("aoa_grid", None)
            if isinstance(grid, dict):
                grid = default_grid(int(grid["uniform"]), float(grid.get("offset", 0.0)))
            if grid is not None:
                ch["aoa_grid"] = tuple(float(x) for x in grid)
            kw["channel"] = ChannelModelConfig(**ch)
        if "quantizer" in doc:
            q = dict(doc.pop("quantizer"))
            if "bits_high" in q:
                q["bits_high"] = _parse_bits(q["bits_high"])
            if "clip_scale" in q:
                q["clip_scale"] = {int(k): float(v) for k, v in q["clip_scale"].items()}
            kw["quantizer"] = QuantizerSpec(**q)
        if "dataset" in doc:
            ds = doc.pop("dataset")
            for key in ("train", "val", "test"):
                if key in ds:
                    kw[f"n_{key}"] = int(ds[key])
        if "training" in doc:
            kw["training"] = replace(base.training, **doc.pop("training"))
        if "lmmse" in doc:
            lm = dict(doc.pop("lmmse"))
            if "alpha_table" in lm:
                lm["alpha_table"] = {int(k): float(v) for k, v in lm["alpha_table"].items()}
            kw["lmmse"] = LmmseConfig(**lm)
        for key in ("snr_db", "eta", "methods"):
            if key in doc:
                v = doc.pop(key)
                kw[key] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        for key in ("pattern", "c", "P", "seed", "out", "test_aoa", "snr_training"):
            if key in doc:
                kw[key] = doc.pop(key)
        if doc:
            raise ValueError(f"unknown config keys: {sorted(doc)}")
        return replace(base, **kw)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def config_hash(self, exclude=("out",)) -> str:
        doc = {k: v for k, v in self.to_dict().items() if k not in exclude}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def point_hash(self, snr_db: float, eta: float) -> str:
        """Hash of everything that determines one operating point's outputs.

        The sweep lists are excluded so adding points leaves existing hashes alone.
        """
        doc = {k: v for k, v in self.to_dict().items()
               if k not in ("out", "snr_db", "eta", "methods")}
        if self.snr_training == "pooled":
            doc["snr_pool"] = list(self.snr_db)
        doc["point"] = [float(snr_db), float(eta)]
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _parse_bits(v):
    if v is None or (isinstance(v, str) and v.lower() in ("inf", "none", "unquantized")):
        return None
    if isinstance(v, float) and math.isinf(v):
        return None
    return int(v)
