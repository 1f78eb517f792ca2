"""DI-DNN and SIP-DNN channel estimators.

DI feeds the LS estimate of every antenna into one network that outputs the
whole channel.  SIP reads only the high-resolution antennas: a refinement
network maps ``ls_A -> h_A`` and a prediction network maps ``ls_A -> h_B``,
and the two halves are scattered back into antenna order.  Targets are
divided by ``c`` so they fit the ``tanh`` output layer; estimates are
multiplied back by ``c``.
"""
from __future__ import annotations

import json
import logging
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .frontend import complex_to_real, real_to_complex
from .neural import (Dataset, LossTrace, MlpModel, TrainingConfig, chain, init_model,
                     load_checkpoint, save_checkpoint, train)
from .partition import AntennaPartition

log = logging.getLogger(__name__)

HIDDEN_ACTIVATIONS = ("relu", "relu", "relu", "tanh")

# hidden-layer widths keyed by (M, |A|); M=64 with eta = 0.2, 0.5, 0.8
REFINE_TABLE = {(64, 13): (50, 100, 50), (64, 32): (120, 200, 120), (64, 51): (200, 400, 200)}
PREDICT_TABLE = {(64, 13): (50, 100, 140), (64, 32): (120, 200, 120), (64, 51): (200, 100, 50)}


def di_architecture(M: int):
    """``2M -> 2.5M -> 3.125M -> 2.5M -> 2M`` (128-160-200-160-128 at M=64)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    d = 2 * M
    hidden = [round(d * 1.25), round(d * 1.5625), round(d * 1.25)]
    return chain([d, *hidden, d], HIDDEN_ACTIVATIONS)


def refine_architecture(M: int, n_a: int):
    d = 2 * n_a
    hidden = REFINE_TABLE.get((M, n_a), (2 * d, 4 * d, 2 * d))
    return chain([d, *hidden, d], HIDDEN_ACTIVATIONS)


def predict_architecture(M: int, n_a: int):
    d_in, d_out = 2 * n_a, 2 * (M - n_a)
    # off-table: 2*in, the midpoint, 2*out
    hidden = PREDICT_TABLE.get((M, n_a), (2 * d_in, d_in + d_out, 2 * d_out))
    return chain([d_in, *hidden, d_out], HIDDEN_ACTIVATIONS)


def sip_architectures(part: AntennaPartition):
    n_a = len(part.set_a)
    if n_a == 0 or len(part.set_b) == 0:
        raise ValueError("SIP needs both antenna sets non-empty")
    return refine_architecture(part.M, n_a), predict_architecture(part.M, n_a)


def _check_targets(targets, c, what):
    bad = np.any(np.abs(targets) >= 1.0, axis=1)
    if bad.any():
        warnings.warn(f"{what}: {int(bad.sum())} of {len(bad)} samples have targets outside "
                      f"(-1, 1) at c={c}; they are dropped", stacklevel=3)
    return ~bad


def build_di_dataset(h, ls, c: float = 3.0) -> Dataset:
    """Inputs are the stacked LS estimates, targets the stacked channel over ``c``.

    Samples whose scaled target leaves (-1, 1) are dropped, not clamped;
    ``meta["rejected"]`` counts them.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    h = np.atleast_2d(h)
    ls = np.atleast_2d(ls)
    if h.shape != ls.shape:
        raise ValueError(f"h {h.shape} and ls {ls.shape} differ in shape")
    x = complex_to_real(ls)
    y = complex_to_real(h) / c
    keep = _check_targets(y, c, "DI dataset")
    return Dataset(x[keep], y[keep], {"rejected": int((~keep).sum()), "c": c})


def build_sip_datasets(h, ls, part: AntennaPartition, c: float = 3.0):
    """``(refine, predict)`` datasets sharing the inputs ``ls_A``.

    A sample is dropped from both when any entry of ``h / c`` leaves (-1, 1),
    so the two input arrays stay identical.  With an empty B the predict
    dataset is ``None``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    if len(part.set_a) == 0:
        raise ValueError("SIP needs a non-empty high-resolution set")
    h = np.atleast_2d(h)
    ls = np.atleast_2d(ls)
    keep = _check_targets(complex_to_real(h) / c, c, "SIP datasets")
    x = complex_to_real(ls[:, part.set_a])[keep]
    meta = {"rejected": int((~keep).sum()), "c": c}
    r_data = Dataset(x, complex_to_real(h[:, part.set_a])[keep] / c, dict(meta))
    if len(part.set_b) == 0:
        return r_data, None
    mp_data = Dataset(x, complex_to_real(h[:, part.set_b])[keep] / c, dict(meta))
    return r_data, mp_data


@dataclass
class EstimatorBundle:
    kind: str
    partition: AntennaPartition
    c: float = 3.0
    di_model: MlpModel | None = None
    r_model: MlpModel | None = None
    mp_model: MlpModel | None = None

    def __post_init__(self):
        if self.kind not in ("di", "sip"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.kind == "di" and self.di_model is None:
            raise ValueError("a DI bundle needs di_model")
        if self.kind == "sip":
            if self.r_model is None:
                raise ValueError("a SIP bundle needs r_model")
            if len(self.partition.set_b) and self.mp_model is None:
                raise ValueError("a SIP bundle with low-resolution antennas needs mp_model")

    def estimate(self, ls) -> np.ndarray:
        return di_estimate(self, ls) if self.kind == "di" else sip_estimate(self, ls)


def di_estimate(bundle: EstimatorBundle, ls) -> np.ndarray:
    if bundle.kind != "di":
        raise ValueError("di_estimate needs a DI bundle")
    ls = np.asarray(ls)
    if ls.shape[-1] != bundle.partition.M:
        raise ValueError(f"expected {bundle.partition.M} antennas, got {ls.shape[-1]}")
    return bundle.c * real_to_complex(bundle.di_model.predict(complex_to_real(ls)))


def sip_estimate(bundle: EstimatorBundle, ls) -> np.ndarray:
    """Only ``ls[..., set_a]`` is read; entries on B never influence the output."""
    if bundle.kind != "sip":
        raise ValueError("sip_estimate needs a SIP bundle")
    part = bundle.partition
    ls = np.asarray(ls)
    if ls.shape[-1] != part.M:
        raise ValueError(f"expected {part.M} antennas, got {ls.shape[-1]}")
    x = complex_to_real(ls[..., part.set_a])
    h_a = bundle.c * real_to_complex(bundle.r_model.predict(x))
    if len(part.set_b) == 0:
        return part.combine(h_a, np.zeros(h_a.shape[:-1] + (0,), complex))
    h_b = bundle.c * real_to_complex(bundle.mp_model.predict(x))
    return part.combine(h_a, h_b)


def train_di(h, ls, part: AntennaPartition, cfg: TrainingConfig, c: float = 3.0,
             validation=None) -> tuple[EstimatorBundle, LossTrace]:
    """Train a DI bundle; ``validation`` is an optional ``(h, ls)`` pair."""
    data = build_di_dataset(h, ls, c)
    val = build_di_dataset(*validation, c) if validation is not None else None
    model = init_model(di_architecture(part.M), cfg.init_seed)
    model, trace = train(model, data, cfg, val)
    return EstimatorBundle("di", part, c, di_model=model), trace


def train_sip(h, ls, part: AntennaPartition, cfg: TrainingConfig, c: float = 3.0,
              validation=None, mp_cfg: TrainingConfig | None = None):
    """Train the refinement and prediction networks independently.

    They share no parameters, so the order of the two runs is irrelevant.
    ``mp_cfg`` defaults to ``cfg``; pass distinct seeds if wanted.  Returns
    ``(bundle, {"r": trace, "mp": trace})``.
    """
    r_data, mp_data = build_sip_datasets(h, ls, part, c)
    r_val = mp_val = None
    if validation is not None:
        r_val, mp_val = build_sip_datasets(*validation, part, c)
    traces = {}
    n_a = len(part.set_a)
    r_model, traces["r"] = train(init_model(refine_architecture(part.M, n_a), cfg.init_seed),
                                 r_data, cfg, r_val)
    mp_model = None
    if mp_data is not None:
        mp_cfg = mp_cfg or cfg
        mp_model, traces["mp"] = train(
            init_model(predict_architecture(part.M, n_a), mp_cfg.init_seed),
            mp_data, mp_cfg, mp_val)
    return EstimatorBundle("sip", part, c, r_model=r_model, mp_model=mp_model), traces


def save_bundle(bundle: EstimatorBundle, directory, name: str = "bundle") -> str:
    """Write the checkpoints plus a ``<name>.json`` manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = {}
    for key in ("di_model", "r_model", "mp_model"):
        model = getattr(bundle, key)
        if model is not None:
            fname = f"{name}.{key.split('_')[0]}.ckpt.json"
            save_checkpoint(model, os.path.join(directory, fname))
            files[key] = fname
    manifest = {
        "kind": bundle.kind,
        "c": bundle.c,
        "M": bundle.partition.M,
        "set_a": [int(i) for i in bundle.partition.set_a],
        "checkpoints": files,
    }
    path = os.path.join(directory, f"{name}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def load_bundle(path) -> EstimatorBundle:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    part = AntennaPartition.from_high_res(manifest["M"], manifest["set_a"])
    models = {key: load_checkpoint(os.path.join(base, fname))
              for key, fname in manifest["checkpoints"].items()}
    return EstimatorBundle(manifest["kind"], part, float(manifest["c"]), **models)
