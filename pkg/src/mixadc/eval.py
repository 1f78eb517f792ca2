"""NMSE metrics, ADC placement patterns and SNR / eta sweeps.

All operating points of one experiment share the same channel and unit-noise
draws (common random numbers); only the noise scale, the partition and the
quantizer change between points.  Every method at a point sees the same test
inputs.
"""
from __future__ import annotations

import logging
import math
import os
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .baseline import lmmse_mixed
from .channel import ChannelModelConfig, analytic_covariance, draw_channels
from .config import ExperimentConfig
from .frontend import PilotConfig, QuantizerSpec, complex_normal, ls_estimate, quantize_mixed
from .neural import TrainingDiverged
from .partition import AntennaPartition, high_res_count
from .pipelines import EstimatorBundle, save_bundle, train_di, train_sip
from .seeding import derive_rng, derive_seed

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class OperatingPoint:
    snr_db: float
    eta: float
    pattern: str = "block"
    bits_low: int = 1
    method: str = ""

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.bits_low is not None and self.bits_low < 1:
            raise ValueError("bits_low must be >= 1")

    @property
    def key(self) -> str:
        return f"snr{self.snr_db:g}_eta{self.eta:g}_{self.pattern}"


@dataclass(frozen=True)
class NmseReport:
    point: OperatingPoint
    nmse: float
    sample_count: int
    seed: int
    status: str = "ok"
    excluded: int = 0
    model_path: str = ""

    @property
    def nmse_db(self) -> float:
        if not self.nmse > 0:
            return -math.inf if self.nmse == 0 else math.nan
        return 10.0 * math.log10(self.nmse)

    @property
    def method(self) -> str:
        return self.point.method


@dataclass(frozen=True)
class SampleSet:
    """Channels ``h`` and unit-variance noise ``w``, both (n, M)."""

    h: np.ndarray
    w: np.ndarray
    split: str
    seed: int

    def __len__(self):
        return self.h.shape[0]


def make_partition(M: int, eta: float, pattern: str = "block", seed: int = 0) -> AntennaPartition:
    """Block puts the high-resolution antennas first; random picks them uniformly."""
    n_a = high_res_count(M, eta)
    if pattern == "block":
        set_a = np.arange(n_a)
    elif pattern == "random":
        set_a = np.sort(np.random.default_rng(seed).choice(M, size=n_a, replace=False))
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return AntennaPartition.from_high_res(M, set_a)


def _ratios(truths, estimates):
    truths = np.atleast_2d(truths)
    estimates = np.atleast_2d(estimates)
    if truths.shape != estimates.shape:
        raise ValueError(f"shape mismatch {truths.shape} vs {estimates.shape}")
    power = np.sum(np.abs(truths) ** 2, axis=-1)
    err = np.sum(np.abs(truths - estimates) ** 2, axis=-1)
    ok = power > 0
    excluded = int((~ok).sum())
    if excluded:
        warnings.warn(f"{excluded} zero-norm samples excluded from NMSE", stacklevel=3)
    return err[ok] / power[ok], excluded


def nmse_full(truths, estimates) -> float:
    """Mean over samples of ``|h - h_hat|^2 / |h|^2``."""
    r, _ = _ratios(truths, estimates)
    return float(np.mean(r)) if r.size else math.nan


def nmse_weighted(truths, estimates, part: AntennaPartition) -> float:
    """``eta * NMSE(A) + (1 - eta) * NMSE(B)``; falls back to one set when the other is empty."""
    truths = np.atleast_2d(truths)
    estimates = np.atleast_2d(estimates)
    if not len(part.set_b):
        return nmse_full(truths[:, part.set_a], estimates[:, part.set_a])
    if not len(part.set_a):
        return nmse_full(truths[:, part.set_b], estimates[:, part.set_b])
    eta = part.eta
    return (eta * nmse_full(truths[:, part.set_a], estimates[:, part.set_a])
            + (1 - eta) * nmse_full(truths[:, part.set_b], estimates[:, part.set_b]))


def score(method: str, truths, estimates, part: AntennaPartition) -> float:
    """NMSE as reported for ``method``: over all antennas for DI, per-set weighted otherwise."""
    if method == "di":
        return nmse_full(truths, estimates)
    return nmse_weighted(truths, estimates, part)


def error_floor_slope(snrs, nmse_db) -> float:
    """NMSE slope in dB per 10 dB of SNR between the two highest SNR points."""
    order = np.argsort(snrs)
    s = np.asarray(snrs, float)[order][-2:]
    v = np.asarray(nmse_db, float)[order][-2:]
    return float(10.0 * (v[1] - v[0]) / (s[1] - s[0]))


def has_error_floor(snrs, nmse_db, threshold: float = -1.0) -> bool:
    return error_floor_slope(snrs, nmse_db) > threshold


def simulate(channel: ChannelModelConfig, n: int, seed: int, split: str,
             test_aoa: str = "holdout") -> SampleSet:
    """Channels plus unit noise for one split.

    ``test_aoa`` picks how test channels differ from training ones:
    ``holdout`` reserves a fixed tenth of all AoA sets for testing,
    ``shifted`` rotates the grid by half a grid step, ``same`` does nothing.
    """
    aoa_split = None
    if test_aoa == "holdout":
        aoa_split = "test" if split == "test" else "train"
    elif test_aoa == "shifted" and split == "test":
        channel = channel.shifted(np.pi / len(channel.aoa_grid))
    h = draw_channels(channel, n, seed, split=aoa_split).h
    w = np.empty_like(h)
    block = 4096
    for b, start in enumerate(range(0, n, block)):
        rng = derive_rng(seed, "noise", split, b)
        w[start:start + block] = complex_normal(rng, h[start:start + block].shape)
    return SampleSet(h, w, split, seed)


def evaluation_channel_model(config: ExperimentConfig) -> ChannelModelConfig:
    ch = config.channel
    if config.test_aoa == "shifted":
        return ch.shifted(np.pi / len(ch.aoa_grid))
    return ch


def observe(samples: SampleSet, part: AntennaPartition, quantizer: QuantizerSpec,
            pilot: PilotConfig) -> np.ndarray:
    """LS estimates ``r / sqrt(P)`` for every sample."""
    y = np.sqrt(pilot.P) * samples.h + np.sqrt(pilot.sigma0_sq) * samples.w
    return ls_estimate(quantize_mixed(y, part, quantizer, pilot), pilot.P)


class Experiment:
    """Holds one configuration's data and trained estimators.

    Data and trained bundles are cached per operating point, so overlapping
    sweeps (e.g. the SNR sweep and the eta sweep both containing eta=0.5,
    20 dB) train each point once.
    """

    def __init__(self, config: ExperimentConfig, out_dir: str | None = None):
        self.config = config
        self.out_dir = out_dir
        self._data: dict[str, SampleSet] = {}
        self._bundles: dict[tuple, dict] = {}
        self._covariance = None

    def data(self, split: str) -> SampleSet:
        if split not in self._data:
            n = {"train": self.config.n_train, "val": self.config.n_val,
                 "test": self.config.n_test}[split]
            seed = derive_seed(self.config.seed, "data", split)
            self._data[split] = simulate(self.config.channel, n, seed, split,
                                         self.config.test_aoa)
        return self._data[split]

    def partition(self, eta: float) -> AntennaPartition:
        cfg = self.config
        return make_partition(cfg.channel.M, eta, cfg.pattern,
                              derive_seed(cfg.seed, "partition", cfg.pattern, f"{eta:g}"))

    def pilot(self, snr_db: float) -> PilotConfig:
        return PilotConfig.from_snr(snr_db, P=self.config.P,
                                    sigma_alpha_sq=self.config.channel.sigma_alpha_sq)

    @property
    def covariance(self) -> np.ndarray:
        if self._covariance is None:
            self._covariance = analytic_covariance(evaluation_channel_model(self.config))
        return self._covariance

    def ls(self, split: str, snr_db: float, part: AntennaPartition) -> np.ndarray:
        cfg = self.config
        samples = self.data(split)
        if split != "test" and cfg.snr_training == "pooled":
            # experimental: cycle the training samples through every SNR of the sweep
            out = np.empty_like(samples.h)
            for i, snr in enumerate(cfg.snr_db):
                sl = slice(i, None, len(cfg.snr_db))
                sub = SampleSet(samples.h[sl], samples.w[sl], split, samples.seed)
                out[sl] = observe(sub, part, cfg.quantizer, self.pilot(snr))
            return out
        return observe(samples, part, cfg.quantizer, self.pilot(snr_db))

    def training_config(self, model: str, snr_db: float, eta: float):
        cfg = self.config
        snr_tag = "pooled" if cfg.snr_training == "pooled" else f"{snr_db:g}"
        labels = (model, snr_tag, f"{eta:g}", cfg.pattern)
        return replace(cfg.training,
                       init_seed=derive_seed(cfg.seed, "init", *labels),
                       shuffle_seed=derive_seed(cfg.seed, "shuffle", *labels))

    def bundles(self, snr_db: float, eta: float, methods) -> dict:
        """Train (or fetch cached) DI / SIP bundles for one point.

        Values are bundles, or the exception text when training diverged.
        """
        cfg = self.config
        key = (float(snr_db), float(eta)) if cfg.snr_training == "per-point" else ("pooled", float(eta))
        cached = self._bundles.setdefault(key, {})
        part = self.partition(eta)
        need = [m for m in methods if m in ("di", "sip") and m not in cached]
        if not need:
            return cached
        train, val = self.data("train"), self.data("val")
        ls_tr, ls_val = self.ls("train", snr_db, part), self.ls("val", snr_db, part)
        validation = (val.h, ls_val) if len(val) else None
        for method in need:
            if method == "sip" and len(part.set_a) == 0:
                cached[method] = "not-applicable"
                continue
            t0 = time.perf_counter()
            try:
                bundle, traces = self.train_method(method, snr_db, eta, train.h, ls_tr, validation)
            except TrainingDiverged as exc:
                log.warning("%s diverged at snr=%g eta=%g: %s", method, snr_db, eta, exc)
                cached[method] = f"diverged: {exc}"
                continue
            cached[method] = bundle
            cached[method + ":traces"] = traces
            log.info("trained %s at snr=%g eta=%g in %.1fs", method, snr_db, eta,
                     time.perf_counter() - t0)
        return cached

    def train_method(self, method: str, snr_db: float, eta: float, h, ls, validation=None):
        """Train one estimator on the given arrays with this point's derived seeds.

        Returns ``(bundle, traces)``; raises ``TrainingDiverged``.
        """
        cfg = self.config
        part = self.partition(eta)
        if method == "di":
            bundle, trace = train_di(h, ls, part, self.training_config("di", snr_db, eta),
                                     cfg.c, validation)
            return bundle, {"di": trace}
        if method == "sip":
            return train_sip(h, ls, part, self.training_config("r", snr_db, eta), cfg.c,
                             validation, mp_cfg=self.training_config("mp", snr_db, eta))
        raise ValueError(f"{method!r} is not a trainable method")

    def estimate(self, method: str, ls, snr_db: float, eta: float, bundle=None) -> np.ndarray:
        """Apply a non-trained method, or ``bundle`` for a trained one."""
        cfg = self.config
        if method == "ls":
            return ls
        if method == "lmmse":
            pilot = self.pilot(snr_db)
            return lmmse_mixed(ls, self.covariance, self.partition(eta), cfg.quantizer.bits_low,
                               cfg.quantizer.bits_high, pilot.P, pilot.sigma0_sq, cfg.lmmse)
        if bundle is None:
            raise ValueError(f"{method} needs a trained bundle")
        return bundle.estimate(ls)

    def run_point(self, snr_db: float, eta: float, methods=None) -> list[NmseReport]:
        cfg = self.config
        methods = tuple(methods or cfg.methods)
        part = self.partition(eta)
        test = self.data("test")
        ls = self.ls("test", snr_db, part)
        trained = self.bundles(snr_db, eta, methods)
        reports = []
        for method in methods:
            point = OperatingPoint(snr_db, eta, cfg.pattern, cfg.quantizer.bits_low, method)
            status, path, est = "ok", "", None
            if method in ("ls", "lmmse"):
                est = self.estimate(method, ls, snr_db, eta)
            else:
                bundle = trained.get(method)
                if isinstance(bundle, EstimatorBundle):
                    est = bundle.estimate(ls)
                    if self.out_dir:
                        path = save_bundle(bundle, os.path.join(self.out_dir, point.key), method)
                else:
                    status = bundle or "missing"
            nmse = math.nan if est is None else score(method, test.h, est, part)
            reports.append(NmseReport(point, nmse, len(test), cfg.seed, status, model_path=path))
        return reports


def run_snr_sweep(config: ExperimentConfig, experiment: Experiment | None = None,
                  eta: float | None = None) -> list[NmseReport]:
    """Every method at every SNR of the config, at ``eta`` (default: first eta)."""
    exp = experiment or Experiment(config)
    eta = config.eta[0] if eta is None else eta
    reports = []
    for snr in config.snr_db:
        reports += exp.run_point(snr, eta)
    return sort_reports(reports)


def run_eta_sweep(config: ExperimentConfig, experiment: Experiment | None = None,
                  snr_db: float | None = None) -> list[NmseReport]:
    """Every method at every eta of the config, at ``snr_db`` (default: first SNR)."""
    exp = experiment or Experiment(config)
    snr = config.snr_db[0] if snr_db is None else snr_db
    reports = []
    for eta in config.eta:
        reports += exp.run_point(snr, eta)
    return sort_reports(reports)


def sort_reports(reports) -> list[NmseReport]:
    return sorted(reports, key=lambda r: (r.point.method, r.point.snr_db, r.point.eta,
                                          r.point.pattern))


def select(reports, method: str) -> list[NmseReport]:
    return [r for r in reports if r.point.method == method]
