"""Multipath channels over a uniform linear array.

A channel is the superposition of ``L`` plane waves,
``h = sum_l alpha_l a(phi_l)`` with ``alpha_l ~ CN(0, sigma_alpha_sq)`` and
``a(phi)`` the ULA response normalized by ``1/sqrt(L)``.  Antennas are indexed
from zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .seeding import derive_rng

SAMPLING_MODES = ("grid-without-replacement", "grid-with-replacement", "continuous-uniform")
HOLDOUT_SPLITS = (None, "train", "test")

# Samples are generated in fixed-size blocks, each with its own derived stream,
# so a dataset is identical whichever worker produces which block.
BLOCK_SIZE = 1024

# One in HOLDOUT_MODULUS AoA sets is reserved for the test split.
HOLDOUT_MODULUS = 10


def default_grid(size: int = 20, offset: float = 0.0) -> tuple[float, ...]:
    return tuple(2.0 * np.pi * k / size + offset for k in range(size))


@dataclass(frozen=True)
class ChannelModelConfig:
    M: int = 64
    L: int = 8
    sigma_alpha_sq: float = 1.0
    d_over_lambda: float = 0.5
    aoa_grid: tuple[float, ...] = field(default_factory=default_grid)
    aoa_sampling: str = "grid-without-replacement"

    def __post_init__(self):
        object.__setattr__(self, "aoa_grid", tuple(float(x) for x in self.aoa_grid))
        if self.M < 1 or self.L < 1:
            raise ValueError(f"M and L must be >= 1, got M={self.M}, L={self.L}")
        if self.sigma_alpha_sq <= 0 or self.d_over_lambda <= 0:
            raise ValueError("sigma_alpha_sq and d_over_lambda must be positive")
        if self.aoa_sampling not in SAMPLING_MODES:
            raise ValueError(f"unknown aoa_sampling {self.aoa_sampling!r}")
        if self.aoa_sampling != "continuous-uniform" and not self.aoa_grid:
            raise ValueError("grid sampling needs a non-empty aoa_grid")
        if self.aoa_sampling == "grid-without-replacement" and self.L > len(self.aoa_grid):
            raise ValueError(f"cannot draw L={self.L} distinct AoAs from a grid of {len(self.aoa_grid)}")

    def shifted(self, offset: float) -> "ChannelModelConfig":
        """Same model with every grid AoA rotated by ``offset`` radians."""
        return replace(self, aoa_grid=tuple(x + offset for x in self.aoa_grid))


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    gains: np.ndarray
    aoas: np.ndarray


@dataclass(frozen=True)
class ChannelBatch:
    """``n`` realizations stacked row-wise: ``h`` is (n, M), gains/aoas (n, L)."""

    h: np.ndarray
    gains: np.ndarray
    aoas: np.ndarray

    def __len__(self):
        return self.h.shape[0]

    def __getitem__(self, i) -> ChannelRealization:
        return ChannelRealization(self.h[i], self.gains[i], self.aoas[i])


def steering_vector(phi: float, M: int, d_over_lambda: float = 0.5, L: int = 1) -> np.ndarray:
    """ULA response ``exp(-j 2 pi d/lambda m sin(phi)) / sqrt(L)`` for m = 0..M-1."""
    if M < 1 or L < 1:
        raise ValueError(f"M and L must be >= 1, got M={M}, L={L}")
    m = np.arange(M)
    return np.exp(-2j * np.pi * d_over_lambda * m * np.sin(phi)) / np.sqrt(L)


def steering_matrix(phis, M: int, d_over_lambda: float = 0.5, L: int = 1) -> np.ndarray:
    """Steering vectors for an array of angles; output shape ``phis.shape + (M,)``."""
    phis = np.asarray(phis, dtype=float)
    m = np.arange(M)
    return np.exp(-2j * np.pi * d_over_lambda * np.sin(phis)[..., None] * m) / np.sqrt(L)


def assemble(gains, aoas, cfg: ChannelModelConfig) -> np.ndarray:
    """Sum of ``gains * a(aoas)`` over the last axis of the path arrays."""
    A = steering_matrix(aoas, cfg.M, cfg.d_over_lambda, cfg.L)
    return np.einsum("...l,...lm->...m", gains, A)


def _set_keys(indices: np.ndarray) -> np.ndarray:
    """Order-independent 64-bit key per row of grid indices (splitmix64 finalizer)."""
    idx = np.sort(indices, axis=1).astype(np.uint64)
    key = np.zeros(idx.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for col in idx.T:
            key = key * np.uint64(1_000_003) + col + np.uint64(1)
            key ^= key >> np.uint64(30)
            key *= np.uint64(0xBF58476D1CE4E5B9)
            key ^= key >> np.uint64(27)
            key *= np.uint64(0x94D049BB133111EB)
            key ^= key >> np.uint64(31)
    return key


def holdout_mask(indices: np.ndarray) -> np.ndarray:
    """True for AoA sets reserved for testing (about 1 in ``HOLDOUT_MODULUS``)."""
    return _set_keys(indices) % np.uint64(HOLDOUT_MODULUS) == 0


def _draw_indices(cfg: ChannelModelConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    K = len(cfg.aoa_grid)
    if cfg.aoa_sampling == "grid-without-replacement":
        # argsort of iid uniforms is a uniformly random permutation per row
        return np.argsort(rng.random((n, K)), axis=1)[:, : cfg.L]
    return rng.integers(0, K, size=(n, cfg.L))


def _draw_grid_indices(cfg: ChannelModelConfig, n: int, rng: np.random.Generator, split) -> np.ndarray:
    if split is None:
        return _draw_indices(cfg, n, rng)
    keep_test = split == "test"
    # the holdout class is about 1/HOLDOUT_MODULUS of all sets
    batch = (HOLDOUT_MODULUS + 2) * n if keep_test else n + n // 4 + 8
    out = []
    have = 0
    while have < n:
        idx = _draw_indices(cfg, batch, rng)
        idx = idx[holdout_mask(idx) == keep_test]
        out.append(idx)
        have += len(idx)
    return np.concatenate(out)[:n]


def _draw_gains(cfg: ChannelModelConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    std = np.sqrt(cfg.sigma_alpha_sq / 2.0)
    g = rng.standard_normal((n, cfg.L, 2))
    return std * (g[..., 0] + 1j * g[..., 1])


def _draw_block(cfg: ChannelModelConfig, n: int, rng: np.random.Generator, split):
    if cfg.aoa_sampling == "continuous-uniform":
        if split is not None:
            raise ValueError("AoA-set holdout needs a grid sampling mode")
        aoas = rng.uniform(0.0, 2.0 * np.pi, size=(n, cfg.L))
        gains = _draw_gains(cfg, n, rng)
        return assemble(gains, aoas, cfg), gains, aoas
    idx = _draw_grid_indices(cfg, n, rng, split)
    gains = _draw_gains(cfg, n, rng)
    # scatter gains onto the grid, then one product with the grid steering matrix
    K = len(cfg.aoa_grid)
    weights = np.zeros((n, K), dtype=complex)
    np.add.at(weights, (np.arange(n)[:, None], idx), gains)
    S = steering_matrix(cfg.aoa_grid, cfg.M, cfg.d_over_lambda, cfg.L)
    return weights @ S, gains, np.asarray(cfg.aoa_grid)[idx]


def draw_channel(cfg: ChannelModelConfig, rng: np.random.Generator) -> ChannelRealization:
    h, gains, aoas = _draw_block(cfg, 1, rng, None)
    return ChannelRealization(h[0], gains[0], aoas[0])


def draw_channels(cfg: ChannelModelConfig, n: int, seed: int, split=None) -> ChannelBatch:
    """Draw ``n`` channels deterministically from ``seed``.

    ``split`` restricts AoA sets: ``"test"`` keeps only held-out sets,
    ``"train"`` excludes them, ``None`` draws from the full grid.
    """
    if split not in HOLDOUT_SPLITS:
        raise ValueError(f"split must be one of {HOLDOUT_SPLITS}, got {split!r}")
    hs, gs, phis = [], [], []
    for block, start in enumerate(range(0, n, BLOCK_SIZE)):
        rng = derive_rng(seed, "channel", split or "all", block)
        # always a full block, so a longer draw extends a shorter one
        h, gains, aoas = _draw_block(cfg, BLOCK_SIZE, rng, split)
        size = min(BLOCK_SIZE, n - start)
        hs.append(h[:size])
        gs.append(gains[:size])
        phis.append(aoas[:size])
    if not hs:
        return ChannelBatch(np.zeros((0, cfg.M), complex), np.zeros((0, cfg.L), complex),
                            np.zeros((0, cfg.L)))
    return ChannelBatch(np.concatenate(hs), np.concatenate(gs), np.concatenate(phis))


def analytic_covariance(cfg: ChannelModelConfig) -> np.ndarray:
    """``E{h h^H}`` for grid sampling: ``sigma_alpha_sq`` times the grid average of ``a a^H``.

    Steering vectors here are unnormalized (unit-modulus entries), so every
    diagonal entry equals ``sigma_alpha_sq``.  The result is the same for
    sampling with or without replacement because each AoA is marginally
    uniform on the grid in both modes.
    """
    if cfg.aoa_sampling == "continuous-uniform":
        raise NotImplementedError(
            "no closed form for continuous-uniform AoAs; use monte_carlo_covariance"
        )
    A = steering_matrix(cfg.aoa_grid, cfg.M, cfg.d_over_lambda, L=1)
    C = cfg.sigma_alpha_sq * (A.T @ A.conj()) / len(cfg.aoa_grid)
    return (C + C.conj().T) / 2


def monte_carlo_covariance(cfg: ChannelModelConfig, n: int = 1_000_000, seed: int = 0,
                           split=None) -> np.ndarray:
    """Sample estimate of ``E{h h^H}`` over ``n`` draws, accumulated block-wise."""
    C = np.zeros((cfg.M, cfg.M), dtype=complex)
    chunk = 50 * BLOCK_SIZE
    for i, start in enumerate(range(0, n, chunk)):
        size = min(chunk, n - start)
        h = draw_channels(cfg, size, seed=_chunk_seed(seed, i), split=split).h
        C += h.T @ h.conj()
    return C / n


def _chunk_seed(seed: int, i: int) -> int:
    rng = derive_rng(seed, "mc-covariance", i)
    return int(rng.integers(0, 2**62))
