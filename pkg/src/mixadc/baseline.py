"""LMMSE baseline for mixed-resolution front ends.

Each antenna set ``D`` is estimated on its own as

    h_D = C (alpha C + (sigma0^2/P) I + (1 - alpha) diag(C))^-1 r_D

where ``alpha`` is the quantizer's linear gain.  With the MSE-optimal
uniform step, ``alpha = 1 - distortion``; for such a quantizer this is also
the Bussgang LMMSE filter, with ``diag(h h^H)`` replaced by its mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frontend import GAUSSIAN_OPTIMAL_STEP, gaussian_distortion
from .partition import AntennaPartition

LMMSE_MODES = ("standard", "paper-literal")

# 1 - gaussian_distortion(b, GAUSSIAN_OPTIMAL_STEP[b]), frozen to 5 decimals.
DEFAULT_ALPHA_TABLE = {1: 0.63662, 2: 0.88115, 3: 0.96256, 4: 0.98846}


@dataclass(frozen=True)
class LmmseConfig:
    """``alpha_highres`` is used for unquantized antennas.

    Standard mode uses 1 (classical LMMSE); paper-literal mode uses 0.
    """

    mode: str = "standard"
    alpha_table: dict = field(default_factory=lambda: dict(DEFAULT_ALPHA_TABLE))
    alpha_highres: float | None = None

    def __post_init__(self):
        if self.mode not in LMMSE_MODES:
            raise ValueError(f"unknown LMMSE mode {self.mode!r}")
        if self.alpha_highres is None:
            object.__setattr__(self, "alpha_highres", 1.0 if self.mode == "standard" else 0.0)
        for a in list(self.alpha_table.values()) + [self.alpha_highres]:
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha values must lie in [0, 1], got {a}")


def alpha_from_quantizer(bits: int, step_scale: float | None = None) -> float:
    """Linear gain of a ``bits``-bit uniform quantizer on Gaussian input."""
    if step_scale is None:
        step_scale = GAUSSIAN_OPTIMAL_STEP[bits]
    return 1.0 - gaussian_distortion(bits, step_scale)


def distortion_factor(bits: int | None, cfg: LmmseConfig) -> float:
    if bits is None:
        return float(cfg.alpha_highres)
    try:
        return float(cfg.alpha_table[bits])
    except KeyError:
        raise KeyError(f"alpha_table has no entry for {bits} bits") from None


def lmmse_filter(C, alpha: float, P: float, sigma0_sq: float, mode: str = "standard") -> np.ndarray:
    """The matrix ``W`` such that the estimate is ``W @ r``.

    Both modes share the formula; they differ only in which ``alpha`` the
    caller picks for unquantized antennas (see :class:`LmmseConfig`).
    """
    if mode not in LMMSE_MODES:
        raise ValueError(f"unknown LMMSE mode {mode!r}")
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    R = alpha * C + (sigma0_sq / P) * np.eye(n) + (1.0 - alpha) * np.diag(np.diag(C).real)
    # C R^-1 = (R^-1 C)^H since both are Hermitian
    return np.linalg.solve(R, C).conj().T


def lmmse_estimate(ls_sub, C, alpha: float, P: float, sigma0_sq: float,
                   mode: str = "standard") -> np.ndarray:
    """Apply the filter to one LS vector or to rows of a batch."""
    W = lmmse_filter(C, alpha, P, sigma0_sq, mode)
    return np.asarray(ls_sub) @ W.T


def lmmse_mixed(ls, C, part: AntennaPartition, bits_low: int, bits_high: int | None,
                P: float, sigma0_sq: float, cfg: LmmseConfig = LmmseConfig()) -> np.ndarray:
    """Per-set LMMSE over the full array; rows of ``ls`` are samples."""
    ls = np.asarray(ls)
    out = np.zeros_like(ls, dtype=complex)
    for idx, bits in ((part.set_a, bits_high), (part.set_b, bits_low)):
        if len(idx) == 0:
            continue
        alpha = distortion_factor(bits, cfg)
        sub = C[np.ix_(idx, idx)]
        out[..., idx] = lmmse_estimate(ls[..., idx], sub, alpha, P, sigma0_sq, cfg.mode)
    return out
