"""Channel model and mixed-resolution front end, step by step."""
# %%
import numpy as np

from mixadc.channel import ChannelModelConfig, analytic_covariance, draw_channels, steering_vector
from mixadc.frontend import (GAUSSIAN_OPTIMAL_STEP, PilotConfig, QuantizerSpec,
                             gaussian_distortion, quantize, receive)
from mixadc.partition import AntennaPartition

# %% [markdown]
# A 64-antenna half-wavelength ULA sees 8 paths, each arriving from one of
# 20 grid angles.  The steering vector has unit-modulus entries scaled by
# 1/sqrt(L), so the channel has E|h|^2 = M.

# %%
cfg = ChannelModelConfig()
a = steering_vector(cfg.aoa_grid[3], cfg.M, cfg.d_over_lambda, cfg.L)
print("steering norm^2:", np.vdot(a, a).real)

batch = draw_channels(cfg, 5000, seed=1)
print("mean |h|^2 per sample:", np.mean(np.sum(np.abs(batch.h) ** 2, axis=1)))

# %% [markdown]
# The grid holds 20 angles but only 10 distinct spatial frequencies, so the
# covariance has rank 10.  That low rank is what LMMSE and the networks exploit.

# %%
C = analytic_covariance(cfg)
eig = np.linalg.eigvalsh(C)[::-1]
print("leading eigenvalues:", np.round(eig[:12], 3))

# %% [markdown]
# Uniform mid-rise quantizers with the Gaussian-optimal step.  The closed
# form and a Monte-Carlo estimate of the normalized distortion agree.

# %%
x = np.random.default_rng(0).standard_normal(10 ** 6)
for bits, step in GAUSSIAN_OPTIMAL_STEP.items():
    mc = np.mean((x - quantize(x, bits, step)) ** 2)
    print(f"{bits} bit: step {step}, distortion {gaussian_distortion(bits, step):.5f} (MC {mc:.5f})")

# %% [markdown]
# Half the antennas keep full resolution, the other half see a 1-bit ADC.

# %%
part = AntennaPartition.from_high_res(cfg.M, range(32))
pilot = PilotConfig.from_snr(20.0)
rx = receive(batch.h[:1000], part, QuantizerSpec(bits_low=1), pilot,
             rng=np.random.default_rng(2))
err = np.abs(rx.ls - batch.h[:1000]) ** 2
print("LS error power on A:", err[:, part.set_a].mean(), " on B:", err[:, part.set_b].mean())
