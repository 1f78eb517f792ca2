"""Train DI and SIP estimators at one operating point and compare them with the baselines.

Reduced sizes keep this to about a minute; the desk preset (20k samples,
50 epochs) is what the acceptance suite uses.
"""
# %%
import logging
from dataclasses import replace

import numpy as np

from mixadc.config import ExperimentConfig
from mixadc.eval import Experiment

logging.basicConfig(level=logging.INFO, format="%(message)s")

# %%
cfg = replace(ExperimentConfig().with_preset("desk"), n_train=8000, n_val=1000, n_test=1000)
cfg = replace(cfg, training=replace(cfg.training, epochs=15))
exp = Experiment(cfg)

# %% [markdown]
# One call trains both networks (DI on every antenna, SIP on set A only) and
# scores all four methods on the identical test set.

# %%
for r in exp.run_point(20.0, 0.5):
    print(f"{r.method:6s} {r.nmse_db:7.2f} dB  ({r.status})")

# %% [markdown]
# SIP never reads the 1-bit antennas: changing their LS values leaves its
# estimate untouched, bit for bit.

# %%
sip = exp.bundles(20.0, 0.5, ("sip",))["sip"]
part = exp.partition(0.5)
ls = exp.ls("test", 20.0, part)
scrambled = ls.copy()
scrambled[:, part.set_b] = -scrambled[:, part.set_b] * 7
print("SIP unchanged:", np.array_equal(sip.estimate(ls), sip.estimate(scrambled)))

# %% [markdown]
# The loss traces start at the untrained model (epoch 0).

# %%
traces = exp.bundles(20.0, 0.5, ("di",))["di:traces"]["di"]
print("DI validation MSE by epoch:", np.round(traces.validation, 4))
