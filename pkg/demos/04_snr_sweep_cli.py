"""Run a small SNR sweep through the command-line front end and read the report.

Equivalent shell session::

    mixadc sweep --config sweep.yaml --out runs/demo --dry-run
    mixadc sweep --config sweep.yaml --out runs/demo
"""
# %%
import csv
import os
import tempfile

from mixadc.cli import main

# %%
config = """\
snr_db: [0, 10, 20, 30]
eta: [0.5]
dataset: {train: 3000, val: 500, test: 1000}
training: {epochs: 8}
seed: 42
"""
root = tempfile.mkdtemp(prefix="mixadc-demo-")
path = os.path.join(root, "sweep.yaml")
with open(path, "w") as fh:
    fh.write(config)
out = os.path.join(root, "run")

# %%
main(["sweep", "--config", path, "--out", out, "--dry-run"])
code = main(["sweep", "--config", path, "--out", out])
print("exit code", code)

# %% [markdown]
# Rows are ordered by method, then SNR, then eta.  A second invocation finds
# every point up to date and recomputes nothing.

# %%
with open(os.path.join(out, "report.csv")) as fh:
    for row in csv.DictReader(fh):
        print(f"{row['method']:6s} {row['snr_db']:>3s} dB  {float(row['nmse_db']):7.2f} dB")

main(["sweep", "--config", path, "--out", out])
print("outputs kept in", out)
