"""On-disk formats: dataset files, report CSV and loss-trace CSV.

Dataset file layout (all little-endian)::

    offset  size  field
         0     8  magic  b"MIXADCDS"
         8     4  uint32 format version (1)
        12     4  uint32 header size in bytes (64)
        16     8  uint64 seed the split was drawn from
        24     8  uint64 n, number of samples
        32     4  uint32 M, number of antennas
        36     4  uint32 row width, 4 * M
        40     8  float64 SNR in dB
        48     8  float64 eta
        56     8  zero padding
        64     -  n rows of float64: Re h, Im h, Re ls, Im ls (M values each)
"""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass

import numpy as np

from .frontend import complex_to_real, real_to_complex

MAGIC = b"MIXADCDS"
VERSION = 1
_HEADER = struct.Struct("<8sIIQQIIdd8x")
HEADER_SIZE = _HEADER.size

CSV_HEADER = ("method", "snr_db", "eta", "pattern", "bits_low", "nmse", "nmse_db", "n_test",
              "seed", "model_path")


@dataclass(frozen=True)
class DatasetHeader:
    seed: int
    n: int
    M: int
    snr_db: float
    eta: float


def write_dataset(path, h, ls, header: DatasetHeader) -> None:
    h = np.atleast_2d(h)
    ls = np.atleast_2d(ls)
    if h.shape != ls.shape or h.shape != (header.n, header.M):
        raise ValueError(f"arrays {h.shape}/{ls.shape} do not match header n={header.n}, "
                         f"M={header.M}")
    rows = np.concatenate([complex_to_real(h), complex_to_real(ls)], axis=1)
    head = _HEADER.pack(MAGIC, VERSION, HEADER_SIZE, header.seed, header.n, header.M,
                        4 * header.M, header.snr_db, header.eta)
    try:
        with open(path, "wb") as fh:
            fh.write(head)
            fh.write(rows.astype("<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write dataset {path}: {exc}") from exc


def read_dataset(path):
    """Returns ``(header, h, ls)``."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read dataset {path}: {exc}") from exc
    if len(raw) < HEADER_SIZE:
        raise ValueError(f"{path}: truncated header")
    magic, version, size, seed, n, M, width, snr, eta = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION or size != HEADER_SIZE or width != 4 * M:
        raise ValueError(f"{path}: not a version-{VERSION} dataset file")
    body = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE)
    if body.size != n * width:
        raise ValueError(f"{path}: expected {n * width} values, found {body.size}")
    rows = body.reshape(n, width).astype(float)
    h = real_to_complex(rows[:, :2 * M])
    ls = real_to_complex(rows[:, 2 * M:])
    return DatasetHeader(seed, n, M, snr, eta), h, ls


def fmt(x) -> str:
    """Ten significant digits; integers stay integers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.10g" % x


def report_row(method, snr_db, eta, pattern, bits_low, nmse, n_test, seed, model_path) -> dict:
    nmse_db = 10.0 * math.log10(nmse) if nmse > 0 else (-math.inf if nmse == 0 else math.nan)
    return {"method": method, "snr_db": fmt(snr_db), "eta": fmt(eta), "pattern": pattern,
            "bits_low": fmt(bits_low), "nmse": fmt(nmse), "nmse_db": fmt(nmse_db),
            "n_test": fmt(n_test), "seed": fmt(seed), "model_path": model_path}


def row_order(row: dict):
    return (row["method"], float(row["snr_db"]), float(row["eta"]), row["pattern"])


def dumps_report(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in sorted(rows, key=row_order):
        writer.writerow(row)
    return buf.getvalue()


def write_report(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_report(rows))


def read_report(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


def write_trace(path, trace) -> None:
    """Per-epoch losses; epoch 0 is the untrained model."""
    val = list(trace.validation)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,train_mse,val_mse\n")
        for epoch, loss in enumerate(trace.train):
            v = fmt(val[epoch]) if epoch < len(val) else ""
            fh.write(f"{epoch},{fmt(loss)},{v}\n")
