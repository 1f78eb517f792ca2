"""Acceptance criteria 1-11.

Each test prints one ``[PASS]``/``[FAIL]`` line (also collected in the
terminal summary).  The trend criteria 7-9 share one desk-scale
``Experiment``, so every operating point is trained once.
"""
from dataclasses import replace

import numpy as np
import pytest

from mixadc.baseline import LmmseConfig, lmmse_mixed
from mixadc.channel import ChannelModelConfig, analytic_covariance, monte_carlo_covariance
from mixadc.config import ExperimentConfig
from mixadc.eval import (Experiment, error_floor_slope, make_partition, nmse_full,
                         run_eta_sweep, run_snr_sweep, select, simulate)
from mixadc.frontend import (GAUSSIAN_OPTIMAL_STEP, PilotConfig, QuantizerSpec, quantize,
                             quantize_mixed, ls_estimate)
from mixadc.neural import (AdamState, TrainingConfig, adam_step, backward, chain,
                           flatten_grads, forward, init_model, mse_loss)
from mixadc.partition import AntennaPartition

# pure-Python scalar Adam on f(x) = (x - 3)^2 from x = 0 with lr 0.1 and default betas
ADAM_QUADRATIC_TRACE = [
    0.09999999983333335, 0.19989729258521102, 0.29961847654925267, 0.3990864689442145,
    0.4982205437727129, 0.5969363926185332, 0.6951462106969352, 0.7927588106102016,
    0.8896797663766276, 0.9858115903830454,
]

ETA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


# shared desk-scale runs ---------------------------------------------------------------

@pytest.fixture(scope="session")
def desk_config():
    return ExperimentConfig().with_preset("desk")


@pytest.fixture(scope="session")
def desk(desk_config):
    return Experiment(desk_config)


@pytest.fixture(scope="session")
def snr_curve(desk_config, desk):
    return run_snr_sweep(desk_config, desk, eta=0.5)


@pytest.fixture(scope="session")
def eta_curve(desk_config, desk):
    return run_eta_sweep(replace(desk_config, eta=ETA_GRID), desk, snr_db=20.0)


def curve(reports, method, axis="snr"):
    rows = select(reports, method)
    xs = [r.point.snr_db if axis == "snr" else r.point.eta for r in rows]
    return dict(zip(xs, (r.nmse_db for r in rows)))


def fmt_curve(c):
    return " ".join(f"{k:g}:{v:.2f}" for k, v in sorted(c.items()))


# 1-6: oracles ---------------------------------------------------------------------

def numeric_gradient(model, x, y, step=1e-6):
    grads = []
    for p in model.params():
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + step
            up = mse_loss(model.predict(x), y)
            p[i] = old - step
            down = mse_loss(model.predict(x), y)
            p[i] = old
            g[i] = (up - down) / (2 * step)
        grads.append(g)
    return np.concatenate([g.ravel() for g in grads])


def test_criterion_01_gradient_oracle(criterion):
    rng = np.random.default_rng(2024)
    errors = []
    for k in range(20):
        depth = int(rng.integers(0, 4))
        sizes = [int(s) for s in rng.integers(1, 17, size=depth + 2)]
        acts = [str(a) for a in rng.choice(["relu", "tanh"], size=depth)] + ["tanh"]
        model = init_model(chain(sizes, acts), k)
        for b in model.biases:
            b[:] = rng.normal(scale=0.1, size=b.shape)
        x = rng.normal(size=(8, sizes[0]))
        y = rng.uniform(-0.9, 0.9, size=(8, sizes[-1]))
        _, cache = forward(model, x)
        analytic = np.concatenate([g.ravel() for g in flatten_grads(backward(model, cache, y))])
        numeric = numeric_gradient(model, x, y)
        errors.append(np.max(np.abs(analytic - numeric)) / np.max(np.abs(numeric)))
    worst = max(errors)
    ok = criterion(1, "backprop vs central differences, 20 random nets", worst <= 1e-6,
                   f"max relative error {worst:.2e} (limit 1e-6)")
    assert ok


def test_criterion_02_adam_oracle(criterion):
    p = [np.zeros(1)]
    adam_step(p, [np.ones(1)], AdamState.zeros_like(p), 1, TrainingConfig(learning_rate=1e-3))
    first_err = abs(p[0][0] - (-1e-3 / (1 + 1e-8)))

    p = [np.zeros(1)]
    state = AdamState.zeros_like(p)
    trace = []
    for t in range(1, 11):
        adam_step(p, [2 * (p[0] - 3.0)], state, t, TrainingConfig(learning_rate=0.1))
        trace.append(p[0][0])
    trace_err = float(np.max(np.abs(np.array(trace) - ADAM_QUADRATIC_TRACE)))
    ok = criterion(2, "Adam first step and 10-step quadratic trace",
                   first_err <= 1e-12 and trace_err <= 1e-10,
                   f"first-step error {first_err:.1e} (1e-12), trace error {trace_err:.1e} (1e-10)")
    assert ok


def test_criterion_03_quantizer_oracle(criterion):
    rng = np.random.default_rng(3)
    x = rng.standard_normal(10 ** 6)
    q = quantize(x, 1, GAUSSIAN_OPTIMAL_STEP[1])
    distortion = np.mean((x - q) ** 2) / np.mean(x ** 2)
    rel = abs(distortion - 0.3634) / 0.3634

    violations = 0
    for bits in (1, 2, 3, 4):
        a, b = rng.normal(scale=2, size=(2, 10 ** 5))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        violations += int(np.sum(quantize(lo, bits, 0.5) > quantize(hi, bits, 0.5)))
        violations += int(np.sum(quantize(-a, bits, 0.5) != -quantize(a, bits, 0.5)))
    ok = criterion(3, "1-bit distortion, monotonicity, odd symmetry",
                   rel <= 0.02 and violations == 0,
                   f"distortion {distortion:.5f} vs 0.3634 ({100 * rel:.2f}% of 2%), "
                   f"{violations} violations")
    assert ok


def test_criterion_04_covariance_oracle(criterion):
    cfg = ChannelModelConfig()
    C = analytic_covariance(cfg)
    C_mc = monte_carlo_covariance(cfg, n=10 ** 6, seed=4)
    err = np.linalg.norm(C - C_mc) / np.linalg.norm(C)
    ok = criterion(4, "analytic vs Monte-Carlo covariance, 1e6 draws", err < 0.02,
                   f"relative Frobenius error {err:.4f} (limit 0.02)")
    assert ok


def unquantized_ls(snr_db, n=10 ** 4, seed=5):
    ch = ChannelModelConfig()
    samples = simulate(ch, n, seed, "test", test_aoa="same")
    part = AntennaPartition.from_high_res(ch.M, range(ch.M))
    pilot = PilotConfig.from_snr(snr_db)
    y = np.sqrt(pilot.P) * samples.h + np.sqrt(pilot.sigma0_sq) * samples.w
    ls = ls_estimate(quantize_mixed(y, part, QuantizerSpec(), pilot), pilot.P)
    return samples.h, ls, part, pilot


def test_criterion_05_ls_closed_form(criterion):
    details, ok = [], True
    for s in (0.0, 10.0, 20.0):
        h, ls, _, _ = unquantized_ls(s)
        target = 10 ** (-s / 10)
        nmse = nmse_full(h, ls)
        pooled = np.sum(np.abs(ls - h) ** 2) / np.sum(np.abs(h) ** 2)
        ok &= abs(nmse - target) <= 0.05 * target
        details.append(f"{s:g} dB: NMSE/target {nmse / target:.3f} "
                       f"(ratio of means {pooled / target:.3f})")
    ok = criterion(5, "unquantized LS NMSE within 5% of 10^(-s/10)", ok, "; ".join(details))
    assert ok


def test_criterion_06_lmmse_dominance(criterion):
    details, ok = [], True
    C = analytic_covariance(ChannelModelConfig())
    for s in (0.0, 10.0, 20.0):
        h, ls, part, pilot = unquantized_ls(s, seed=6)
        est = lmmse_mixed(ls, C, part, 1, None, pilot.P, pilot.sigma0_sq, LmmseConfig())
        mse_lmmse = np.mean(np.abs(est - h) ** 2)
        mse_ls = np.mean(np.abs(ls - h) ** 2)
        ok &= mse_lmmse < mse_ls if s == 0.0 else mse_lmmse <= mse_ls
        details.append(f"{s:g} dB: {mse_lmmse:.4g} vs {mse_ls:.4g}")
    ok = criterion(6, "LMMSE MSE <= LS MSE, strict at 0 dB", ok, "; ".join(details))
    assert ok


# 7-9: trend reproduction at desk scale -------------------------------------------------

def test_criterion_07_snr_trend(criterion, snr_curve):
    lmmse, di, sip = (curve(snr_curve, m) for m in ("lmmse", "di", "sip"))
    a = all(di[s] < lmmse[s] for s in lmmse)
    slope = {m: error_floor_slope([20.0, 30.0], [c[20.0], c[30.0]])
             for m, c in (("lmmse", lmmse), ("di", di), ("sip", sip))}
    b = slope["lmmse"] > -1 and slope["di"] > -1 and slope["sip"] <= -3
    c = sip[25.0] < di[25.0] and sip[30.0] < di[30.0]
    detail = (f"(a) {'ok' if a else 'no'}; (b) slopes dB/10dB lmmse {slope['lmmse']:.2f} "
              f"di {slope['di']:.2f} sip {slope['sip']:.2f} -> {'ok' if b else 'no'}; "
              f"(c) {'ok' if c else 'no'} | lmmse {fmt_curve(lmmse)} | di {fmt_curve(di)} | "
              f"sip {fmt_curve(sip)}")
    ok = criterion(7, "NMSE vs SNR trend, eta=0.5 block 1-bit", a and b and c, detail)
    assert ok


def test_sip_decreases_over_snr(snr_curve):
    sip = curve(snr_curve, "sip")
    values = [sip[s] for s in (0.0, 10.0, 20.0, 30.0)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test_criterion_08_eta_trend(criterion, eta_curve):
    di, sip = curve(eta_curve, "di", "eta"), curve(eta_curve, "sip", "eta")
    early = [sip[e] for e in ETA_GRID if e <= 0.5]
    strictly = all(b < a for a, b in zip(early, early[1:]))
    gain = sip[0.1] - sip[0.5]
    gap = [sip[e] - di[e] for e in ETA_GRID]
    crossings = [(ETA_GRID[i], ETA_GRID[i + 1]) for i in range(len(gap) - 1)
                 if gap[i] > 0 >= gap[i + 1]]
    ok = strictly and gain >= 5 and bool(crossings)
    detail = (f"sip gain 0.1->0.5 {gain:.2f} dB (>=5), strictly decreasing {strictly}, "
              f"crossover {crossings[0] if crossings else 'none'} | di {fmt_curve(di)} | "
              f"sip {fmt_curve(sip)}")
    ok = criterion(8, "NMSE vs eta trend at 20 dB", ok, detail)
    assert ok


def test_criterion_09_pattern_robustness(criterion, desk_config, desk):
    block = desk.run_point(20.0, 0.5, ("di", "sip"))
    random_exp = Experiment(replace(desk_config, pattern="random"))
    rand = random_exp.run_point(20.0, 0.5, ("di", "sip"))
    diffs = {b.method: abs(b.nmse_db - r.nmse_db) for b, r in zip(block, rand)}
    ok = all(d < 2 for d in diffs.values())
    detail = ", ".join(f"{m}: block {b.nmse_db:.2f} random {r.nmse_db:.2f} (|diff| {diffs[m]:.2f})"
                       for m, b, r in zip(diffs, block, rand))
    ok = criterion(9, "block vs random pattern within 2 dB", ok, detail)
    assert ok


# 10-11: determinism and input isolation -------------------------------------------------

def test_criterion_10_determinism(criterion, desk_config, snr_curve):
    again = Experiment(desk_config).run_point(20.0, 0.5)
    before = {r.method: r.nmse for r in snr_curve if r.point.snr_db == 20.0}
    same = all(before[r.method] == r.nmse for r in again)
    ok = criterion(10, "repeated point reproduces NMSE bitwise", same,
                   ", ".join(f"{r.method} {r.nmse!r}" for r in again))
    assert ok


def test_criterion_11_sip_isolation(criterion, desk, snr_curve):
    bundle = desk.bundles(20.0, 0.5, ("sip",))["sip"]
    part = desk.partition(0.5)
    ls = desk.ls("test", 20.0, part)
    rng = np.random.default_rng(11)
    perturbed = ls.copy()
    perturbed[:, part.set_b] += 10 * (rng.standard_normal((len(ls), len(part.set_b)))
                                      + 1j * rng.standard_normal((len(ls), len(part.set_b))))
    diff = np.max(np.abs(bundle.estimate(perturbed) - bundle.estimate(ls)))
    ok = criterion(11, "SIP output ignores B entries", diff == 0.0,
                   f"max |change| {float(diff)!r} over {len(ls)} test samples")
    assert ok


def test_block_partition_used(desk):
    assert list(desk.partition(0.5).set_a) == list(make_partition(64, 0.5).set_a)
