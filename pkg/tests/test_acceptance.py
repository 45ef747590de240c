"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one PASS/FAIL line, repeated in the terminal summary.
The synthetic 426-channel corpus behind criteria 4 and 6 is fitted once per
session; expect this module to run for about an hour on one core.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from mpmfit.attenuation import AttenuationCoefficients
from mpmfit.generator import (
    DEFAULT_A,
    DEFAULT_A0,
    DEFAULT_A1,
    DEFAULT_GAINS,
    DEFAULT_N,
    GeneratorConfig,
    default_length_mixture,
    generate,
    sample_parameter_set,
)
from mpmfit.grid import FrequencyGrid, lattice_for, max_length, num_paths
from mpmfit.pipeline import fit_channels
from mpmfit.stats.dependence import corpus_acf
from mpmfit.stats.distributions import CATALOG, DistributionSpec, fit_params
from mpmfit.stats.goodness import select_distribution
from mpmfit.stats.mixtures import fit_gain_mixture, fit_length_mixture
from mpmfit.stats.regression import A0_VS_GAIN, A_VS_GAIN, PATHS_VS_SPREAD_GAIN
from mpmfit.synth import synthesize
from mpmfit.wls import build_system, path_loss, solve_gains
from test_wls import random_system, stacked_oracle

ROOT = Path(__file__).resolve().parent.parent
CORPUS_SIZE = 426
WORKERS = os.cpu_count() or 1


@pytest.fixture(scope="module")
def corpus():
    cfg = GeneratorConfig(seed=426)
    pairs = generate(cfg, CORPUS_SIZE)
    t = time.perf_counter()
    entries = fit_channels([ch for _, ch in pairs], workers=WORKERS)
    return [p for p, _ in pairs], entries, time.perf_counter() - t


def test_criterion_1_grid_constants(record):
    grid = FrequencyGrid(1e6, 62.5978e3, 1262, 2e8)
    best = np.inf
    for _ in range(20):
        t = time.perf_counter()
        L = max_length(grid)
        N = num_paths(grid, L)
        best = min(best, time.perf_counter() - t)
    # the exact length is nu / delta_f = 3195.0005 m
    ok = abs(L - 3195.0) < 1e-3 and N == 2554 and best < 1e-3
    record(1, ok, f"L={L:.4f} m, N={N}, runtime {best * 1e6:.1f} us")
    assert ok


def test_criterion_2_round_trip_fit(record):
    cfg = GeneratorConfig(max_paths=50, min_abs_gain=0.05, seed=2)
    lattice = cfg.lattice
    pairs = generate(cfg, 50)
    entries = fit_channels([ch for _, ch in pairs], workers=WORKERS)
    nrmse_ok = 0
    required = retained = 0
    lost_channels = []
    for (p, _), e in zip(pairs, entries):
        assert e.ok, e.error
        r = e.report
        nrmse_ok += r.final_nrmse_db <= -20.0
        score = np.abs(p.A * p.gains) * path_loss(cfg.grid.frequencies, p.lengths, p.a0, p.a1).sum(axis=0)
        need = p.indices[score > 2.0 * r.exit_score]
        kept = np.isin(need, e.params.indices)
        required += need.size
        retained += int(kept.sum())
        if not kept.all():
            lost_channels.append(e.id)
    ok = nrmse_ok == 50 and retained == required
    record(
        2,
        ok,
        f"NRMSE <= -20 dB on {nrmse_ok}/50 channels; dominant generating paths kept {retained}/{required}; "
        f"channels losing one: {len(lost_channels)} (lattice N={lattice.N})",
    )
    assert nrmse_ok == 50
    assert retained == required, f"dominant paths dropped in {lost_channels}"


def test_criterion_3_small_instance_oracle(record):
    worst = 0.0
    for seed in range(200):
        ch, lat, atten, active = random_system(seed)
        assert active.size <= 12 and ch.grid.M <= 32
        g = solve_gains(build_system(ch, lat, atten, active), ch)
        go = stacked_oracle(ch, lat, atten, active).real
        worst = max(worst, np.linalg.norm(g - go) / np.linalg.norm(go))
    ok = worst <= 1e-8
    record(3, ok, f"200 systems, worst relative difference {worst:.2e}")
    assert ok


def test_criterion_4_population_behavior(record, corpus):
    _, entries, seconds = corpus
    fitted = [e for e in entries if e.ok]
    n = np.array([e.report.final_path_count for e in fitted])
    nr = np.array([e.report.final_nrmse_db for e in fitted])
    ok = len(fitted) == CORPUS_SIZE and 100 <= n.mean() <= 450 and -21.0 <= nr.mean() <= -20.0
    record(
        4,
        ok,
        f"{len(fitted)}/{CORPUS_SIZE} fitted in {seconds / 60:.1f} min; mean paths {n.mean():.2f}, "
        f"mean NRMSE {nr.mean():.3f} dB (sd {nr.std(ddof=1):.4f})",
    )
    assert ok


def _recovery(rng):
    """Relative errors of parameters and absolute errors of weights at n = 1e5."""
    lattice = lattice_for(FrequencyGrid.reference())
    errors = {}
    for name, spec in (("a0", DEFAULT_A0), ("a1", DEFAULT_A1), ("N", DEFAULT_N), ("A", DEFAULT_A)):
        fit = fit_params(spec.rvs(100_000, rng), spec.family)
        errors[name] = max(abs(fit.params[k] / v - 1) for k, v in spec.params.items())
    gm = fit_gain_mixture(DEFAULT_GAINS.sample(100_000, rng))
    errors["|g|"] = max(abs(gm.mu / DEFAULT_GAINS.mu - 1), abs(gm.sigma / DEFAULT_GAINS.sigma - 1))
    errors["|g| weight"] = abs(gm.pi1 - DEFAULT_GAINS.pi1)
    truth = default_length_mixture(lattice)
    lm = fit_length_mixture(truth.sample(100_000, rng), lattice.L, lattice.N)
    errors["d"] = max(abs(getattr(lm, k) / getattr(truth, k) - 1) for k in ("lam0", "k0", "k1", "sigma1", "mu1"))
    errors["d weight"] = abs(lm.pi0 - truth.pi0)
    return errors


SELECTION_N = 10_000
SELECTION_BOOT = 99
REPETITIONS = 50


def _selection_populations():
    lattice = lattice_for(FrequencyGrid.reference())
    lm = default_length_mixture(lattice)
    return {
        "a0": [DEFAULT_A0],
        "a1": [DEFAULT_A1],
        "N": [DEFAULT_N],
        "A": [DEFAULT_A],
        # the continuous part of the gain mixture
        "|g|": [DEFAULT_GAINS.lognormal],
        # both components of the length mixture: short paths and d_max - d
        "d": [lm.weibull, lm.gev],
    }


def test_criterion_5_distribution_closure(record):
    errors = _recovery(np.random.default_rng(5))
    recovery_ok = all(v <= 0.05 for k, v in errors.items() if "weight" not in k) and all(
        v <= 0.01 for k, v in errors.items() if "weight" in k
    )
    hits = {}
    for name, specs in _selection_populations().items():
        wins = 0
        for rep in range(REPETITIONS):
            ok_rep = True
            for j, spec in enumerate(specs):
                rng = np.random.default_rng(np.random.SeedSequence(55, spawn_key=(rep, j, len(name))))
                x = spec.rvs(SELECTION_N, rng)
                sel = select_distribution(x, CATALOG, n_boot=SELECTION_BOOT, seed=rep)
                ok_rep &= sel.best.family == spec.family
            wins += ok_rep
        hits[name] = wins
    selection_ok = all(w >= 0.9 * REPETITIONS for w in hits.values())
    worst = max(errors, key=lambda k: errors[k])
    record(
        5,
        recovery_ok and selection_ok,
        f"worst recovery error {worst}={errors[worst]:.4f}; generating family chosen "
        + ", ".join(f"{k} {w}/{REPETITIONS}" for k, w in hits.items()),
    )
    assert recovery_ok, errors
    assert selection_ok, hits


def test_criterion_6_acf_targets(record, corpus):
    lattice = lattice_for(FrequencyGrid.reference())
    _, entries, _ = corpus
    s = corpus_acf([e.params for e in entries if e.ok], lattice)
    m8 = float(s.mean[8:].max())
    m40 = float(s.mean[40:].max())
    ok = m8 < 0.5 and m40 < 0.3
    record(6, ok, f"max R(n) for n>=8: {m8:.4f}; for n>=40: {m40:.4f}")
    assert ok


INVARIANT_TESTS = [
    "tests/test_synth.py::test_linearity_in_gains",
    "tests/test_wls.py::test_nrmse_scale_invariance",
    "tests/test_attenuation.py::test_scale_equivariance",
    "tests/test_decimation.py::test_normalize_property",
    "tests/test_decimation.py::test_threshold_and_shrinkage",
    "tests/test_decimation.py::test_normalization_matches_resolved_gains",
    "tests/test_decimation.py::test_determinism",
    "tests/test_generator.py::test_parameter_set_invariants",
    "tests/test_io.py::test_archive_round_trip_is_bit_exact",
    "tests/test_distributions.py::test_gev_tends_to_gumbel",
    "tests/test_mixtures.py::test_gain_weights_sum_to_one",
    "tests/test_mixtures.py::test_length_weights_sum_to_one",
    "tests/test_dependence.py::test_acf_matches_definition",
    "tests/test_pipeline.py::test_worker_count_does_not_change_results",
    "tests/test_pipeline.py::test_processing_order_does_not_change_results",
]


def test_criterion_7_invariant_suites(record):
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *INVARIANT_TESTS]
    runs = [subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True) for _ in range(2)]
    summaries = [r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:] for r in runs]
    ok = all(r.returncode == 0 for r in runs)
    record(7, ok, f"{len(INVARIANT_TESTS)} property suites, two runs: {summaries[0]} / {summaries[1]}")
    assert ok, runs[0].stdout[-3000:]


# the default regression coefficients substituted by hand
A0_PROBES = [(-40.0, 1.17595e-3), (-20.0, 4.9463e-4), (-60.0, 1.85727e-3)]
N_PROBES = [((0.5, -30.0), -2.01335), ((1.0, -20.0), 135.9604), ((2.0, -40.0), 231.5199)]
A_PROBES = [(0.0, 0.82517), (-10.0, 0.28485760553579303), (-30.0, 0.03394662457731146)]


def test_criterion_8_regression_evaluators(record):
    rel = []
    for G, v in A0_PROBES:
        rel.append(abs(float(A0_VS_GAIN.evaluate(G)) / v - 1))
    for x, v in N_PROBES:
        rel.append(abs(float(PATHS_VS_SPREAD_GAIN.evaluate(*x)) / v - 1))
    for G, v in A_PROBES:
        rel.append(abs(float(A_VS_GAIN.evaluate(G)) / v - 1))
    ok = max(rel) <= 1e-6
    record(8, ok, f"9 probes, worst relative error {max(rel):.2e}")
    assert ok


def test_closed_loop_attenuation_moments(corpus):
    # generating vs recovered a0 population moments, 10% tolerance
    params, entries, _ = corpus
    gen = np.array([p.a0 for p in params])
    fit = np.array([e.params.a0 for e in entries if e.ok])
    print(f"a0 mean generated {gen.mean():.4e} recovered {fit.mean():.4e}; "
          f"sd generated {gen.std(ddof=1):.4e} recovered {fit.std(ddof=1):.4e}")
    assert fit.mean() == pytest.approx(gen.mean(), rel=0.10)
    assert fit.std(ddof=1) == pytest.approx(gen.std(ddof=1), rel=0.10)
