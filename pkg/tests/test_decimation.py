import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpmfit.attenuation import AttenuationCoefficients, fit_attenuation
from mpmfit.channel import ChannelRecord
from mpmfit.decimation import (
    DecimationConfig,
    MpmParameterSet,
    contribution_scores,
    decimate,
    fit_channel,
    normalize,
)
from mpmfit.errors import ConvergenceError, DegenerateSampleError
from mpmfit.generator import GeneratorConfig, sample_parameter_set
from mpmfit.grid import FrequencyGrid, lattice_for
from mpmfit.synth import evaluate, evaluate_paths, synthesize
from mpmfit.wls import build_system, nrmse, path_loss, solve_gains, to_db

SMALL = FrequencyGrid(1e6, 0.5e6, 101)
SMALL_LAT = lattice_for(SMALL)


def small_channel(seed, n_paths=6):
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(SMALL_LAT.N, n_paths, replace=False))
    g = rng.uniform(0.1, 1, n_paths) * rng.choice([-1, 1], n_paths)
    a0, a1 = rng.uniform(5e-4, 2e-3), rng.uniform(0, 8e-12)
    h = evaluate_paths(SMALL.frequencies, SMALL_LAT.lengths[idx], g, a0, a1, A=0.1, nu=SMALL.nu)
    h = h * (1 + 0.02 * (rng.normal(size=SMALL.M) + 1j * rng.normal(size=SMALL.M)))
    return ChannelRecord(SMALL, h, id=f"small-{seed}")


def test_scores_without_attenuation(small_grid):
    lat = lattice_for(small_grid)
    ch = ChannelRecord(small_grid, np.ones(small_grid.M))
    s = build_system(ch, lat, AttenuationCoefficients(0.0, 0.0), np.array([1, 4, 9]))
    sc = contribution_scores(s, np.array([0.5, -0.2, 0.9]))
    np.testing.assert_allclose(sc, small_grid.M * np.array([0.5, 0.2, 0.9]))
    assert np.argmin(sc) == 1


def test_zero_gain_is_argmin(small_grid):
    lat = lattice_for(small_grid)
    s = build_system(ChannelRecord(small_grid, np.ones(small_grid.M)), lat, AttenuationCoefficients(1e-3, 0), np.arange(4))
    assert np.argmin(contribution_scores(s, np.array([0.3, 0.0, -0.1, 1.0]))) == 1


def test_longer_path_scores_lower(small_grid):
    lat = lattice_for(small_grid)
    s = build_system(ChannelRecord(small_grid, np.ones(small_grid.M)), lat, AttenuationCoefficients(1e-3, 0), np.array([3, 50]))
    sc = contribution_scores(s, np.array([0.5, 0.5]))
    assert sc[1] < sc[0]


@pytest.mark.parametrize(
    "gains, A, expected",
    [([0.2, -0.4], 0.4, [0.5, -1.0]), ([1.0], 1.0, [1.0]), ([-3, 1.5], 3.0, [-1.0, 0.5])],
)
def test_normalize_examples(gains, A, expected):
    a, g = normalize(gains)
    assert a == A
    np.testing.assert_array_equal(g, expected)


def test_normalize_all_zero():
    with pytest.raises(DegenerateSampleError):
        normalize([0.0, 0.0])


@given(st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), min_size=1, max_size=30))
def test_normalize_property(gains):
    A, g = normalize(gains)
    assert np.max(np.abs(g)) == 1.0
    np.testing.assert_array_equal(np.sign(g), np.sign(gains))
    np.testing.assert_allclose(A * g, gains, rtol=2e-16 * 2)


def test_parameter_set_invariants(small_grid):
    with pytest.raises(ValueError):
        MpmParameterSet(0, 0, 1.0, [0.0, 1.0], [0.5, 0.9], small_grid)
    with pytest.raises(ValueError):
        MpmParameterSet(0, 0, -1.0, [0.0], [1.0], small_grid)
    with pytest.raises(ValueError):
        MpmParameterSet(0, 0, 1.0, [2.0, 2.0], [1.0, 0.5], small_grid)
    p = MpmParameterSet(0, 0, 1.0, [0.0, 2.0], [1.0, -0.5], small_grid)
    assert p.n_paths == 2 and p.nu == small_grid.nu
    with pytest.raises(ValueError):
        p.gains[0] = 0.3


@pytest.mark.parametrize("kw", [{"nrmse_threshold_db": np.nan}, {"max_iterations": 0}, {"method": "greedy"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        DecimationConfig(**kw)


def test_five_path_channel(ref_grid, ref_lattice):
    idx = np.array([2, 60, 180, 400, 800])
    gains = np.array([1.0, -0.7, 0.5, -0.4, 0.3])
    h = evaluate_paths(ref_grid.frequencies, ref_lattice.lengths[idx], gains, 9.337e-4, 4.4536e-12, A=0.05)
    ch = ChannelRecord(ref_grid, h)
    params, report = fit_channel(ch)
    assert report.final_path_count <= 40
    assert np.all(np.isin(idx, params.indices))
    atten = fit_attenuation(ch, ref_lattice.L)
    sc = contribution_scores(build_system(ch, ref_lattice, atten, params.indices), params.gains)
    top = params.indices[np.argsort(-sc)[: idx.size]]
    assert set(top) == set(idx)
    assert report.final_nrmse_db <= -20


@pytest.mark.parametrize("c", [1.0, 0.03, 2.5])
def test_flat_channel(small_grid, c):
    ch = ChannelRecord(small_grid, np.full(small_grid.M, c + 0j))
    params, report = fit_channel(ch)
    assert report.final_path_count == 1
    np.testing.assert_array_equal(params.indices, [0])
    assert params.gains[0] == 1.0
    assert params.A == pytest.approx(c, rel=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_fast_engine_matches_reference(seed):
    ch = small_channel(seed)
    pf, rf = fit_channel(ch, DecimationConfig(method="fast"))
    pr, rr = fit_channel(ch, DecimationConfig(method="reference"))
    np.testing.assert_array_equal(rf.removal_order, rr.removal_order)
    np.testing.assert_array_equal(pf.indices, pr.indices)
    np.testing.assert_allclose(pf.gains, pr.gains, rtol=0, atol=1e-8)
    assert pf.A == pytest.approx(pr.A, rel=1e-8)


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([-15.0, -20.0, -25.0]))
def test_threshold_and_shrinkage(seed, thr):
    ch = small_channel(seed)
    params, report = fit_channel(ch, DecimationConfig(nrmse_threshold_db=thr))
    # threshold guarantee and reconstruction through the forward model
    assert report.final_nrmse_db <= thr
    assert to_db(nrmse(ch, evaluate(params))) <= thr + 1e-9
    # one path per iteration, last removal restored
    assert report.nrmse_trace_db.size == report.iterations
    assert report.final_path_count == SMALL_LAT.N - report.iterations + 1
    # removing a column never lowers the least-squares residual
    tr = report.nrmse_trace_db[np.isfinite(report.nrmse_trace_db)]
    assert np.all(np.diff(10 ** (tr / 20)) > -1e-9)
    if report.iterations:
        assert report.violating_nrmse_db > thr
        assert np.all(report.nrmse_trace_db[:-1] < thr)
        assert report.removal_order[-1] in params.indices
    assert np.max(np.abs(params.gains)) == 1.0


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_normalization_matches_resolved_gains(seed):
    ch = small_channel(seed)
    params, _ = fit_channel(ch)
    atten = fit_attenuation(ch, SMALL_LAT.L)
    g = solve_gains(build_system(ch, SMALL_LAT, atten, params.indices), ch)
    np.testing.assert_allclose(params.A * params.gains, g, rtol=4.5e-16, atol=0)


def test_determinism():
    ch = small_channel(7)
    a = fit_channel(ch)
    b = fit_channel(ch)
    np.testing.assert_array_equal(a[1].removal_order, b[1].removal_order)
    np.testing.assert_array_equal(a[0].gains, b[0].gains)
    assert a[0].A == b[0].A


def test_max_iterations_guard():
    ch = small_channel(3)
    with pytest.raises(ConvergenceError) as exc:
        fit_channel(ch, DecimationConfig(max_iterations=5))
    assert exc.value.iterations == 5


def test_budget_unreachable_keeps_full_lattice(caplog):
    rng = np.random.default_rng(0)
    # white noise on more frequencies than lattice paths cannot be fitted to -20 dB
    grid = FrequencyGrid(1e6, 0.5e6, 101)
    ch = ChannelRecord(grid, rng.normal(size=grid.M) + 1j * rng.normal(size=grid.M))
    lat = lattice_for(grid)
    atten = fit_attenuation(ch, lat.L)
    params, report = decimate(ch, lat, atten, DecimationConfig(nrmse_threshold_db=-200.0))
    assert report.iterations == 0 and report.final_path_count == lat.N
    assert "does not meet" in caplog.text


@pytest.mark.parametrize("index", [0, 1, 2])
def test_dominant_generating_paths_kept_with_true_attenuation(ref_lattice, index):
    # with the generating attenuation the model is exact, so every path
    # scoring above twice the exit score must survive
    cfg = GeneratorConfig(max_paths=50, min_abs_gain=0.05)
    p = sample_parameter_set(cfg, index)
    ch = synthesize(p, cfg.grid)
    q, r = decimate(ch, ref_lattice, AttenuationCoefficients(p.a0, p.a1))
    assert r.final_nrmse_db <= -20.0
    s = np.abs(p.A * p.gains) * path_loss(cfg.grid.frequencies, p.lengths, p.a0, p.a1).sum(axis=0)
    need = p.indices[s > 2 * r.exit_score]
    assert need.size > 0
    assert np.all(np.isin(need, q.indices))
