"""Corpus-level orchestration: batch fitting and the statistics report."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .channel import ChannelRecord
from .decimation import DecimationConfig, fit_channel
from .errors import DataError, MpmError, NumericalError
from .grid import PathLattice, lattice_for
from .io import ArchiveEntry, CorpusManifest, ParameterArchive, StatsOptions
from .stats.dependence import conditional_histograms, corpus_acf
from .stats.distributions import CATALOG, population_moments
from .stats.goodness import select_distribution
from .stats.mixtures import fit_gain_mixture, fit_length_mixture
from .stats.regression import regression_A, regression_N, regression_a0
from .synth import channel_metrics

log = logging.getLogger(__name__)


def error_kind(exc: BaseException) -> str:
    if isinstance(exc, NumericalError):
        return "numerical"
    if isinstance(exc, DataError):
        return "data"
    return "internal"


def fit_record(channel: ChannelRecord, config: DecimationConfig | None = None) -> ArchiveEntry:
    """Fit one channel; failures are captured in the entry instead of raised."""
    try:
        metrics = channel_metrics(channel)
        params, report = fit_channel(channel, config)
    except MpmError as exc:
        return ArchiveEntry(channel.id, error=f"channel {channel.id!r}: {exc}", error_kind=error_kind(exc))
    return ArchiveEntry(channel.id, params=params, report=report, metrics=metrics)


def _fit_loaded(args) -> ArchiveEntry:
    load, entry_id, config = args
    try:
        channel = load()
    except MpmError as exc:
        return ArchiveEntry(entry_id, error=f"channel {entry_id!r}: {exc}", error_kind=error_kind(exc))
    return fit_record(channel, config)


class _ManifestLoader:
    # picklable stand-in for a closure over (manifest, entry)
    def __init__(self, manifest: CorpusManifest, index: int):
        self.manifest = manifest
        self.index = index

    def __call__(self) -> ChannelRecord:
        return self.manifest.load(self.manifest.entries[self.index])


class _Constant:
    def __init__(self, channel: ChannelRecord):
        self.channel = channel

    def __call__(self) -> ChannelRecord:
        return self.channel


def _run(jobs, workers: int) -> list[ArchiveEntry]:
    if workers <= 1 or len(jobs) <= 1:
        return [_fit_loaded(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order, whatever the completion order
        return list(pool.map(_fit_loaded, jobs))


def fit_channels(
    channels: Sequence[ChannelRecord], config: DecimationConfig | None = None, workers: int = 1
) -> list[ArchiveEntry]:
    """Fit in-memory channels; entries follow the input order."""
    return _run([(_Constant(c), c.id, config) for c in channels], workers)


def fit_corpus(
    manifest: CorpusManifest, config: DecimationConfig | None = None, workers: int = 1
) -> list[ArchiveEntry]:
    """Fit every manifest entry, continuing past per-channel failures."""
    jobs = [(_ManifestLoader(manifest, i), e.id, config) for i, e in enumerate(manifest.entries)]
    entries = _run(jobs, workers)
    for e in entries:
        if not e.ok:
            log.warning("%s", e.error)
    return entries


# ------------------------------------------------------------------- stats

PARAMETERS = ("a0", "a1", "A", "N")


@dataclass
class StatsReport:
    """Population statistics of a fitted corpus.

    ``moments`` and ``distributions`` are keyed by parameter name (``a0``,
    ``a1``, ``A``, ``N``, ``|g|``, ``d``); the gain and length entries are
    mixtures.
    """

    channel_count: int
    moments: dict[str, tuple[float, float]]
    distributions: dict[str, dict[str, Any]]
    regressions: dict[str, dict[str, Any]]
    skipped: dict[str, str] = field(default_factory=dict)
    acf: Any = None
    histograms: Any = None

    def to_dict(self) -> dict:
        return {
            "channel_count": self.channel_count,
            "moments": {k: {"mean": m, "std": s} for k, (m, s) in self.moments.items()},
            "distributions": self.distributions,
            "regressions": self.regressions,
            "skipped": self.skipped,
        }


def _selection_record(sel) -> dict:
    b = sel.best
    return {
        "family": b.family,
        "params": dict(b.spec.params),
        "p_value": b.p_value,
        "ad_statistic": b.ad_statistic,
        "log_likelihood": b.log_likelihood,
        "rule": sel.rule,
        "candidates": {
            f: {"p_value": c.p_value, "ad_statistic": c.ad_statistic, "log_likelihood": c.log_likelihood}
            for f, c in sel.candidates.items()
        },
    }


def _attempt(skipped: dict, key: str, fn: Callable):
    try:
        return fn()
    except MpmError as exc:
        skipped[key] = str(exc)
        return None


def corpus_statistics(entries: Sequence[ArchiveEntry], lattice: PathLattice | None = None,
                      options: StatsOptions | None = None) -> StatsReport:
    """Moments, distribution selection, mixtures, regressions, ACF and histograms."""
    options = options or StatsOptions()
    ok = [e for e in entries if e.ok and e.params is not None]
    if not ok:
        raise DataError("archive holds no successfully fitted channels")
    params = [e.params for e in ok]
    lattice = lattice_for(params[0].grid) if lattice is None else lattice
    pops = {
        "a0": np.array([p.a0 for p in params]),
        "a1": np.array([p.a1 for p in params]),
        "A": np.array([p.A for p in params]),
        "N": np.array([p.n_paths for p in params], dtype=float),
    }
    gains = np.concatenate([np.abs(p.gains) for p in params])
    lengths = np.concatenate([p.lengths for p in params])
    skipped: dict[str, str] = {}

    moments = {}
    for k, v in {**pops, "|g|": gains, "d": lengths}.items():
        m = _attempt(skipped, f"moments:{k}", lambda v=v: population_moments(v))
        if m is not None:
            moments[k] = m

    families = options.families or CATALOG
    dists: dict[str, dict[str, Any]] = {}
    for k, v in pops.items():
        sel = _attempt(
            skipped, f"distribution:{k}",
            lambda v=v: select_distribution(v, families, n_boot=options.n_boot, seed=options.seed,
                                            alpha=options.alpha, screen=options.screen),
        )
        if sel is not None:
            dists[k] = _selection_record(sel)
    gm = _attempt(skipped, "distribution:|g|", lambda: fit_gain_mixture(gains))
    if gm is not None:
        dists["|g|"] = {
            "family": "log-normal + point mass at 1",
            "params": {"pi0": gm.weights[0], "mu": gm.mu, "sigma": gm.sigma, "pi1": gm.pi1},
        }
    lm = _attempt(skipped, "distribution:d", lambda: fit_length_mixture(lengths, lattice.L, lattice.N, options.split_m))
    if lm is not None:
        dists["d"] = {
            "family": "weibull + reflected gev",
            "params": {"pi0": lm.pi0, "lam0": lm.lam0, "k0": lm.k0, "pi1": lm.pi1,
                       "k1": lm.k1, "sigma1": lm.sigma1, "mu1": lm.mu1, "d_max": lm.d_max},
        }

    regs: dict[str, dict[str, Any]] = {}
    with_metrics = [e for e in ok if e.metrics is not None]
    if with_metrics:
        G = np.array([e.metrics.average_gain_db for e in with_metrics])
        ds_us = np.array([e.metrics.delay_spread_s for e in with_metrics]) * 1e6
        a0 = np.array([e.params.a0 for e in with_metrics])
        A = np.array([e.params.A for e in with_metrics])
        N = np.array([e.params.n_paths for e in with_metrics], dtype=float)
        for key, fn in (
            ("a0(G)", lambda: regression_a0(G, a0)),
            ("N(ds,G)", lambda: regression_N(ds_us, G, N)),
            ("A(G)", lambda: regression_A(G, A)),
        ):
            r = _attempt(skipped, f"regression:{key}", fn)
            if r is not None:
                regs[key] = {"form": r.form, "coefficients": list(r.coefficients)}
    else:
        skipped["regressions"] = "no channel metrics in archive"

    acf = _attempt(skipped, "acf", lambda: corpus_acf(params, lattice))
    hist = _attempt(skipped, "histograms", lambda: conditional_histograms(params, lattice))
    return StatsReport(len(ok), moments, dists, regs, skipped, acf, hist)


def _g(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return f"{x:.6g}"


def format_report(report: StatsReport) -> str:
    """Plain-text tables: moments, fitted distributions, regressions."""
    lines = [f"channels: {report.channel_count}", "", "Mean and standard deviation",
             f"{'parameter':<10}{'mean':>16}{'std':>16}"]
    for k, (m, s) in report.moments.items():
        lines.append(f"{k:<10}{_g(m):>16}{_g(s):>16}")
    lines += ["", "Fitted distributions", f"{'parameter':<10}{'family':<32}{'p-value':>10}  parameters"]
    for k, d in report.distributions.items():
        ps = ", ".join(f"{n}={_g(v)}" for n, v in d["params"].items())
        lines.append(f"{k:<10}{d['family']:<32}{_g(d.get('p_value')):>10}  {ps}")
    lines += ["", "Regressions", f"{'model':<10}{'form':<14}{'alpha':>14}{'beta':>14}{'gamma':>14}"]
    for k, r in report.regressions.items():
        c = list(r["coefficients"]) + [None] * (3 - len(r["coefficients"]))
        lines.append(f"{k:<10}{r['form']:<14}" + "".join(f"{_g(v):>14}" for v in c))
    if report.skipped:
        lines += ["", "Skipped"] + [f"{k}: {v}" for k, v in report.skipped.items()]
    return "\n".join(lines) + "\n"


def write_report(report: StatsReport, out_dir) -> list[Path]:
    """Write ``report.json``, ``report.txt`` and the tabular ACF and histogram files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "report.json"
    p.write_text(json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n")
    written.append(p)
    p = out / "report.txt"
    p.write_text(format_report(report))
    written.append(p)
    if report.acf is not None:
        a = report.acf
        p = out / "gain_acf.tsv"
        np.savetxt(p, np.column_stack([a.lags, a.mean, a.lower, a.upper]), delimiter="\t",
                   header="lag\tmean\tmin\tmax", comments="", fmt=["%d", "%.10g", "%.10g", "%.10g"])
        written.append(p)
    if report.histograms is not None:
        for name, t in zip(("length_given_paths.tsv", "gain_given_length.tsv"), report.histograms):
            p = out / name
            rl, rh = np.meshgrid(t.row_edges[:-1], t.col_edges[:-1], indexing="ij")
            ru, cu = np.meshgrid(t.row_edges[1:], t.col_edges[1:], indexing="ij")
            rows = np.column_stack([rl.ravel(), ru.ravel(), rh.ravel(), cu.ravel(), t.table.ravel()])
            np.savetxt(p, rows, delimiter="\t", header="row_lo\trow_hi\tcol_lo\tcol_hi\tvalue", comments="",
                       fmt="%.10g")
            written.append(p)
    return written


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def archive_from_entries(entries, config: dict | None = None) -> ParameterArchive:
    return ParameterArchive(list(entries), config or {})
