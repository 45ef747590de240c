"""File formats: measured responses, corpus manifests, parameter archives, config.

``cfr-csv``
    Header ``freq_hz,re,im`` then one ``frequency,real,imaginary`` row per
    sample on a uniform grid.
``touchstone-s2p``
    Version 1 two-port Touchstone. ``S21`` is taken as the channel response.
    RI, MA and DB data formats and the HZ/KHZ/MHZ/GHZ units are accepted.

Archives and manifests are JSON. Every float in an archive is written
twice, as a decimal for reading and as its ``float.hex`` bit pattern, and
the bit pattern is what is read back.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .channel import ChannelRecord
from .decimation import DecimationConfig, FitReport, MpmParameterSet
from .errors import ChecksumError, DataError, GridError, ParseError
from .generator import DEFAULT_LENGTH_PARAMS, GeneratorConfig
from .grid import DEFAULT_EPS_R, DEFAULT_NU, FrequencyGrid, lattice_for
from .stats.distributions import DistributionSpec
from .stats.mixtures import GainMixture, LengthMixture
from .synth import ChannelMetrics

CSV_HEADER = ("freq_hz", "re", "im")
FORMATS = ("cfr-csv", "touchstone-s2p")
ARCHIVE_SCHEMA = 1
MANIFEST_SCHEMA = 1

# ------------------------------------------------------------------ ingest


def _grid(freqs: np.ndarray, nu: float, path) -> FrequencyGrid:
    try:
        return FrequencyGrid.from_frequencies(freqs, nu=nu)
    except GridError as exc:
        raise GridError(f"{path}: {exc}") from exc


def read_cfr_csv(path, nu: float = DEFAULT_NU, id: str | None = None) -> ChannelRecord:
    path = Path(path)
    rows: list[tuple[float, float, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)!r}", line=1, path=str(path))
        for row in reader:
            line = reader.line_num
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=line, path=str(path))
            try:
                vals = tuple(float(v) for v in row)
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", line=line, path=str(path)) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("NaN or Inf value", line=line, path=str(path))
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", line=1, path=str(path))
    a = np.array(rows)
    grid = _grid(a[:, 0], nu, path)
    return ChannelRecord(grid, a[:, 1] + 1j * a[:, 2], id=path.stem if id is None else id, meta={"source": str(path)})


def write_cfr_csv(path, channel: ChannelRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f, h in zip(channel.frequencies, channel.samples):
            w.writerow((repr(float(f)), repr(float(h.real)), repr(float(h.imag))))


_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def read_touchstone_s2p(path, nu: float = DEFAULT_NU, id: str | None = None) -> ChannelRecord:
    path = Path(path)
    unit, fmt = 1e9, "MA"  # version 1 defaults
    seen_option = False
    records: list[list[float]] = []
    pending: list[float] = []
    pending_line = 0
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("!", 1)[0].strip()
            if not text:
                continue
            if text.startswith("#"):
                if seen_option:
                    continue  # only the first option line counts
                seen_option = True
                for tok in text[1:].upper().split():
                    if tok in _UNITS:
                        unit = _UNITS[tok]
                    elif tok in ("RI", "MA", "DB"):
                        fmt = tok
                    elif tok not in ("S", "R") and not _is_number(tok):
                        raise ParseError(f"unsupported option {tok!r}", line=line_no, path=str(path))
                continue
            try:
                vals = [float(t) for t in text.split()]
            except ValueError:
                raise ParseError(f"non-numeric token in {text!r}", line=line_no, path=str(path)) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("NaN or Inf value", line=line_no, path=str(path))
            if not pending:
                pending_line = line_no
            pending.extend(vals)
            if len(pending) > 9:
                raise ParseError(f"expected 9 values per frequency, got {len(pending)}", line=line_no, path=str(path))
            if len(pending) == 9:
                records.append(pending)
                pending = []
    if pending:
        raise ParseError(f"incomplete record ({len(pending)} of 9 values)", line=pending_line, path=str(path))
    if not records:
        raise ParseError("no data records", line=1, path=str(path))
    a = np.array(records)
    x, y = a[:, 3], a[:, 4]  # S21 (v1 order: S11, S21, S12, S22)
    if fmt == "RI":
        h = x + 1j * y
    else:
        mag = x if fmt == "MA" else 10.0 ** (x / 20.0)
        h = mag * np.exp(1j * np.deg2rad(y))
    grid = _grid(a[:, 0] * unit, nu, path)
    return ChannelRecord(grid, h, id=path.stem if id is None else id, meta={"source": str(path)})


def write_touchstone_s2p(path, channel: ChannelRecord) -> None:
    """RI-format file with ``S21 = S12 = H`` and zero reflections."""
    with open(path, "w") as fh:
        fh.write("# HZ S RI R 50\n")
        for f, h in zip(channel.frequencies, channel.samples):
            re, im = float(h.real), float(h.imag)
            fh.write(f"{float(f)!r} 0 0 {re!r} {im!r} {re!r} {im!r} 0 0\n")


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def ingest(path, format: str | None = None, nu: float = DEFAULT_NU, id: str | None = None) -> ChannelRecord:
    """Read a measured response; ``format`` defaults from the file extension."""
    path = Path(path)
    if format is None:
        format = "touchstone-s2p" if path.suffix.lower() == ".s2p" else "cfr-csv"
    if format == "cfr-csv":
        return read_cfr_csv(path, nu, id)
    if format == "touchstone-s2p":
        return read_touchstone_s2p(path, nu, id)
    raise DataError(f"unknown input format {format!r}; expected one of {FORMATS}")


# ---------------------------------------------------------------- manifest


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: Path
    format: str = "cfr-csv"
    sha256: str | None = None


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]
    grid: FrequencyGrid | None = None

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DataError("manifest channel ids are not unique")

    def load(self, entry: ManifestEntry, nu: float = DEFAULT_NU) -> ChannelRecord:
        """Verify the checksum, read the file and check it against the declared grid."""
        if entry.sha256 is not None:
            got = sha256(entry.path)
            if got != entry.sha256:
                raise ChecksumError(f"channel {entry.id!r}: checksum mismatch for {entry.path}")
        grid_nu = self.grid.nu if self.grid is not None else nu
        ch = ingest(entry.path, entry.format, nu=grid_nu, id=entry.id)
        if self.grid is not None and not _same_grid(ch.grid, self.grid):
            raise GridError(f"channel {entry.id!r}: grid {ch.grid} differs from the manifest grid {self.grid}")
        return ch


def _same_grid(a: FrequencyGrid, b: FrequencyGrid, rtol: float = 1e-6) -> bool:
    return (
        a.M == b.M
        and math.isclose(a.f0, b.f0, rel_tol=rtol)
        and math.isclose(a.delta_f, b.delta_f, rel_tol=rtol)
        and a.nu == b.nu
    )


def grid_to_dict(grid: FrequencyGrid) -> dict:
    return {"f0": grid.f0, "delta_f": grid.delta_f, "M": grid.M, "nu": grid.nu}


def grid_from_dict(d: dict) -> FrequencyGrid:
    return FrequencyGrid(float(d["f0"]), float(d["delta_f"]), int(d["M"]), float(d.get("nu", DEFAULT_NU)))


def read_manifest(path) -> CorpusManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=str(path)) from None
    base = path.parent
    try:
        entries = tuple(
            ManifestEntry(
                id=str(c["id"]),
                path=(base / c["path"]),
                format=c.get("format", "cfr-csv"),
                sha256=c.get("sha256"),
            )
            for c in doc["channels"]
        )
        grid = grid_from_dict(doc["grid"]) if doc.get("grid") else None
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed manifest: {exc}", path=str(path)) from None
    return CorpusManifest(entries, grid)


def write_manifest(path, entries, grid: FrequencyGrid | None = None) -> None:
    """Write a manifest with checksums; entry paths are stored relative to it."""
    path = Path(path)
    base = path.parent.resolve()
    chans = []
    for e in entries:
        p = Path(e.path).resolve()
        chans.append(
            {"id": e.id, "path": os.path.relpath(p, base), "format": e.format, "sha256": e.sha256 or sha256(p)}
        )
    doc = {"schema_version": MANIFEST_SCHEMA, "grid": grid_to_dict(grid) if grid else None, "channels": chans}
    path.write_text(json.dumps(doc, indent=2) + "\n")


# ----------------------------------------------------------------- archive


def _f(x: float | None):
    if x is None:
        return None
    x = float(x)
    return {"value": x if math.isfinite(x) else str(x), "hex": x.hex()}


def _unf(d) -> float | None:
    if d is None:
        return None
    return float.fromhex(d["hex"])


def _farr(a) -> dict:
    a = np.asarray(a, dtype=float).reshape(-1)
    return {"values": a.tolist(), "hex": [float(v).hex() for v in a]}


def _unfarr(d) -> np.ndarray:
    return np.array([float.fromhex(h) for h in d["hex"]], dtype=float)


def params_to_dict(p: MpmParameterSet) -> dict:
    return {
        "a0": _f(p.a0),
        "a1": _f(p.a1),
        "A": _f(p.A),
        "K": _f(p.K),
        "nu": _f(p.nu),
        "n_paths": p.n_paths,
        "lengths": _farr(p.lengths),
        "gains": _farr(p.gains),
        "indices": None if p.indices is None else [int(i) for i in p.indices],
        "grid": {k: _f(v) if k != "M" else v for k, v in grid_to_dict(p.grid).items()},
    }


def params_from_dict(d: dict) -> MpmParameterSet:
    g = d["grid"]
    grid = FrequencyGrid(_unf(g["f0"]), _unf(g["delta_f"]), int(g["M"]), _unf(g["nu"]))
    return MpmParameterSet(
        a0=_unf(d["a0"]),
        a1=_unf(d["a1"]),
        A=_unf(d["A"]),
        lengths=_unfarr(d["lengths"]),
        gains=_unfarr(d["gains"]),
        grid=grid,
        K=_unf(d["K"]),
        nu=_unf(d["nu"]),
        indices=None if d.get("indices") is None else np.array(d["indices"], dtype=np.int64),
    )


def report_to_dict(r: FitReport) -> dict:
    return {
        "initial_path_count": r.initial_path_count,
        "final_path_count": r.final_path_count,
        "pre_decimation_nrmse_db": _f(r.pre_decimation_nrmse_db),
        "final_nrmse_db": _f(r.final_nrmse_db),
        "threshold_db": _f(r.threshold_db),
        "violating_nrmse_db": _f(r.violating_nrmse_db),
        "exit_score": _f(r.exit_score),
        "iterations": r.iterations,
        "method": r.method,
        "removal_order": [int(i) for i in r.removal_order],
        "nrmse_trace_db": _farr(r.nrmse_trace_db),
    }


def report_from_dict(d: dict) -> FitReport:
    return FitReport(
        initial_path_count=int(d["initial_path_count"]),
        final_path_count=int(d["final_path_count"]),
        pre_decimation_nrmse_db=_unf(d["pre_decimation_nrmse_db"]),
        final_nrmse_db=_unf(d["final_nrmse_db"]),
        threshold_db=_unf(d["threshold_db"]),
        nrmse_trace_db=_unfarr(d["nrmse_trace_db"]),
        removal_order=np.array(d["removal_order"], dtype=np.int64),
        violating_nrmse_db=_unf(d["violating_nrmse_db"]),
        exit_score=_unf(d["exit_score"]),
        method=d.get("method", "fast"),
    )


@dataclass
class ArchiveEntry:
    id: str
    params: MpmParameterSet | None = None
    report: FitReport | None = None
    metrics: ChannelMetrics | None = None
    error: str | None = None
    error_kind: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ParameterArchive:
    entries: list[ArchiveEntry] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    tool_version: str = __version__

    @property
    def ok(self) -> list[ArchiveEntry]:
        return [e for e in self.entries if e.ok]

    @property
    def failed(self) -> list[ArchiveEntry]:
        return [e for e in self.entries if not e.ok]


def entry_to_dict(e: ArchiveEntry) -> dict:
    d: dict[str, Any] = {"id": e.id, "status": "ok" if e.ok else "failed"}
    if e.params is not None:
        d["params"] = params_to_dict(e.params)
    if e.report is not None:
        d["report"] = report_to_dict(e.report)
    if e.metrics is not None:
        d["metrics"] = {
            "average_gain_db": _f(e.metrics.average_gain_db),
            "delay_spread_s": _f(e.metrics.delay_spread_s),
        }
    if e.error is not None:
        d["error"] = e.error
        d["error_kind"] = e.error_kind
    return d


def entry_from_dict(d: dict) -> ArchiveEntry:
    m = d.get("metrics")
    return ArchiveEntry(
        id=d["id"],
        params=params_from_dict(d["params"]) if "params" in d else None,
        report=report_from_dict(d["report"]) if "report" in d else None,
        metrics=ChannelMetrics(_unf(m["average_gain_db"]), _unf(m["delay_spread_s"])) if m else None,
        error=d.get("error"),
        error_kind=d.get("error_kind"),
    )


def write_archive(path, archive: ParameterArchive) -> None:
    doc = {
        "schema_version": ARCHIVE_SCHEMA,
        "tool": "mpmfit",
        "tool_version": archive.tool_version,
        "config": archive.config,
        "channels": [entry_to_dict(e) for e in archive.entries],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_archive(path) -> ParameterArchive:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=str(path)) from None
    if doc.get("schema_version") != ARCHIVE_SCHEMA:
        raise ParseError(f"unsupported archive schema {doc.get('schema_version')!r}", path=str(path))
    try:
        entries = [entry_from_dict(c) for c in doc["channels"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed archive entry: {exc}", path=str(path)) from None
    return ParameterArchive(entries, doc.get("config", {}), doc.get("tool_version", "unknown"))


# ------------------------------------------------------------------ config


@dataclass(frozen=True)
class StatsOptions:
    n_boot: int = 999
    alpha: float = 0.05
    seed: int = 0
    split_m: float = 1500.0
    screen: float | None = 1e-6
    families: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ToolConfig:
    """Everything a CLI run can be configured with."""

    decimation: DecimationConfig = field(default_factory=DecimationConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    stats: StatsOptions = field(default_factory=StatsOptions)
    nu: float = DEFAULT_NU
    K: float = 1.0
    eps_r: float = DEFAULT_EPS_R


def _scalar_spec(v):
    if v is None:
        return None
    if isinstance(v, (int, float)):
        return float(v)
    return DistributionSpec(v["family"], v["params"])


def _spec_to_json(v):
    if isinstance(v, DistributionSpec):
        return {"family": v.family, "params": dict(v.params)}
    return v


def generator_from_dict(d: dict, nu: float = DEFAULT_NU) -> GeneratorConfig:
    kw: dict[str, Any] = {}
    for name in ("a0", "a1", "A", "N"):
        if name in d:
            kw[name] = _scalar_spec(d[name])
    if "gains" in d:
        kw["gains"] = GainMixture(**d["gains"])
    grid = grid_from_dict(d["grid"]) if d.get("grid") else FrequencyGrid.reference(nu)
    kw["grid"] = grid
    if "lengths" in d and d["lengths"] is not None:
        ln = d["lengths"]
        if isinstance(ln, list):
            kw["lengths"] = ln
        else:
            params = {**DEFAULT_LENGTH_PARAMS, **ln}
            params.setdefault("d_max", lattice_for(grid).d_last)
            kw["lengths"] = LengthMixture(**params)
    for name in ("seed", "sign_flip_probability", "max_paths", "min_abs_gain", "fold_into_A"):
        if name in d:
            kw[name] = d[name]
    return GeneratorConfig(**kw)


def generator_to_dict(c: GeneratorConfig) -> dict:
    if isinstance(c.lengths, LengthMixture):
        lengths: Any = {k: getattr(c.lengths, k) for k in ("pi0", "lam0", "k0", "k1", "sigma1", "mu1", "d_max")}
    else:
        lengths = None if c.lengths is None else list(c.lengths)
    return {
        "a0": _spec_to_json(c.a0),
        "a1": _spec_to_json(c.a1),
        "A": _spec_to_json(c.A),
        "N": _spec_to_json(c.N),
        "gains": {"pi1": c.gains.pi1, "mu": c.gains.mu, "sigma": c.gains.sigma, "truncated": c.gains.truncated},
        "lengths": lengths,
        "seed": c.seed,
        "grid": grid_to_dict(c.grid),
        "sign_flip_probability": c.sign_flip_probability,
        "max_paths": c.max_paths,
        "min_abs_gain": c.min_abs_gain,
        "fold_into_A": c.fold_into_A,
    }


def config_to_dict(c: ToolConfig) -> dict:
    s = c.stats
    return {
        "model": {"nu": c.nu, "K": c.K, "eps_r": c.eps_r},
        "decimation": {
            "nrmse_threshold_db": c.decimation.nrmse_threshold_db,
            "max_iterations": c.decimation.max_iterations,
            "method": c.decimation.method,
        },
        "generator": generator_to_dict(c.generator),
        "stats": {
            "n_boot": s.n_boot,
            "alpha": s.alpha,
            "seed": s.seed,
            "split_m": s.split_m,
            "screen": s.screen,
            "families": None if s.families is None else list(s.families),
        },
    }


_SECTIONS = {"model", "decimation", "generator", "stats"}


def config_from_dict(d: dict) -> ToolConfig:
    unknown = set(d) - _SECTIONS
    if unknown:
        raise DataError(f"unknown config sections: {sorted(unknown)}")
    model = d.get("model", {})
    nu = float(model.get("nu", DEFAULT_NU))
    try:
        dec = DecimationConfig(**d.get("decimation", {}))
        gen = generator_from_dict(d.get("generator", {}), nu)
        st = dict(d.get("stats", {}))
        if st.get("families") is not None:
            st["families"] = tuple(st["families"])
        stats_opts = StatsOptions(**st)
    except (TypeError, ValueError, KeyError) as exc:
        raise DataError(f"invalid config: {exc}") from None
    return ToolConfig(dec, gen, stats_opts, nu, float(model.get("K", 1.0)), float(model.get("eps_r", DEFAULT_EPS_R)))


def read_config(path) -> ToolConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=str(path)) from None
    return config_from_dict(doc)


def write_config(path, config: ToolConfig) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")
