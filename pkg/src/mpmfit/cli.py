"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import DataError, MpmError, NumericalError
from .generator import channel_id, sample_parameter_set
from .io import (
    FORMATS,
    ManifestEntry,
    ParameterArchive,
    ToolConfig,
    config_to_dict,
    ingest,
    read_archive,
    read_config,
    read_manifest,
    write_archive,
    write_cfr_csv,
    write_manifest,
    write_touchstone_s2p,
)
from .pipeline import ArchiveEntry, corpus_statistics, fit_corpus, fit_record, format_report, write_report
from .synth import channel_metrics, synthesize

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
_KIND_EXIT = {"data": EXIT_DATA, "numerical": EXIT_NUMERICAL}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args) -> ToolConfig:
    cfg = read_config(args.config) if getattr(args, "config", None) else ToolConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg,
            generator=dataclasses.replace(cfg.generator, seed=args.seed),
            stats=dataclasses.replace(cfg.stats, seed=args.seed),
        )
    return cfg


def _entries_exit(entries: list[ArchiveEntry]) -> int:
    for e in entries:
        if not e.ok:
            return _KIND_EXIT.get(e.error_kind, EXIT_NUMERICAL)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    channel = ingest(args.input, args.format, nu=cfg.nu)
    entry = fit_record(channel, cfg.decimation)
    write_archive(args.out, ParameterArchive([entry], config_to_dict(cfg)))
    if not entry.ok:
        print(entry.error, file=sys.stderr)
        return _entries_exit([entry])
    r = entry.report
    print(f"{entry.id}: {r.final_path_count} paths, NRMSE {r.final_nrmse_db:.3f} dB")
    return EXIT_OK


def cmd_fit_corpus(args) -> int:
    cfg = _load_config(args)
    manifest = read_manifest(args.manifest)
    entries = fit_corpus(manifest, cfg.decimation, workers=args.workers)
    write_archive(args.out, ParameterArchive(entries, config_to_dict(cfg)))
    failed = [e for e in entries if not e.ok]
    print(f"fitted {len(entries) - len(failed)} of {len(entries)} channels")
    for e in failed:
        print(f"  failed [{e.error_kind}] {e.error}", file=sys.stderr)
    return _entries_exit(entries)


def cmd_stats(args) -> int:
    cfg = _load_config(args)
    archive = read_archive(args.input)
    report = corpus_statistics(archive.entries, options=cfg.stats)
    write_report(report, args.out)
    sys.stdout.write(format_report(report))
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    gen = cfg.generator
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmt = args.format or "cfr-csv"
    writer, ext = (write_cfr_csv, ".csv") if fmt == "cfr-csv" else (write_touchstone_s2p, ".s2p")
    entries, files = [], []
    for i in range(args.count):
        params = sample_parameter_set(gen, i)
        ch = synthesize(params, gen.grid, id=channel_id(i))
        path = out / f"{ch.id}{ext}"
        writer(path, ch)
        files.append(ManifestEntry(ch.id, path, fmt))
        entries.append(ArchiveEntry(ch.id, params=params, metrics=channel_metrics(ch)))
    write_manifest(out / "manifest.json", files, gen.grid)
    write_archive(out / "archive.json", ParameterArchive(entries, config_to_dict(cfg)))
    print(f"generated {args.count} channels in {out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = _load_config(args)
    ch = ingest(args.input, args.format, nu=cfg.nu)
    m = channel_metrics(ch)
    doc = {"id": ch.id, "average_gain_db": m.average_gain_db, "delay_spread_s": m.delay_spread_s}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mpmfit", description="Multipath model fitting and generation for power-line channels.")
    p.add_argument("--version", action="version", version=f"mpmfit {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=False):
        sp.add_argument("--config", help="JSON config file")
        if seed:
            sp.add_argument("--seed", type=int, help="override the configured seed")

    sp = sub.add_parser("fit", help="fit one measured response")
    sp.add_argument("--input", required=True)
    sp.add_argument("--format", choices=FORMATS)
    sp.add_argument("--out", required=True, help="archive file to write")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("fit-corpus", help="fit every channel of a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True, help="archive file to write")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_fit_corpus)

    sp = sub.add_parser("stats", help="population statistics of an archive")
    sp.add_argument("--input", required=True, help="archive file")
    sp.add_argument("--out", required=True, help="directory for report and data tables")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("generate", help="draw random channels")
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--format", choices=FORMATS)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("metrics", help="average gain and delay spread of a response")
    sp.add_argument("--input", required=True)
    sp.add_argument("--format", choices=FORMATS)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    if getattr(args, "count", 0) < 0:
        parser.error("--count must be >= 0")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MpmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
