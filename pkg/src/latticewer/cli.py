"""Command-line entry point: ``latticewer score|batch|stats``.

Exit codes: 0 success, 1 I/O failure, 2 malformed input data.
"""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .lattice import UnresolvedNormError
from .nlp_format import ManifestRow, ParseError, parse_manifest, parse_nlp
from .pipeline import load_hypothesis, load_reference, score, sidecar_in
from .report import (
    FileResult,
    aggregate,
    entity_distribution,
    format_pct,
    render_csv,
    render_histogram_csv,
    render_json,
    render_side_by_side,
)
from .transforms import EMPTY_RULES, TransformRuleSet, parse_synonyms, transform_coverage_stats

log = logging.getLogger("latticewer")

EXIT_OK = 0
EXIT_IO = 1
EXIT_DATA = 2


@dataclass
class RunConfig:
    mode: str
    ref_path: str | None = None
    hyp_path: str | None = None
    syn_path: str | None = None
    norm_path: str | None = None
    norm_dir: str | None = None
    manifest_path: str | None = None
    refs_glob: str | None = None
    json_out: str | None = None
    csv_out: str | None = None
    sbs_out: str | None = None
    stats_out: str | None = None
    hyp_format: str | None = None
    exclude_ids: list[str] = field(default_factory=list)
    parallelism: int = 1

    def __post_init__(self) -> None:
        required = {
            "score": ("ref_path", "hyp_path"),
            "batch": ("manifest_path", "json_out"),
            "stats": ("refs_glob", "stats_out"),
        }[self.mode]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.mode}: missing {', '.join(missing)}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")


def write_atomic(path: str | Path, data: bytes | str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_rules(path: str | None) -> TransformRuleSet:
    if path is None:
        return EMPTY_RULES
    return parse_synonyms(Path(path).read_bytes(), source=path)


def summary_line(summary) -> str:
    pct = format_pct(summary.wer)
    rate = f"{pct}%" if pct is not None else "undefined"
    return (
        f"WER: {rate} (S={summary.substitutions} D={summary.deletions} "
        f"I={summary.insertions} N={summary.ref_count})"
    )


def cmd_score(config: RunConfig) -> int:
    try:
        rules = load_rules(config.syn_path)
        doc = load_reference(config.ref_path, config.norm_path)
        hyp = load_hypothesis(config.hyp_path, config.hyp_format)
        result = score(doc, hyp, rules)
        if config.sbs_out:
            write_atomic(config.sbs_out, render_side_by_side(result.alignment, doc))
        if config.json_out:
            row = ManifestRow(doc.file_id, config.ref_path, config.hyp_path, "", 1, 1.0, "", 1)
            report = aggregate([FileResult(doc.file_id, result.summary, result.entities, row)])
            write_atomic(config.json_out, render_json(report))
    except (ParseError, UnresolvedNormError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    print(summary_line(result.summary))
    return EXIT_OK


def _score_row(row: ManifestRow, base: str, rules: TransformRuleSet, norm_dir: str | None):
    """Worker: score one manifest row; returns (FileResult, None) or (None, message)."""
    ref = Path(base, row.ref_path)
    hyp = Path(base, row.hyp_path)
    try:
        doc = load_reference(ref, sidecar_in(norm_dir, row.file_id), file_id=row.file_id)
        result = score(doc, load_hypothesis(hyp), rules)
    except (ParseError, UnresolvedNormError, OSError) as exc:
        return None, str(exc)
    return FileResult(row.file_id, result.summary, result.entities, row), None


def run_batch(
    manifest_path: str,
    rules: TransformRuleSet = EMPTY_RULES,
    norm_dir: str | None = None,
    exclude: list[str] | tuple[str, ...] = (),
    jobs: int = 1,
):
    """Score every manifest row and aggregate in manifest order."""
    manifest = parse_manifest(Path(manifest_path).read_bytes(), source=manifest_path)
    base = str(Path(manifest_path).parent)
    rows = list(manifest)
    args = (rows, [base] * len(rows), [rules] * len(rows), [norm_dir] * len(rows))
    if jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(rows))) as pool:
            outcomes = list(pool.map(_score_row, *args))
    else:
        outcomes = list(map(_score_row, *args))
    results, failures = [], []
    for row, (result, error) in zip(rows, outcomes):
        if error is None:
            results.append(result)
        else:
            failures.append((row.file_id, error))
    known = {row.file_id for row in rows}
    for fid in exclude:
        if fid not in known:
            log.warning("excluded file id %s is not in the manifest", fid)
    return aggregate(results, exclude=exclude, failures=failures)


def cmd_batch(config: RunConfig) -> int:
    try:
        rules = load_rules(config.syn_path)
        report = run_batch(
            config.manifest_path, rules, config.norm_dir, config.exclude_ids, config.parallelism
        )
    except ParseError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    for fid, message in report.failures:
        log.error("failed %s: %s", fid, message)
    try:
        write_atomic(config.json_out, render_json(report))
        if config.csv_out:
            write_atomic(config.csv_out, render_csv(report))
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    log.info("%s", summary_line(report.overall))
    return EXIT_DATA if report.failures else EXIT_OK


def cmd_stats(config: RunConfig) -> int:
    paths = sorted(glob.glob(config.refs_glob, recursive=True))
    if not paths:
        log.error("no reference files match %s", config.refs_glob)
        return EXIT_IO
    try:
        rules = load_rules(config.syn_path)
        docs = []
        for path in paths:
            file_id = Path(path).name.removesuffix(".nlp")
            sidecar = sidecar_in(config.norm_dir, file_id)
            if sidecar is None:
                docs.append(parse_nlp(Path(path).read_bytes(), file_id=file_id, source=path))
            else:
                docs.append(load_reference(path, sidecar, file_id=file_id))
        stats = transform_coverage_stats(docs, rules)
        hist = entity_distribution(docs)
    except ParseError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    lines = [
        f"files: {len(docs)}",
        f"tokens_total: {stats.tokens_total}",
        f"tokens_with_norm_candidates: {stats.tokens_with_norm_candidates} ({_pct(stats.tokens_with_norm_candidates, stats.tokens_total)})",
        f"tokens_covered_by_synonym_match: {stats.tokens_covered_by_synonym_match} ({_pct(stats.tokens_covered_by_synonym_match, stats.tokens_total)})",
    ]
    out = (
        "# coverage\nmetric,value\n"
        + "".join(f"{k},{v}\n" for k, v in stats.as_dict().items())
        + f"fraction_norm_pct,{_pct(stats.tokens_with_norm_candidates, stats.tokens_total)}\n"
        + f"fraction_syn_pct,{_pct(stats.tokens_covered_by_synonym_match, stats.tokens_total)}\n"
        + "\n# entities\n"
        + render_histogram_csv(hist)
    )
    try:
        write_atomic(config.stats_out, out)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    print("\n".join(lines))
    return EXIT_OK


def _pct(count: int, total: int) -> str:
    return f"{format_pct(Fraction(count, total) if total else Fraction(0))}%"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticewer", description="Lattice-based ASR word error rate scoring.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("score", help="score one hypothesis against one reference")
    p.add_argument("--ref", required=True, help=".nlp reference file")
    p.add_argument("--hyp", required=True, help="hypothesis (.txt or .ctm)")
    p.add_argument("--syn", help="synonym rules file (lhs|rhs per line)")
    p.add_argument("--norm", help="normalization sidecar JSON")
    p.add_argument("--sbs", help="write side-by-side alignment here")
    p.add_argument("--json", help="write a JSON report here")
    p.add_argument("--hyp-format", choices=("txt", "ctm"), help="override extension-based detection")

    p = sub.add_parser("batch", help="score every file in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--syn")
    p.add_argument("--norm-dir", help="directory of <file_id>.norm.json sidecars")
    p.add_argument("--json", required=True)
    p.add_argument("--csv")
    p.add_argument("--exclude", default="", help="comma-separated file ids to leave out")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("stats", help="transform coverage and entity distribution")
    p.add_argument("--refs", required=True, help="glob of .nlp files")
    p.add_argument("--syn")
    p.add_argument("--norm-dir")
    p.add_argument("--out", required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.mode == "score":
        return RunConfig(
            "score",
            ref_path=args.ref,
            hyp_path=args.hyp,
            syn_path=args.syn,
            norm_path=args.norm,
            sbs_out=args.sbs,
            json_out=args.json,
            hyp_format=args.hyp_format,
        )
    if args.mode == "batch":
        return RunConfig(
            "batch",
            manifest_path=args.manifest,
            syn_path=args.syn,
            norm_dir=args.norm_dir,
            json_out=args.json,
            csv_out=args.csv,
            exclude_ids=[x for x in args.exclude.split(",") if x],
            parallelism=args.jobs,
        )
    return RunConfig(
        "stats", refs_glob=args.refs, syn_path=args.syn, norm_dir=args.norm_dir, stats_out=args.out
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    handler = {"score": cmd_score, "batch": cmd_batch, "stats": cmd_stats}[config.mode]
    return handler(config)


if __name__ == "__main__":
    sys.exit(main())
