"""Batch command-line surface.

Subcommands:

  validate         force-decode one utterance and classify its label
  partition        stamp partition labels into a metadata file
  mer              score hypothesis TSV against reference TSV
  subtitle-bounds  detect subtitle change points in a frame directory
  merge            merge segmentation candidates up to a duration limit
  subset           sample a training subset from metadata

Exit codes: 0 success (validate: strong label), 1 usage error, 2 I/O or
schema error, 3 weak label, 4 others. Every flag can also be given in a
``key = value`` config file via ``--config``; explicit flags win. All
reports are byte-deterministic; ``--stamp`` opts into a timestamp field.
``CLG_WORKERS`` caps worker parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

from . import __version__
from .decoder import extract_timestamps, force_decode
from .errors import LabelCheckError
from .graph import AlignConfig, build_alignment_graph
from .mer import mer_errors, read_utterance_tsv
from .metadata import (
    DEFAULT_MERGE_SECONDS,
    CandidateTuple,
    load_metadata,
    merge_candidates,
    partition_report,
    save_metadata,
)
from .posteriors import read_posteriors
from .subtitle import DEFAULT_THRESHOLD, detect_spans, load_frames
from .units import UnitInventory, tokenize_reference
from .validation import PartitionLabel, classify, confidence, select_training_subset

_LABEL_EXIT = {
    PartitionLabel.STRONG_LABEL: 0,
    PartitionLabel.WEAK_LABEL: 3,
    PartitionLabel.OTHERS: 4,
}

_DEFAULTS = {
    "p1": 2.3,
    "p2": 4.6,
    "threshold": DEFAULT_THRESHOLD,
    "max_seconds": DEFAULT_MERGE_SECONDS,
    "frame_shift_ms": 10.0,
    "seed": 0,
    "target_hours": 0.0,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this pipeline reserves 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _worker_count() -> int:
    env = os.environ.get("CLG_WORKERS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _load_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            cfg[key.strip().replace("-", "_")] = _parse_config_value(value.strip())
    return cfg


def _parse_config_value(text: str):
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _resolve(args, cfg: dict, name: str):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return _DEFAULTS.get(name)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="labelcheck", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="force-decode one utterance and classify it")
    p.add_argument("--posteriors", help="posterior matrix file (CPST format)")
    p.add_argument("--ref", help="reference transcript text")
    p.add_argument("--units", help="unit inventory file, one symbol per line")
    p.add_argument("--p1", type=float, help="deletion penalty (default 2.3)")
    p.add_argument("--p2", type=float, help="filler per-unit penalty (default 4.6)")
    p.add_argument("--beam", type=int, help="beam width; exact search when omitted")
    p.add_argument("--frame-shift-ms", type=float, dest="frame_shift_ms",
                   help="frame shift for timestamps (default 10)")
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.add_argument("--trace", help="write the per-frame best-cost TSV table here")
    p.add_argument("--stamp", action="store_true", default=None,
                   help="include a generation timestamp")
    p.add_argument("--config", help="key = value config file; flags win")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("partition", help="set segment subsets from confidences")
    p.add_argument("meta_in", help="input metadata JSON file")
    p.add_argument("meta_out", help="output metadata JSON file")
    p.add_argument("--config", help="key = value config file; flags win")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("mer", help="mixture error rate between two utterance TSVs")
    p.add_argument("ref_tsv", help="reference 'utt-id<TAB>text' file")
    p.add_argument("hyp_tsv", help="hypothesis 'utt-id<TAB>text' file")
    p.add_argument("--config", help="key = value config file; flags win")
    p.set_defaults(func=cmd_mer)

    p = sub.add_parser("subtitle-bounds", help="detect subtitle change points")
    p.add_argument("frames_dir", help="directory of PGM frames named by index")
    p.add_argument("--threshold", type=float, help="SSIM change threshold (default 0.8)")
    p.add_argument("--config", help="key = value config file; flags win")
    p.set_defaults(func=cmd_subtitle_bounds)

    p = sub.add_parser("merge", help="merge candidates until spans exceed a limit")
    p.add_argument("candidates_tsv", help="sorted 'start<TAB>end<TAB>phrase' file")
    p.add_argument("--max-seconds", type=float, dest="max_seconds",
                   help="span limit in seconds (default 8)")
    p.add_argument("--config", help="key = value config file; flags win")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("subset", help="sample a training subset from metadata")
    p.add_argument("--meta", help="metadata JSON file")
    p.add_argument("--which", choices=("S", "M", "L"))
    p.add_argument("--target-hours", type=float, dest="target_hours",
                   help="duration to accumulate (ignored for L)")
    p.add_argument("--seed", type=int, help="shuffle seed (default 0)")
    p.add_argument("--config", help="key = value config file; flags win")
    p.set_defaults(func=cmd_subset)

    return parser


def cmd_validate(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    posteriors_path = _resolve(args, cfg, "posteriors")
    ref_text = _resolve(args, cfg, "ref")
    units_path = _resolve(args, cfg, "units")
    missing = [
        name for name, value in
        (("--posteriors", posteriors_path), ("--ref", ref_text), ("--units", units_path))
        if value is None
    ]
    if missing:
        sys.stderr.write(f"labelcheck validate: missing {', '.join(missing)}\n")
        return 1

    inv = UnitInventory.from_file(units_path)
    with open(posteriors_path, "rb") as fh:
        post = read_posteriors(fh.read())
    ref_ids = tokenize_reference(ref_text, inv)
    align_cfg = AlignConfig(p1=float(_resolve(args, cfg, "p1")),
                            p2=float(_resolve(args, cfg, "p2")))
    graph = build_alignment_graph(ref_ids, inv, align_cfg)

    beam = _resolve(args, cfg, "beam")
    trace_path = _resolve(args, cfg, "trace")
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as trace:
            result = force_decode(post, graph, beam=beam, trace=trace)
    else:
        result = force_decode(post, graph, beam=beam)

    conf = confidence(ref_ids, result.hyp)
    label = classify(conf)
    shift = float(_resolve(args, cfg, "frame_shift_ms"))
    report = {
        "ref": [inv.symbol_of(u) for u in ref_ids],
        "hyp": [inv.symbol_of(u) for u in result.hyp],
        "num_frames": post.num_frames,
        "total_score": result.total_score,
        "ops": [
            {"op": e.kind, "unit": inv.symbol_of(e.unit), "ref_index": e.ref_index}
            for e in result.ops
        ],
        "confidence": conf,
        "label": label.value,
        "timestamps": [
            {"token": inv.symbol_of(u), "begin_ms": b, "end_ms": e}
            for u, b, e in extract_timestamps(result, shift)
        ],
    }
    if _resolve(args, cfg, "stamp"):
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    _emit(json.dumps(report, ensure_ascii=False, indent=2) + "\n",
          _resolve(args, cfg, "output"))
    return _LABEL_EXIT[label]


def cmd_partition(args) -> int:
    with open(args.meta_in, "rb") as fh:
        doc = load_metadata(fh.read())
    for audio in doc:
        for seg in audio.segments:
            seg.subset = classify(seg.confidence).value
    data = save_metadata(doc)
    with open(args.meta_out, "wb") as fh:
        fh.write(data)
    report = partition_report(doc)
    sys.stdout.write(f"strong_label\t{report.strong_hours:.2f}\n")
    sys.stdout.write(f"weak_label\t{report.weak_hours:.2f}\n")
    sys.stdout.write(f"others\t{report.others_hours:.2f}\n")
    sys.stdout.write(f"total\t{report.total_hours:.2f}\n")
    return 0


def cmd_mer(args) -> int:
    with open(args.ref_tsv, encoding="utf-8") as fh:
        refs = read_utterance_tsv(fh)
    with open(args.hyp_tsv, encoding="utf-8") as fh:
        hyps = read_utterance_tsv(fh)
    if set(refs) != set(hyps):
        only_ref = sorted(set(refs) - set(hyps))
        only_hyp = sorted(set(hyps) - set(refs))
        sys.stderr.write(
            "labelcheck mer: utterance ids differ "
            f"(only in ref: {only_ref[:5]}, only in hyp: {only_hyp[:5]})\n"
        )
        return 2

    utts = list(refs)
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        counts = list(pool.map(lambda utt: mer_errors(refs[utt], hyps[utt]), utts))
    total_errors = sum(err for err, _ in counts)
    total_tokens = sum(length for _, length in counts)
    for utt, (err, length) in zip(utts, counts):
        sys.stdout.write(f"{utt}\t{100.0 * err / length:.2f}\n")
    sys.stdout.write(f"MER\t{100.0 * total_errors / total_tokens:.2f}\n")
    return 0


def cmd_subtitle_bounds(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    threshold = float(_resolve(args, cfg, "threshold"))
    try:
        frames = load_frames(args.frames_dir)
    except ValueError as exc:
        sys.stderr.write(f"labelcheck subtitle-bounds: {exc}\n")
        return 2
    for span in detect_spans(frames, threshold):
        sys.stdout.write(f"{span.start_frame}\t{span.end_frame}\n")
    return 0


def cmd_merge(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    max_seconds = float(_resolve(args, cfg, "max_seconds"))
    cands = []
    with open(args.candidates_tsv, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                sys.stderr.write(
                    f"labelcheck merge: {args.candidates_tsv}:{lineno}: "
                    "expected 'start<TAB>end<TAB>phrase'\n"
                )
                return 2
            try:
                cands.append(CandidateTuple(float(parts[0]), float(parts[1]), parts[2]))
            except ValueError as exc:
                sys.stderr.write(
                    f"labelcheck merge: {args.candidates_tsv}:{lineno}: {exc}\n"
                )
                return 2
    for cand in merge_candidates(cands, max_seconds):
        sys.stdout.write(f"{cand.start:.2f}\t{cand.end:.2f}\t{cand.phrase}\n")
    return 0


def cmd_subset(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    meta_path = _resolve(args, cfg, "meta")
    which = _resolve(args, cfg, "which")
    if meta_path is None or which is None:
        sys.stderr.write("labelcheck subset: missing --meta or --which\n")
        return 1
    with open(meta_path, "rb") as fh:
        doc = load_metadata(fh.read())
    segments = [seg for audio in doc for seg in audio.segments]
    ids = select_training_subset(
        segments,
        float(_resolve(args, cfg, "target_hours")),
        str(which),
        int(_resolve(args, cfg, "seed")),
    )
    for sid in ids:
        sys.stdout.write(sid + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (LabelCheckError, OSError, ValueError) as exc:
        sys.stderr.write(f"labelcheck {args.command}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
