"""Command-line front end.

Exit codes: 0 success, 1 at least one stimulus failed, 2 invalid knowledge
base or invalid option values, 3 unreadable input file.  Data goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import Counter
from dataclasses import dataclass

from .delta import (Kind, Stage, StimulusError, delta_categorize, explain, parse_stimuli,
                    result_to_json)
from .errors import KBError, ParseError, ProxytypeError
from .kb import EngineParams, KnowledgeBase, load_path

EXIT_OK, EXIT_PARTIAL, EXIT_KB, EXIT_IO = 0, 1, 2, 3

SWEEPABLE = ("theta_exemplar", "theta_coherence")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    grid: tuple[float, ...]

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.param!r}; choose one of {', '.join(SWEEPABLE)}")
        if not self.grid:
            raise ValueError("sweep grid is empty")
        for v in self.grid:
            if not 0 < v < 1:
                raise ValueError(f"grid value {v} outside (0, 1)")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly ascending")


def _unit_interval(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"{v} must lie in (0, 1)")
    return v


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{v} must be positive")
    return v


def _grid(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _diag(msg):
    print(msg, file=sys.stderr)


def _load_kb(path, lenient):
    """Returns (kb, None) or (None, exit code)."""
    try:
        return load_path(path, lenient), None
    except OSError as exc:
        _diag(f"error: cannot read {path}: {exc.strerror or exc}")
        return None, EXIT_IO
    except KBError as exc:
        _diag(f"error: {path}: {exc.kind} at {exc.location or '$'}: {exc.message}")
        return None, EXIT_KB


def _read_stimuli(path, kb, lenient):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        _diag(f"error: cannot read {path}: {exc.strerror or exc}")
        return None
    try:
        return parse_stimuli(raw, kb, lenient)
    except (ParseError, UnicodeDecodeError) as exc:
        if isinstance(exc, UnicodeDecodeError):
            exc = ParseError(f"not UTF-8: {exc}")
        return [StimulusError.from_exception(0, None, exc)]


def _params(kb: KnowledgeBase, args) -> EngineParams:
    return kb.params.replace(theta_exemplar=args.theta_exemplar,
                             theta_coherence=args.theta_coherence,
                             decay_k=args.decay_k)


def _run_batch(stimuli, kb, params):
    """One entry per stimulus: a result, or a StimulusError."""
    out = []
    for i, item in enumerate(stimuli):
        if isinstance(item, StimulusError):
            out.append(item)
            continue
        try:
            out.append(delta_categorize(item, kb, params))
        except ProxytypeError as exc:
            out.append(StimulusError.from_exception(i, item.id, exc))
    return out


def cmd_validate(args) -> int:
    kb, code = _load_kb(args.kb, args.lenient)
    if kb is None:
        print("1 finding")
        return code
    n_ex = sum(len(c.exemplars) for c in kb.concepts.values())
    print(f"{args.kb}: {len(kb.spaces)} spaces, {len(kb.concepts)} concepts, "
          f"{n_ex} exemplars; 0 findings")
    return EXIT_OK


def cmd_categorize(args) -> int:
    kb, code = _load_kb(args.kb, args.lenient)
    if kb is None:
        return code
    stimuli = _read_stimuli(args.stimuli, kb, args.lenient)
    if stimuli is None:
        return EXIT_IO
    results = _run_batch(stimuli, kb, _params(kb, args))
    failed = 0
    for r in results:
        if isinstance(r, StimulusError):
            failed += 1
            _diag(f"error: stimulus {r.stimulus or '#' + str(r.index)}: {r.kind}"
                  f"{' at ' + r.location if r.location else ''}: {r.message}")
            if args.format == "json":
                print(json.dumps(r.to_json()))
            else:
                print(f"{r.stimulus or '#' + str(r.index)}\tERROR\t{r.kind}")
            continue
        if args.format == "json":
            print(json.dumps(result_to_json(r)))
        else:
            score = (f"similarity={r.similarity!r}" if r.similarity is not None
                     else f"coherence={r.coherence!r}")
            print(f"{r.stimulus}\t{r.concept}\t{r.kind.value}\t{score}")
            if args.trace:
                print(explain(r))
    return EXIT_PARTIAL if failed else EXIT_OK


def sweep_table(stimuli, kb: KnowledgeBase, base: EngineParams, spec: SweepSpec):
    """Outcome counts per grid value.

    ``exemplar_at_scan`` counts exemplar answers decided by the thresholded
    exemplar scan, as opposed to the nearest-of-all fallback.
    """
    rows = []
    for value in spec.grid:
        params = base.replace(**{spec.param: value})
        counts = Counter()
        for r in _run_batch(stimuli, kb, params):
            if isinstance(r, StimulusError):
                counts["errors"] += 1
                continue
            counts[r.kind.value] += 1
            if r.kind is Kind.EXEMPLAR and r.resolved_at is Stage.EXEMPLAR_SCAN:
                counts["exemplar_at_scan"] += 1
        rows.append((value, counts))
    return rows


SWEEP_COLUMNS = ("Exemplar", "Prototype", "TheoryOverride", "exemplar_at_scan", "errors")


def cmd_sweep(args) -> int:
    try:
        spec = SweepSpec(args.param, args.grid)
    except ValueError as exc:
        _diag(f"error: {exc}")
        return EXIT_KB
    kb, code = _load_kb(args.kb, args.lenient)
    if kb is None:
        return code
    stimuli = _read_stimuli(args.stimuli, kb, args.lenient)
    if stimuli is None:
        return EXIT_IO
    rows = sweep_table(stimuli, kb, _params(kb, args), spec)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("param", "value") + SWEEP_COLUMNS)
    any_failed = False
    for value, counts in rows:
        writer.writerow((spec.param, repr(value)) + tuple(counts[c] for c in SWEEP_COLUMNS))
        any_failed |= counts["errors"] > 0
    return EXIT_PARTIAL if any_failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxytypes", description="Heterogeneous-representation categorizer.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate a knowledge base")
    p.add_argument("kb")
    p.add_argument("--lenient", action="store_true", help="ignore unknown fields")
    p.set_defaults(func=cmd_validate)

    def run_opts(p):
        p.add_argument("--kb", required=True)
        p.add_argument("--stimuli", required=True)
        p.add_argument("--theta-exemplar", type=_unit_interval)
        p.add_argument("--theta-coherence", type=_unit_interval)
        p.add_argument("--decay-k", type=_positive)
        p.add_argument("--lenient", action="store_true", help="ignore unknown fields")

    p = sub.add_parser("categorize", help="categorize a batch of stimuli")
    run_opts(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--trace", action="store_true", help="render decision traces (text mode)")
    p.set_defaults(func=cmd_categorize)

    p = sub.add_parser("sweep", help="outcome counts over a threshold grid, as CSV")
    run_opts(p)
    p.add_argument("--param", required=True, choices=SWEEPABLE)
    p.add_argument("--grid", required=True, type=_grid, help="comma-separated ascending values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
