from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from src.core.config import RecognizerConfig, load_json_config
from src.core.dataset import load_dataset, save_dataset
from src.core.layout import Condition
from src.core.validate import ValidationError
from src.dsp.envelope import preprocess_gesture, preprocess_layout
from src.eval.bench import bench_recognition
from src.eval.protocols import EvalConfig, Protocol, run_protocol
from src.eval.report import write_report
from src.recognizer.matching import RecognizerError, check_templates, enroll, recognize
from src.recognizer.template_store import TemplateStore, load_template_store, save_template_store
from src.segmentation.segment import bounds_report, crop, segment_dataset
from src.synthgen.audit import separability_audit
from src.synthgen.generator import SynthSpec, generate, with_overrides

logger = logging.getLogger("src.app.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message: str):
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


# =========================================================
# Helpers
# =========================================================

def emit(obj: Any) -> None:
    """Machine-readable output goes to stdout, nothing else does."""
    print(json.dumps(obj, sort_keys=True))


def status(msg: str) -> None:
    print(msg, file=sys.stderr)


def require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) {', '.join(missing)}")


def recognizer_config(args: argparse.Namespace) -> RecognizerConfig:
    return RecognizerConfig(n=args.n, n_pc=args.n_pc)


def _add_recognizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=64, help="resampled points per channel")
    p.add_argument("--npc", dest="n_pc", type=int, default=50, help="principal components kept per template")


# =========================================================
# Subcommands
# =========================================================

def cmd_synth(args: argparse.Namespace) -> int:
    require(args, "seed", "out")
    base = load_json_config(args.spec) if args.spec else {}
    spec = with_overrides(
        SynthSpec.from_dict(base),
        seed=args.seed,
        classes=args.classes,
        trials_per_class=args.trials,
        participants=args.participants,
        noise_sigma=args.noise,
        duration_s=args.duration,
    )

    corpus = generate(spec, progress=True)
    save_dataset(args.out, corpus.layout, corpus.gestures)
    status(f"✅ Wrote {len(corpus.gestures)} gestures to {args.out}")

    audits: Dict[str, Any] = {}
    for participant in sorted({g.participant for g in corpus.gestures}):
        mine = [g for g in corpus.gestures if g.participant == participant and g.condition is Condition.PERSONALIZED]
        result = separability_audit(corpus.layout, mine)
        if not result.separable:
            logger.warning("Personalized gestures of %s are not separable (%d violation(s))", participant, result.violations)
        audits[participant] = result.to_dict()

    emit({
        "out": str(args.out),
        "gestures": len(corpus.gestures),
        "layout_hash": corpus.layout.fingerprint(),
        "spec": spec.to_dict(),
        "audit": audits,
    })
    return EXIT_OK


def cmd_segment(args: argparse.Namespace) -> int:
    require(args, "dataset", "out")
    ds = load_dataset(args.dataset)
    bounds = segment_dataset(ds.layout, ds.gestures, progress=True)
    cropped = [crop(g, b, ds.layout) for g, b in zip(ds.gestures, bounds)]
    save_dataset(args.out, ds.layout, cropped)

    bounds_path = Path(args.out) / "bounds.json"
    with bounds_path.open("w", encoding="utf-8") as f:
        json.dump(bounds_report(ds.gestures, bounds), f, indent=2)
    status(f"✅ Segmented {len(cropped)} gestures into {args.out}")
    emit({"out": str(args.out), "gestures": len(cropped), "bounds": str(bounds_path)})
    return EXIT_OK


def cmd_preprocess(args: argparse.Namespace) -> int:
    require(args, "dataset", "out")
    ds = load_dataset(args.dataset)
    emg_groups = args.emg_groups or [g.name for g in ds.layout.groups if g.is_emg()]
    for name in emg_groups:
        if name not in ds.layout.names:
            raise ValidationError(f"layout has no group named {name!r}")
    layout = preprocess_layout(ds.layout, emg_groups)
    gestures = [preprocess_gesture(g, ds.layout, emg_groups) for g in ds.gestures]
    save_dataset(args.out, layout, gestures)
    status(f"✅ Enveloped {', '.join(emg_groups) or 'no groups'} for {len(gestures)} gestures")
    emit({"out": str(args.out), "gestures": len(gestures), "emg_groups": list(emg_groups), "layout": layout.to_dict()})
    return EXIT_OK


def cmd_enroll(args: argparse.Namespace) -> int:
    require(args, "dataset", "out")
    ds = load_dataset(args.dataset)
    config = recognizer_config(args)
    picked = [
        g for g in ds.gestures
        if (args.participant is None or g.participant == args.participant)
        and (args.condition is None or g.condition.value == args.condition)
    ]
    templates = tuple(enroll(g, ds.layout, config) for g in picked)
    save_template_store(TemplateStore(config=config, layout=ds.layout, templates=templates), args.out)
    status(f"✅ Enrolled {len(templates)} template(s) into {args.out}")
    emit({
        "out": str(args.out),
        "templates": len(templates),
        "n": config.n,
        "nPC": config.n_pc,
        "channels": ds.layout.total_channels,
    })
    return EXIT_OK


def cmd_recognize(args: argparse.Namespace) -> int:
    require(args, "templates", "dataset")
    store = load_template_store(args.templates)
    check_templates(store.templates, store.layout.total_channels, store.config)
    ds = load_dataset(args.dataset)
    if ds.layout.fingerprint() != store.layout.fingerprint():
        raise RecognizerError("dataset layout does not match the layout the templates were enrolled with")

    if args.index is not None:
        if not 0 <= args.index < len(ds.gestures):
            raise RecognizerError(f"--index {args.index} out of range (dataset has {len(ds.gestures)} gestures)")
        result = recognize(ds.gestures[args.index], store.templates, ds.layout, store.config)
        emit(result.to_dict())
        return EXIT_OK

    rows = []
    for i, g in enumerate(ds.gestures):
        result = recognize(g, store.templates, ds.layout, store.config)
        rows.append({"index": i, "label": g.label, **result.to_dict()})
    emit(rows)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    require(args, "protocol", "dataset", "out", "seed")
    ds = load_dataset(args.dataset)
    config = EvalConfig(
        protocol=Protocol.parse(args.protocol),
        templates_T=tuple(args.T or ()),
        repetitions=args.reps,
        seed=args.seed,
        recognizer=recognizer_config(args),
        measure_timing=args.timing,
    )
    report = run_protocol(ds, config, progress=True)
    json_path, csv_path = write_report(report, args.out)
    status(f"✅ {config.protocol.value} report written to {json_path}")
    emit({
        "out": str(json_path),
        "csv": str(csv_path),
        "summary": report.summary,
        "timing": report.timing.to_dict() if report.timing else None,
    })
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    require(args, "seed")
    ds = load_dataset(args.dataset) if args.dataset else None
    result = bench_recognition(
        config=recognizer_config(args),
        template_count=args.templates_count,
        runs=args.runs,
        warmup=args.warmup,
        seed=args.seed,
        dataset=ds,
    )
    emit(result.to_dict())
    return EXIT_OK


# =========================================================
# Parser
# =========================================================

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON file of option defaults")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")

    parser = _Parser(prog="python -m src.app.cli", description="Biosignal gesture recognizer")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic gesture corpus")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--trials", type=int, default=None, help="personalized trials per class")
    p.add_argument("--participants", type=int, default=None)
    p.add_argument("--noise", type=float, default=None, help="noise sigma relative to the group scale")
    p.add_argument("--duration", type=float, default=None, help="recording length in seconds")
    p.add_argument("--spec", type=str, default=None, help="JSON SynthSpec; flags override it")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("segment", parents=[common], help="crop every gesture to its EMG burst")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("preprocess", parents=[common], help="replace EMG groups by their linear envelope")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--emg-groups", nargs="+", default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("enroll", parents=[common], help="enroll gestures into a template store")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--participant", type=str, default=None, help="e.g. P001")
    p.add_argument("--condition", type=str, default=None, choices=[c.value for c in Condition])
    _add_recognizer_flags(p)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("recognize", parents=[common], help="recognize dataset gestures against a template store")
    p.add_argument("--templates", type=str, default=None)
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--index", type=int, default=None)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("evaluate", parents=[common], help="run an evaluation protocol")
    p.add_argument("--protocol", type=str, default=None, choices=["ud", "var", "ui"] + [x.value for x in Protocol])
    p.add_argument("--T", dest="T", type=int, nargs="+", default=None, help="template counts per class")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--timing", action="store_true", help="time the full recognize path on the first repetition")
    _add_recognizer_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", parents=[common], help="time recognize against pre-enrolled templates")
    p.add_argument("--templates-count", type=int, default=9)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dataset", type=str, default=None)
    _add_recognizer_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def apply_config_file(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: Sequence[str]) -> argparse.Namespace:
    """Merge `--config` values under the explicit flags and re-parse."""
    sub = _subparser(parser, args.command)
    by_name: Dict[str, str] = {}
    for action in sub._actions:
        for opt in action.option_strings:
            by_name[opt.lstrip("-").replace("-", "_")] = action.dest
    for skip in ("config", "verbose", "h", "help"):
        by_name.pop(skip, None)

    data = load_json_config(args.config)
    unknown = sorted(k for k in data if k not in by_name)
    if unknown:
        raise UsageError(f"{args.config}: unknown option(s) {', '.join(unknown)}; valid: {', '.join(sorted(by_name))}")
    sub.set_defaults(**{by_name[k]: v for k, v in data.items()})
    return parser.parse_args(list(argv))


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = apply_config_file(parser, args, argv)
    except UsageError as e:
        status(f"❌ {e}")
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (ValueError, OSError) as e:
        status(f"❌ {e}")
        return EXIT_DATA

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    handler: Callable[[argparse.Namespace], int] = args.func
    try:
        return handler(args)
    except UsageError as e:
        status(f"❌ {e}")
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        status(f"❌ {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
