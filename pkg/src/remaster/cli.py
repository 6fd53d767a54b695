"""Command-line interface.

Subcommands: degrade, build-dataset, eval, train, restore, gen-banks.
Exit codes: 0 success, 1 usage error, 2 runtime failure. A JSON config file
may supply any flag's value; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

DEFAULT_SEED = 1234


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.exit_code_on_error if hasattr(self, "exit_code_on_error") else 1)


def _add_config_flag(sub):
    sub.add_argument("--config", default=None, help="JSON file supplying defaults for any flag")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="remaster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("degrade", help="apply one named degradation to a WAV")
    p.add_argument("--in", dest="in_path", help="input WAV")
    p.add_argument("--out", dest="out_path", help="output WAV")
    p.add_argument("--effect", help="degradation kind, e.g. clip, warm, small")
    p.add_argument("--seed", type=int, default=None, help=f"rng seed (default {DEFAULT_SEED})")
    p.add_argument("--banks", default=None, help="banks dir (needed for mic/real effects)")
    _add_config_flag(p)

    p = sub.add_parser("build-dataset", help="render degraded/clean pairs and a manifest")
    p.add_argument("--corpus", help="directory of source WAVs")
    p.add_argument("--out", dest="out_path", help="output dataset directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="parallel clip workers (default 1)")
    p.add_argument("--banks", default=None, help="banks dir (default: synthetic in-memory banks)")
    _add_config_flag(p)

    p = sub.add_parser("eval", help="score processed audio against a manifest")
    p.add_argument("--manifest", help="manifest.jsonl path")
    p.add_argument("--processed", help="directory of processed WAVs (matched by basename)")
    p.add_argument("--report", help="output JSON report path")
    p.add_argument("--workers", type=int, default=None)
    _add_config_flag(p)

    p = sub.add_parser("train", help="train the restoration model on a dataset")
    p.add_argument("--config", default=None, help="JSON training config (lr, steps, dims, ...)")
    p.add_argument("--data", help="dataset directory containing manifest.jsonl")
    p.add_argument("--checkpoint", help="output checkpoint path")
    p.add_argument("--steps", type=int, default=None, help="training steps (default 500)")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("restore", help="restore a degraded WAV")
    p.add_argument("--in", dest="in_path", help="input WAV")
    p.add_argument("--out", dest="out_path", help="output WAV")
    p.add_argument("--prompt", default=None, help="instruction text (omit for auto-correction)")
    p.add_argument("--checkpoint", help="model checkpoint path")
    p.add_argument("--solver", choices=["euler", "rk4"], default=None, help="ODE solver (default euler)")
    p.add_argument("--steps", type=int, default=None, help="integration steps (default 10)")
    p.add_argument("--guidance", type=float, default=None, help="guidance scale w (default 1.0)")
    _add_config_flag(p)

    p = sub.add_parser("gen-banks", help="write synthetic mic TFs, room IRs, and the prompt bank")
    p.add_argument("--out", dest="out_path", help="output banks directory")
    p.add_argument("--seed", type=int, default=None)
    _add_config_flag(p)

    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    path = getattr(args, "config", None)
    if path:
        overrides = json.loads(Path(path).read_text())
        for key, value in overrides.items():
            attr = {"in": "in_path", "out": "out_path"}.get(key, key)
            if getattr(args, attr, None) is None:
                setattr(args, attr, value)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"missing required flags: {', '.join('--' + m.replace('_path', '') for m in missing)}")


class UsageError(Exception):
    pass


def _cmd_degrade(args) -> int:
    from .audio import load_audio, write_wav
    from .banks import load_banks, default_banks
    from .degrade import DegradationKind, apply_degradation

    _require(args, "in_path", "out_path", "effect")
    try:
        kind = DegradationKind(args.effect)
    except ValueError:
        raise UsageError(f"unknown effect {args.effect!r}; one of "
                         + ", ".join(k.value for k in DegradationKind))
    banks = load_banks(args.banks) if args.banks else default_banks()
    rng = np.random.default_rng(args.seed if args.seed is not None else DEFAULT_SEED)
    wf = load_audio(args.in_path)
    result = apply_degradation(wf, kind, rng, banks)
    if result is None:
        print("input not eligible for the stereo fold (channels too similar)", file=sys.stderr)
        return 2
    out, record = result
    write_wav(out, args.out_path)
    print(json.dumps(record.to_json()))
    return 0


def _cmd_build_dataset(args) -> int:
    from .dataset import build_dataset

    _require(args, "corpus", "out_path")
    manifest = build_dataset(
        args.corpus, args.out_path,
        seed=args.seed if args.seed is not None else DEFAULT_SEED,
        workers=args.workers or 1,
        banks_dir=args.banks,
    )
    print(str(manifest))
    return 0


def _cmd_eval(args) -> int:
    from .metrics import evaluate_dataset

    _require(args, "manifest", "processed", "report")
    if not Path(args.manifest).exists():
        raise UsageError(f"manifest not found: {args.manifest}")
    report = evaluate_dataset(args.manifest, args.processed, workers=args.workers or 1)
    report.save(args.report)
    print(json.dumps(report.to_json()))
    return 0


def _cmd_train(args) -> int:
    from .training import train_from_manifest

    _require(args, "data", "checkpoint")
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.seed is not None:
        overrides["seed"] = args.seed
    ckpt = train_from_manifest(Path(args.data) / "manifest.jsonl", args.checkpoint, overrides)
    print(str(ckpt))
    return 0


def _cmd_restore(args) -> int:
    from .audio import load_audio, write_wav
    from .flow import load_checkpoint
    from .restore import ChunkPlan, SolverConfig, restore_song

    _require(args, "in_path", "out_path", "checkpoint")
    model = load_checkpoint(args.checkpoint)
    solver = SolverConfig(kind=args.solver or "euler", steps=args.steps or 10,
                          guidance=args.guidance if args.guidance is not None else 1.0)
    wf = load_audio(args.in_path)
    out = restore_song(wf, args.prompt or "", model, solver, ChunkPlan())
    write_wav(out, args.out_path)
    return 0


def _cmd_gen_banks(args) -> int:
    from .banks import Banks, generate_mic_tf_bank, generate_rir_bank, write_banks
    from .prompts import write_prompt_bank

    _require(args, "out_path")
    seed = args.seed if args.seed is not None else 0
    banks = Banks(mic=generate_mic_tf_bank(seed=seed), rir=generate_rir_bank(seed=seed + 1))
    out = Path(args.out_path)
    write_banks(out, banks)
    write_prompt_bank(out / "prompts.json")
    print(str(out))
    return 0


_COMMANDS = {
    "degrade": _cmd_degrade,
    "build-dataset": _cmd_build_dataset,
    "eval": _cmd_eval,
    "train": _cmd_train,
    "restore": _cmd_restore,
    "gen-banks": _cmd_gen_banks,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _merge_config(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run())
