"""Command-line interface: ``insarlite <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime error.
Progress and diagnostics go to standard error; results go to files.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .baselines import boxcar_filter, ml_coherence
from .metrics import evaluate_dataset
from .network.checkpoint import load_checkpoint, save_checkpoint
from .network.gradcheck import grad_check
from .network.infer import infer
from .network.model import ModelSpec
from .network.train import TrainConfig, load_training_set, train
from .raster import SlcImage, form_interferogram, read_raster, write_raster
from .simulator import ALL_LABELS, SimConfig, generate_dataset

GRADCHECK_TOL = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _add_slc_io(p) -> None:
    for name in ("slc1-amp", "slc1-phase", "slc2-amp", "slc2-phase", "out-phase", "out-coh"):
        p.add_argument(f"--{name}", required=True, metavar="RST")


def _read_pair(args) -> tuple[SlcImage, SlcImage]:
    s1 = SlcImage(read_raster(args.slc1_amp).plane(), read_raster(args.slc1_phase).plane())
    s2 = SlcImage(read_raster(args.slc2_amp).plane(), read_raster(args.slc2_phase).plane())
    return s1, s2


def _write_outputs(args, phase, coh) -> None:
    write_raster(np.asarray(phase, np.float32), args.out_phase)
    write_raster(np.asarray(coh, np.float32), args.out_coh)


def _simulate(args) -> None:
    labels = ALL_LABELS if args.configs == "all" else [s.strip() for s in args.configs.split(",") if s.strip()]
    if not labels:
        raise UsageError("--configs is empty")
    configs = [SimConfig.from_label(lab, args.size, args.seed) for lab in labels]
    entries = generate_dataset(configs, args.count, args.out)
    _log(f"wrote {len(entries)} samples to {args.out}")


def _train(args) -> None:
    data = load_training_set(args.data)
    config = TrainConfig(iters=args.iters, batch=args.batch, patch=args.patch, lr=args.lr, seed=args.seed)
    spec = ModelSpec()
    out = Path(args.out)
    with open(out.with_name(out.name + ".log.jsonl"), "w", encoding="utf-8") as log:
        params, _, _ = train(data, config, spec, log_stream=log, on_log=lambda p, s, rec: _log(json.dumps(rec)))
    save_checkpoint(out, params, spec)
    _log(f"saved {out}")


def _infer(args) -> None:
    params, spec = load_checkpoint(args.model)
    phase, coh = infer(params, spec, *_read_pair(args))
    _write_outputs(args, phase, coh)


def _boxcar(args) -> None:
    s1, s2 = _read_pair(args)
    if args.window < 1 or args.window % 2 == 0:
        raise UsageError(f"--window must be a positive odd integer, got {args.window}")
    phase, _ = boxcar_filter(form_interferogram(s1, s2), args.window)
    _write_outputs(args, phase, ml_coherence(s1.amplitude, s2.amplitude, args.window))


def _eval(args) -> None:
    report = evaluate_dataset(args.pred, args.manifest)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    for m in report["grand"]["methods"]:
        _log(f"{m['name']}: phase_rmse={m['phase_rmse']:.4f} ssim={m['ssim']:.4f} coh_rmse={m['coh_rmse']:.4f}")


def _gradcheck(args) -> int:
    report = grad_check(ModelSpec.micro(), seed=args.seed)
    _log(f"max relative error {report.max_rel_error:.3e} over {report.checked} parameters")
    return 0 if report.passed(GRADCHECK_TOL) else 2


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="insarlite", description="InSAR phase filtering lab.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a simulated dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--configs", required=True, help="comma-separated labels such as S1-F2-NS, or 'all'")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("train", help="train the network on a manifest")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--patch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="single-threaded numerics")
    p.set_defaults(func=_train)

    p = sub.add_parser("infer", help="filter one SLC pair with a trained model")
    p.add_argument("--model", required=True)
    _add_slc_io(p)
    p.set_defaults(func=_infer)

    p = sub.add_parser("baseline", help="classical filters")
    bsub = p.add_subparsers(dest="method", required=True, parser_class=_Parser)
    b = bsub.add_parser("boxcar", help="windowed phasor average")
    b.add_argument("--window", type=int, default=5)
    _add_slc_io(b)
    b.set_defaults(func=_boxcar)

    p = sub.add_parser("eval", help="score predictions against a manifest")
    p.add_argument("--pred", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the micro model")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_gradcheck)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        limits = threadpool_limits(1) if getattr(args, "deterministic", False) else contextlib.nullcontext()
        with limits:
            status = args.func(args)
    except UsageError as exc:
        _log(str(exc))
        return 1
    except (OSError, ValueError, KeyError) as exc:
        _log(f"insarlite: error: {exc}")
        return 2
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
